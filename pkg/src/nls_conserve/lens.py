"""Pseudo-conformal (lens) transform between u(s, x) and v(1/s, x/s).

    u(s, x) = (i s)^(-n/2) exp(i |x|^2 / (2 s)) conj(v(1/s, x/s))

The image lives on the index lattice of the source grid with every length
divided by ``s``, so the map is exactly invertible and L^2-isometric without
any resampling.  Branch: (i s)^(n/2) = s^(n/2) exp(i pi n / 4).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .observables import BalanceReport, grad_norm_sq, lp1_norm_p1, weighted_J_norm_sq
from .spectral import Field, Grid, _require_finite


class LensResolutionError(ValueError):
    """The quadratic phase exp(i|x|^2/(2s)) is not resolved on the grid."""


@dataclass(frozen=True, eq=False)
class LensImage:
    field: Field
    source_time: float
    image_time: float

    @property
    def grid(self) -> Grid:
        return self.field.grid


def _branch(s: float, n: int) -> complex:
    return s ** (n / 2) * cmath.exp(1j * math.pi * n / 4)


def check_resolution(grid: Grid, s: float) -> None:
    """Require |x|_max / s <= k_max / 2 for the chirp exp(-i|x|^2/(2s))."""
    x_max = max(length / 2 for length in grid.lengths)
    if x_max / s > grid.k_max / 2:
        raise LensResolutionError(
            f"chirp at s = {s:g} unresolved: |x|_max/s = {x_max / s:.4g} > k_max/2 = {grid.k_max / 2:.4g}")


def lens_forward(u: Field, s: float | None = None, *, check: bool = True) -> LensImage:
    """Image v(1/s, .) of a state u(s, .); ``s`` defaults to ``u.time``."""
    s = u.time if s is None else float(s)
    if not s > 0:
        raise ValueError(f"lens transform needs s > 0, got {s}")
    _require_finite(u.values)
    if check:
        check_resolution(u.grid, s)
    n = u.grid.dim
    vals = np.conj(_branch(s, n) * np.exp(-0.5j * u.grid.r2 / s) * u.values)
    return LensImage(Field(u.grid.scaled(1.0 / s), vals, 1.0 / s), s, 1.0 / s)


def lens_inverse(image: LensImage) -> Field:
    """Exact inverse of :func:`lens_forward`: recovers u(s, .) on the source lattice."""
    s = image.source_time
    if not (s > 0 and image.image_time > 0):
        raise ValueError("lens image must have positive times")
    grid = image.grid.scaled(s)
    n = grid.dim
    vals = np.exp(0.5j * grid.r2 / s) * np.conj(image.field.values) / _branch(s, n)
    return Field(grid, vals, s)


def _check_pairing(u: Field, image: LensImage) -> None:
    s = image.source_time
    if abs(u.time - s) > 1e-12 * max(1.0, abs(s)):
        raise ValueError(f"image was taken at s = {s}, field is at t = {u.time}")
    if u.grid.points != image.grid.points or not np.allclose(
            np.array(image.grid.lengths) * s, u.grid.lengths, rtol=1e-12, atol=0):
        raise ValueError("image grid is not the source grid rescaled by 1/s")


def verify_tran01(u: Field, image: LensImage, p: float) -> tuple[BalanceReport, BalanceReport]:
    """Check the two norm identities of the lens at ``s = image.source_time``.

    1. ||grad v(1/s)||_2 = ||(x + i s grad) u(s)||_2
    2. ||v(1/s)||_{p+1} = s^(n(p-1)/(2(p+1))) ||u(s)||_{p+1}
    """
    _check_pairing(u, image)
    s, n = image.source_time, u.grid.dim
    grad_v = math.sqrt(grad_norm_sq(image.field))
    j_u = math.sqrt(weighted_J_norm_sq(u, s))
    lp_v = lp1_norm_p1(image.field, p) ** (1 / (p + 1))
    lp_u = lp1_norm_p1(u, p) ** (1 / (p + 1))
    scale = s ** (n * (p - 1) / (2 * (p + 1)))
    return BalanceReport.from_sides(grad_v, j_u), BalanceReport.from_sides(lp_v, scale * lp_u)


@dataclass(frozen=True, eq=False)
class EquivalenceResult:
    report: BalanceReport
    v_direct: Field
    v_lens: Field
    u_trajectory: object
    v_trajectory: object


def equivalence_experiment(phi, grid: Grid, params, t_tilde: float, t_final: float,
                           dt: float, samples_every: int = 100) -> EquivalenceResult:
    """Cross-check the untransformed flow against the transformed one.

    u is evolved under the untransformed equation on [t_tilde, t_final] from
    ``phi`` sampled on ``grid``.  v starts at 1/t_final from the lens image of
    u(t_final) and is evolved under the transformed equation up to 1/t_tilde.
    It is compared with the lens image of u(t_tilde), computed from ``phi``
    sampled on ``grid`` scaled by t_tilde/t_final: that image lands on exactly
    the lattice v lives on, so no resampling is involved.

    ``phi`` is an :class:`~nls_conserve.initial.InitialSpec` (or any callable
    ``grid -> complex array``).  The report has lhs = ||v_direct - v_lens||_2 and
    rhs = 0.
    """
    from .initial import InitialSpec, make_initial
    from .integrator import NlsParams, StepSchedule, evolve

    if not 0 < t_tilde < t_final:
        raise ValueError("need 0 < t_tilde < t_final")

    def sample(g: Grid, t: float, check: bool) -> Field:
        if isinstance(phi, InitialSpec):
            return make_initial(phi, g, t, check_lattice=check)
        return Field(g, phi(g), t)

    u_params = NlsParams(params.n, params.p, params.lam)
    v_params = NlsParams.transformed(params.n, params.p, params.lam)
    u_traj = evolve(sample(grid, t_tilde, True), u_params,
                    StepSchedule(t_tilde, t_final, dt, samples_every))
    v_start = lens_forward(u_traj.final_field).field
    v_traj = evolve(v_start, v_params, StepSchedule(1 / t_final, 1 / t_tilde, dt, samples_every))
    v_direct = v_traj.final_field
    v_lens = lens_forward(sample(grid.scaled(t_tilde / t_final), t_tilde, False)).field
    if v_lens.grid.points != v_direct.grid.points or not np.allclose(
            v_lens.grid.lengths, v_direct.grid.lengths, rtol=1e-13, atol=0):
        raise RuntimeError("lens lattices do not coincide")
    v_lens = Field(v_direct.grid, v_lens.values, v_lens.time)
    diff = Field(v_direct.grid, v_direct.values - v_lens.values)
    mismatch = math.sqrt(float(np.sum(np.abs(diff.values) ** 2)) * diff.grid.cell_volume)
    return EquivalenceResult(BalanceReport.from_sides(mismatch, 0.0), v_direct, v_lens,
                             u_traj, v_traj)
