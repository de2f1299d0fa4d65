"""Conserved and monitored functionals, their balance laws, and decay fitting.

Sign convention for momentum: ``P(u) = Im int u grad(conj u) dx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .spectral import Field, Grid, _gradient_values, _require_finite, fft, shell_mask


@dataclass(frozen=True)
class ObservableRecord:
    time: float
    mass: float
    momentum: tuple[float, ...]
    grad_norm_sq: float
    lp1_norm_p1: float
    energy: float
    weighted_J_sq: float
    variance: float
    boundary_leak: float

    def csv_row(self) -> list[str]:
        vals = [self.time, self.mass, *self.momentum, self.grad_norm_sq, self.lp1_norm_p1,
                self.energy, self.weighted_J_sq, self.variance, self.boundary_leak]
        return [repr(float(v)) for v in vals]

    @classmethod
    def from_csv_row(cls, row: dict[str, str]) -> "ObservableRecord":
        momentum = tuple(float(row[k]) for k in ("momentum_x", "momentum_y") if k in row)
        kw = {f.name: float(row[f.name]) for f in fields(cls) if f.name != "momentum"}
        return cls(momentum=momentum, **kw)


def csv_header(dim: int) -> list[str]:
    mom = ["momentum_x", "momentum_y"][:dim]
    return ["time", "mass", *mom, "grad_norm_sq", "lp1_norm_p1", "energy",
            "weighted_J_sq", "variance", "boundary_leak"]


@dataclass(frozen=True)
class BalanceReport:
    lhs: float
    rhs: float
    residual: float
    relative_residual: float

    @classmethod
    def from_sides(cls, lhs: float, rhs: float) -> "BalanceReport":
        lhs, rhs = float(lhs), float(rhs)
        res = lhs - rhs
        return cls(lhs, rhs, res, abs(res) / max(abs(lhs), abs(rhs), 1e-300))


def _norm_sq(values: np.ndarray) -> np.ndarray:
    return values.real ** 2 + values.imag ** 2


def mass(f: Field) -> float:
    _require_finite(f.values)
    return float(np.sum(_norm_sq(f.values))) * f.grid.cell_volume


def _momentum(grid: Grid, u: np.ndarray, grads: Sequence[np.ndarray]) -> tuple[float, ...]:
    out = []
    scale = math.sqrt(float(np.sum(_norm_sq(u)))) * grid.cell_volume
    for g in grads:
        z = np.sum(u * np.conj(g)) * grid.cell_volume
        # Re part is the integral of a total derivative: zero up to roundoff.
        bound = 1e-9 * scale * (math.sqrt(float(np.sum(_norm_sq(g)))) + 1.0)
        if abs(z.real) > bound + 1e-300:
            raise ArithmeticError(f"momentum integrand has real part {z.real:.3e}")
        out.append(float(z.imag))
    return tuple(out)


def momentum(f: Field) -> np.ndarray:
    _require_finite(f.values)
    return np.array(_momentum(f.grid, f.values, _gradient_values(f.grid, f.values)))


def spectral_momentum(f: Field) -> np.ndarray:
    """Plancherel form ``-volume * sum_k k |c_k|^2`` of the momentum."""
    c2 = _norm_sq(fft(f.values))
    return np.array([-f.grid.volume * float(np.sum(k * c2)) for k in f.grid.odd_wavenumbers])


def grad_norm_sq(f: Field) -> float:
    _require_finite(f.values)
    return sum(float(np.sum(_norm_sq(g))) for g in _gradient_values(f.grid, f.values)) \
        * f.grid.cell_volume


def _abs_pow(u: np.ndarray, power: float) -> np.ndarray:
    """|u|**power via (|u|^2)**(power/2); exact products for small even powers."""
    m2 = _norm_sq(u)
    if power == 2:
        return m2
    if power == 4:
        return m2 * m2
    if power == 6:
        return m2 * m2 * m2
    return m2 ** (0.5 * power)


def lp1_norm_p1(f: Field, p: float) -> float:
    """||u||_{L^{p+1}}^{p+1}."""
    _require_finite(f.values)
    return float(np.sum(_abs_pow(f.values, p + 1))) * f.grid.cell_volume


def lr_norm(f: Field, r: float) -> float:
    """Grid L^r norm with volume weights; ``r = inf`` is the grid maximum."""
    _require_finite(f.values)
    if math.isinf(r):
        return float(np.max(np.abs(f.values)))
    return (float(np.sum(_abs_pow(f.values, r))) * f.grid.cell_volume) ** (1.0 / r)


def energy_from_parts(grad_sq: float, lp1: float, p: float, lam: float) -> float:
    return 0.5 * grad_sq + (2.0 * lam / (p + 1.0)) * lp1


def energy(f: Field, params) -> float:
    """E(u) = 1/2 ||grad u||^2 + 2 lam/(p+1) ||u||_{p+1}^{p+1} (no time coefficient)."""
    return energy_from_parts(grad_norm_sq(f), lp1_norm_p1(f, params.p), params.p, params.lam)


def variance(f: Field) -> float:
    """||x u||^2 in box-centred coordinates."""
    _require_finite(f.values)
    return float(np.sum(f.grid.r2 * _norm_sq(f.values))) * f.grid.cell_volume


def _weighted_J(grid: Grid, u: np.ndarray, grads: Sequence[np.ndarray], t: float) -> float:
    total = 0.0
    for x, g in zip(grid.coords, grads):
        total += float(np.sum(_norm_sq(x * u + 1j * t * g)))
    return total * grid.cell_volume


def weighted_J_norm_sq(f: Field, t: float | None = None) -> float:
    """||(x + i t grad) u||^2; ``t`` defaults to the field's time stamp."""
    _require_finite(f.values)
    t = f.time if t is None else t
    if t == 0:
        return variance(f)
    return _weighted_J(f.grid, f.values, _gradient_values(f.grid, f.values), t)


def boundary_leak(f: Field) -> float:
    return float(np.max(np.abs(f.values[shell_mask(f.grid)])))


def observe(f: Field, params, t: float | None = None) -> ObservableRecord:
    """All observables of ``f`` in one pass (one forward transform)."""
    _require_finite(f.values)
    grid, u = f.grid, f.values
    t = f.time if t is None else float(t)
    dv = grid.cell_volume
    grads = _gradient_values(grid, u)
    g2 = sum(float(np.sum(_norm_sq(g))) for g in grads) * dv
    lp1 = float(np.sum(_abs_pow(u, params.p + 1))) * dv
    var = float(np.sum(grid.r2 * _norm_sq(u))) * dv
    return ObservableRecord(
        time=t,
        mass=float(np.sum(_norm_sq(u))) * dv,
        momentum=_momentum(grid, u, grads),
        grad_norm_sq=g2,
        lp1_norm_p1=lp1,
        energy=energy_from_parts(g2, lp1, params.p, params.lam),
        weighted_J_sq=var if t == 0 else _weighted_J(grid, u, grads, t),
        variance=var,
        boundary_leak=float(np.max(np.abs(u[shell_mask(grid)]))),
    )


# --- balance laws -------------------------------------------------------------

def source_integral(series: Iterable[tuple[float, float]], weight_exponent: float) -> float:
    """Trapezoidal quadrature of int s**weight_exponent * y(s) ds over the samples."""
    data = np.asarray(list(series), dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("source_integral needs at least two (time, value) samples")
    t, y = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return float(trapezoid(_weights(t, weight_exponent) * y, t))


def _weights(t: np.ndarray, weight_exponent: float) -> np.ndarray:
    if weight_exponent == 0:
        return np.ones_like(t)
    if weight_exponent < 0 and np.any(t <= 0):
        raise ValueError("negative weight exponent requires positive times")
    return t ** weight_exponent


def _columns(records: Sequence[ObservableRecord]) -> dict[str, np.ndarray]:
    names = ("time", "grad_norm_sq", "lp1_norm_p1", "weighted_J_sq", "variance")
    return {k: np.array([getattr(r, k) for r in records], dtype=float) for k in names}


def _running_integral(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return cumulative_trapezoid(y, t, initial=0.0)


def pc_sides(records: Sequence[ObservableRecord], params) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the pseudo-conformal law at every sampled time.

    lhs(t) = 1/2 ||(x + i t grad) u(t)||^2 + t^2 (2 lam/(p+1)) ||u(t)||_{p+1}^{p+1}
    rhs(t) = 1/2 ||x phi||^2 - lam (n(p-1) - 4)/(p+1) int_0^t s ||u(s)||_{p+1}^{p+1} ds
    """
    if params.beta != 0:
        raise ValueError("the pseudo-conformal law applies to the beta = 0 equation")
    c = _columns(records)
    t = c["time"]
    if t[0] != 0:
        raise ValueError("the pseudo-conformal law needs a run starting at t = 0")
    n, p, lam = params.n, params.p, params.lam
    lhs = 0.5 * c["weighted_J_sq"] + t ** 2 * (2 * lam / (p + 1)) * c["lp1_norm_p1"]
    coeff = lam * (n * (p - 1) - 4) / (p + 1)
    rhs = 0.5 * c["variance"][0] - coeff * _running_integral(t, t * c["lp1_norm_p1"])
    return lhs, rhs


def e1_sides(records: Sequence[ObservableRecord], params) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the energy balance for i v_t + 1/2 Lap v = lam t^beta |v|^(p-1) v.

    lhs(t) = E1(t), rhs(t) = E1(T1) + 2 lam beta/(p+1) int_T1^t s^(beta-1) ||v||_{p+1}^{p+1} ds
    with E1(t) = 1/2 ||grad v||^2 + t^beta (2 lam/(p+1)) ||v||_{p+1}^{p+1}.  At
    beta = (n(p-1) - 4)/2 the source coefficient equals lam (n(p-1) - 4)/(p+1).
    """
    c = _columns(records)
    t = c["time"]
    p, lam, beta = params.p, params.lam, params.beta
    coef_t = np.array([params.coefficient(s) for s in t])
    lhs = 0.5 * c["grad_norm_sq"] + coef_t * (2 * lam / (p + 1)) * c["lp1_norm_p1"]
    source = 2 * lam * beta / (p + 1)
    rhs = lhs[0] + source * _running_integral(t, _weights(t, beta - 1) * c["lp1_norm_p1"])
    return lhs, rhs


def _index_of(records: Sequence[ObservableRecord], t: float) -> int:
    times = np.array([r.time for r in records])
    tol = 1e-9 * max(1.0, float(np.max(np.abs(times))))
    hit = np.flatnonzero(np.abs(times - t) <= tol)
    if hit.size == 0:
        raise ValueError(f"t = {t} is not a sampled time in [{times[0]}, {times[-1]}]")
    return int(hit[0])


def pc_balance(trajectory, t: float) -> BalanceReport:
    """Pseudo-conformal balance at sampled time ``t`` of a beta = 0 run from t = 0."""
    i = _index_of(trajectory.records, t)
    lhs, rhs = pc_sides(trajectory.records[: i + 1], trajectory.params)
    return BalanceReport.from_sides(lhs[-1], rhs[-1])


def e1_balance(trajectory, t: float) -> BalanceReport:
    """Energy balance of the time-dependent-coefficient equation from T1 to ``t``."""
    i = _index_of(trajectory.records, t)
    lhs, rhs = e1_sides(trajectory.records[: i + 1], trajectory.params)
    return BalanceReport.from_sides(lhs[-1], rhs[-1])


def balance_series(trajectory, kind: str) -> list[BalanceReport]:
    """Balance report at every sampled time (``kind`` is ``"pc"`` or ``"e1"``)."""
    sides = {"pc": pc_sides, "e1": e1_sides}[kind]
    lhs, rhs = sides(trajectory.records, trajectory.params)
    return [BalanceReport.from_sides(a, b) for a, b in zip(lhs, rhs)]


def decay_fit(samples: Iterable[tuple[float, float]], fit_window: tuple[float, float]) -> float:
    """Least-squares slope of log(norm) against log(time) inside ``fit_window``."""
    data = np.asarray(list(samples), dtype=float)
    lo, hi = fit_window
    sel = data[(data[:, 0] >= lo) & (data[:, 0] <= hi)]
    if sel.shape[0] < 8:
        raise ValueError(f"decay_fit needs >= 8 samples in window, got {sel.shape[0]}")
    if np.any(sel[:, 0] <= 0) or np.any(sel[:, 1] <= 0):
        raise ValueError("decay_fit needs positive times and norms")
    slope, _ = np.polyfit(np.log(sel[:, 0]), np.log(sel[:, 1]), 1)
    return float(slope)


def relative_drift(values: Sequence[float], scale: float | None = None) -> float:
    """max |v_i - v_0| / scale, with scale defaulting to |v_0|."""
    arr = np.asarray(values, dtype=float)
    ref = abs(arr[0]) if scale is None else scale
    return float(np.max(np.abs(arr - arr[0]))) / max(ref, 1e-300)
