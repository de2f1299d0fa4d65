"""Strang split-step evolution of i u_t + 1/2 Lap u = lam c(t) |u|^(p-1) u, c(t) = t^beta."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import exponents
from .observables import ObservableRecord, _abs_pow, observe
from .spectral import Field, _require_finite, fft, ifft, propagator

DEFAULT_BLOWUP_CEILING = 1e6


@dataclass(frozen=True)
class NlsParams:
    """Dimension ``n``, power ``p``, coupling ``lam`` and coefficient exponent ``beta``."""

    n: int
    p: float
    lam: float
    beta: float = 0.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if not self.p > 1:
            raise ValueError(f"power p must exceed 1, got {self.p}")
        if not (math.isfinite(self.lam) and math.isfinite(self.beta)):
            raise ValueError("lam and beta must be finite")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def transformed(cls, n: int, p: float, lam: float) -> "NlsParams":
        """Parameters of the lens-transformed equation, beta = (n(p-1) - 4)/2."""
        beta = float(exponents.coefficient_exponent(n, Fraction(p).limit_denominator(10**6)))
        return cls(n, p, lam, beta)

    def coefficient(self, t: float) -> float:
        if self.beta == 0:
            return 1.0
        if t <= 0:
            raise ValueError(f"time coefficient t^{self.beta} needs t > 0, got t = {t}")
        return t ** self.beta


@dataclass(frozen=True)
class StepSchedule:
    t_start: float
    t_end: float
    dt: float
    samples_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.samples_every < 1:
            raise ValueError("samples_every must be a positive integer")
        span = self.t_end - self.t_start
        n = round(span / self.dt)
        if n < 1 or abs(n * self.dt - span) > 1e-9 * span:
            raise ValueError(f"dt = {self.dt} does not divide [{self.t_start}, {self.t_end}]")

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t_start) / self.dt)

    def time(self, k: int) -> float:
        return self.t_end if k == self.n_steps else self.t_start + k * self.dt

    def is_sample(self, k: int) -> bool:
        return k % self.samples_every == 0 or k == self.n_steps

    def validate_for(self, params: NlsParams) -> None:
        if params.beta != 0 and self.t_start <= 0:
            raise ValueError("a time-dependent coefficient needs t_start > 0")


@dataclass
class Trajectory:
    params: NlsParams
    schedule: Optional[StepSchedule]
    records: list[ObservableRecord] = field(default_factory=list)
    final_field: Optional[Field] = None
    fields: dict[float, Field] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


class BlowUpError(RuntimeError):
    """Evolution left the representable range; carries the partial trajectory."""

    def __init__(self, t: float, max_modulus: float, trajectory: Trajectory):
        super().__init__(f"numerical blow-up at t = {t:.6g} (max|u| = {max_modulus:.3e})")
        self.t = t
        self.max_modulus = max_modulus
        self.trajectory = trajectory


def _phase(u: np.ndarray, dt: float, params: NlsParams, t_mid: float) -> np.ndarray:
    theta = (params.lam * params.coefficient(t_mid) * dt) * _abs_pow(u, params.p - 1)
    # exp(-i theta) built from cos/sin: several times faster than complex exp
    rot = np.empty(theta.shape, dtype=np.complex128)
    np.cos(theta, out=rot.real)
    np.sin(theta, out=rot.imag)
    np.negative(rot.imag, out=rot.imag)
    return u * rot


def nonlinear_phase_step(f: Field, dt: float, params: NlsParams, t_mid: float) -> Field:
    """Exact flow of i u_t = lam c(t_mid) |u|^(p-1) u over ``dt``; modulus is untouched."""
    _require_finite(f.values)
    if params.lam == 0:
        return f
    return f.with_values(_phase(f.values, dt, params, t_mid))


class _Stepper:
    """Precomputed multipliers for repeated Strang steps of one size on one grid.

    The state is carried in spectral form between steps, so a step costs one
    inverse and one forward transform.
    """

    def __init__(self, grid, dt: float, params: NlsParams):
        self.dt = dt
        self.params = params
        self.half = propagator(grid, 0.5 * dt)
        self.full = propagator(grid, dt)
        self.half_masked = np.where(grid.dealias_mask, self.half, 0)
        self.linear = params.lam == 0

    def step(self, uh: np.ndarray, t: float) -> tuple[np.ndarray, float]:
        """Advance coefficients ``uh`` from ``t``; returns (new coefficients, max|u|)."""
        if self.linear:
            return self.full * uh, float("nan")
        w = ifft(self.half * uh)
        w = _phase(w, self.dt, self.params, t + 0.5 * self.dt)
        return self.half_masked * fft(w), float(np.max(np.abs(w)))


def strang_step(f: Field, t: float, dt: float, params: NlsParams) -> Field:
    """U(dt/2) o dealias o N(dt; c(t + dt/2)) o U(dt/2); negative dt steps backward.

    With ``lam == 0`` the nonlinear and dealiasing stages are skipped.
    """
    _require_finite(f.values)
    uh, _ = _Stepper(f.grid, dt, params).step(fft(f.values), t)
    return Field(f.grid, ifft(uh), t + dt)


Observer = Callable[[ObservableRecord, Field], None]


def evolve(phi: Field, params: NlsParams, schedule: StepSchedule,
           observer: Optional[Observer] = None, *, store_fields: bool = False,
           blowup_ceiling: float = DEFAULT_BLOWUP_CEILING) -> Trajectory:
    """Advance ``phi`` from ``schedule.t_start`` to ``schedule.t_end``.

    Observables are recorded at every ``samples_every``-th step and at the end.
    Raises :class:`BlowUpError` if max|u| exceeds ``blowup_ceiling`` or turns
    non-finite; the error carries everything recorded so far.
    """
    schedule.validate_for(params)
    _require_finite(phi.values)
    if phi.grid.dim != params.n:
        raise ValueError(f"grid dimension {phi.grid.dim} != params.n = {params.n}")
    grid = phi.grid
    traj = Trajectory(params, schedule)
    stepper = _Stepper(grid, schedule.dt, params)

    def sample(u: np.ndarray, t: float) -> None:
        f = Field(grid, u, t)
        rec = observe(f, params, t)
        traj.records.append(rec)
        if store_fields:
            traj.fields[t] = f
        if observer is not None:
            observer(rec, f)

    uh = fft(phi.values)
    t = schedule.t_start
    sample(phi.values, t)
    u = phi.values
    for k in range(1, schedule.n_steps + 1):
        uh, peak = stepper.step(uh, schedule.time(k - 1))
        t = schedule.time(k)
        if stepper.linear:
            peak = None
        elif not peak <= blowup_ceiling:
            raise BlowUpError(t, peak, traj)
        if schedule.is_sample(k):
            u = ifft(uh)
            if peak is None or not np.all(np.isfinite(u)):
                peak = float(np.max(np.abs(u)))
                if not peak <= blowup_ceiling:
                    raise BlowUpError(t, peak, traj)
            sample(u, t)
    traj.final_field = Field(grid, u, t)
    return traj
