"""Initial data: Gaussians, sech solitons and plane-wave-modulated envelopes."""
from __future__ import annotations

import functools
import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .spectral import Field, Grid

INITIAL_KINDS = ("gaussian", "sech-soliton", "plane-modulated")


@dataclass(frozen=True)
class InitialSpec:
    """Description of initial data.

    ``boost`` is a wavevector (one entry per axis, or a scalar for all axes) and
    must lie on the grid's wavenumber lattice.  ``chirp`` multiplies the data by
    ``exp(-i chirp |x - center|^2 / 2)``; positive values focus.
    """

    kind: str = "gaussian"
    width: float = 1.0
    amplitude: float = 1.0
    center: tuple[float, ...] = (0.0,)
    boost: tuple[float, ...] = (0.0,)
    chirp: float = 0.0
    a: float = 1.0
    envelope: Optional[Callable[..., np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; choose from {INITIAL_KINDS}")
        if not self.width > 0:
            raise ValueError("width must be positive")
        object.__setattr__(self, "center", _tuple(self.center))
        object.__setattr__(self, "boost", _tuple(self.boost))


def _tuple(v) -> tuple[float, ...]:
    if np.ndim(v) == 0:
        return (float(v),)
    return tuple(float(x) for x in v)


def _per_axis(values: tuple[float, ...], dim: int, name: str) -> tuple[float, ...]:
    if len(values) == 1:
        return values * dim
    if len(values) != dim:
        raise ValueError(f"{name} needs 1 or {dim} entries, got {len(values)}")
    return values


def lattice_boost(grid: Grid, modes) -> tuple[float, ...]:
    """Wavevector with integer mode numbers ``modes`` on ``grid``."""
    modes = _per_axis(_tuple(modes), grid.dim, "boost_mode")
    return tuple(2 * math.pi * m / length for m, length in zip(modes, grid.lengths))


def check_on_lattice(grid: Grid, boost: tuple[float, ...]) -> None:
    for k, length in zip(_per_axis(boost, grid.dim, "boost"), grid.lengths):
        m = k * length / (2 * math.pi)
        if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)):
            raise ValueError(f"boost {k} is off the wavenumber lattice (mode {m:.6g}, L = {length})")


def make_initial(spec: InitialSpec, grid: Grid, time: float = 0.0, *,
                 check_lattice: bool = True) -> Field:
    """Sample ``spec`` on ``grid``.

    ``check_lattice=False`` allows an off-lattice boost, for sampling data that
    is negligible at the box edge on a grid other than the one it was built for.
    """
    boost = _per_axis(spec.boost, grid.dim, "boost")
    center = _per_axis(spec.center, grid.dim, "center")
    if check_lattice:
        check_on_lattice(grid, boost)
    shifted = [x - c for x, c in zip(grid.coords, center)]
    rho2 = sum(s * s for s in shifted)
    wave = np.exp(1j * sum(k * x for k, x in zip(boost, grid.coords)))

    if spec.kind == "gaussian":
        env = spec.amplitude * np.exp(-rho2 / (2 * spec.width ** 2))
    elif spec.kind == "sech-soliton":
        if grid.dim != 1:
            raise ValueError("the sech soliton is a one-dimensional profile")
        env = spec.a / np.cosh(spec.a * shifted[0])
    else:
        if spec.envelope is not None:
            env = spec.envelope(*shifted)
        else:
            env = spec.amplitude * functools.reduce(
                operator.mul, [1 / np.cosh(s / spec.width) for s in shifted])
    values = env * wave
    if spec.chirp:
        values = values * np.exp(-0.5j * spec.chirp * rho2)
    return Field(grid, np.broadcast_to(values, grid.shape), time)
