"""Periodic-box discretization and Fourier-diagonal operators.

A :class:`Grid` samples the box ``[-L/2, L/2)`` per axis at
``x_j = -L/2 + j L/N``.  Spectral coefficients are stored in FFT order and
normalised so that a constant field ``c`` has zero-mode coefficient ``c``;
with this convention the continuum mass is ``volume * sum |c_k|^2``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft as sfft


class NonFiniteFieldError(FloatingPointError):
    """A field contains NaN or Inf entries."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in one or two dimensions."""

    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        points = tuple(int(n) for n in self.points)
        lengths = tuple(float(length) for length in self.lengths)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lengths", lengths)
        if len(points) not in (1, 2) or len(points) != len(lengths):
            raise ValueError("grid must be 1-D or 2-D with one length per axis")
        for n in points:
            if n < 8 or n % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {n}")
        for length in lengths:
            if not (length > 0 and math.isfinite(length)):
                raise ValueError(f"box length must be positive and finite, got {length}")

    @classmethod
    def uniform(cls, dim: int, n: int, length: float) -> "Grid":
        return cls((n,) * dim, (length,) * dim)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(length / n for length, n in zip(self.lengths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def k_max(self) -> float:
        """Smallest per-axis Nyquist wavenumber pi/dx."""
        return min(math.pi / h for h in self.spacing)

    def scaled(self, factor: float) -> "Grid":
        """Same point counts, every length multiplied by ``factor``."""
        return Grid(self.points, tuple(length * factor for length in self.lengths))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(-length / 2 + np.arange(n) * (length / n)
                     for n, length in zip(self.points, self.lengths))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable against fields (index order 'ij')."""
        return tuple(np.meshgrid(*self.axes, indexing="ij", sparse=True))

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(x * x for x in self.coords)

    @cached_property
    def mode_indices(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers m in [-N/2, N/2), FFT order, broadcastable."""
        idx = [np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64) for n in self.points]
        return tuple(np.meshgrid(*idx, indexing="ij", sparse=True))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(2 * np.pi * m / length for m, length in zip(self.mode_indices, self.lengths))

    @cached_property
    def odd_wavenumbers(self) -> tuple[np.ndarray, ...]:
        # Nyquist zeroed so odd-order derivatives of real data stay real.
        out = []
        for k, m, n in zip(self.wavenumbers, self.mode_indices, self.points):
            out.append(np.where(m == -n // 2, 0.0, k))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k * k for k in self.wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.ones(self.shape, dtype=bool)
        for m, n in zip(self.mode_indices, self.points):
            keep = keep & (3 * np.abs(m) <= n)
        return keep

    def header(self) -> str:
        def join(vals):
            return ",".join(repr(float(v)) for v in vals)
        return f"dim={self.dim} N={','.join(str(n) for n in self.points)} L={join(self.lengths)}"


def _require_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError("field contains non-finite values")


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on ``grid`` at time ``time``."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {values.size}")
        values = values.reshape(self.grid.shape)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_function(cls, grid: Grid, func, time: float = 0.0) -> "Field":
        return cls(grid, func(*grid.coords) * np.ones(grid.shape), time)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def check_finite(self) -> "Field":
        _require_finite(self.values)
        return self

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coefficients: np.ndarray
    time: float = 0.0


def fft(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, norm="forward")


def ifft(coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifftn(coeffs, norm="forward")


def analyze(f: Field) -> SpectralField:
    _require_finite(f.values)
    return SpectralField(f.grid, fft(f.values), f.time)


def synthesize(F: SpectralField) -> Field:
    return Field(F.grid, ifft(F.coefficients), F.time)


def spectral_mass(F: SpectralField) -> float:
    return F.grid.volume * float(np.sum(np.abs(F.coefficients) ** 2))


def _gradient_values(grid: Grid, values: np.ndarray) -> list[np.ndarray]:
    c = fft(values)
    return [ifft(1j * k * c) for k in grid.odd_wavenumbers]


def gradient(f: Field) -> list[Field]:
    _require_finite(f.values)
    return [f.with_values(g) for g in _gradient_values(f.grid, f.values)]


def laplacian(f: Field) -> Field:
    _require_finite(f.values)
    return f.with_values(ifft(-f.grid.k2 * fft(f.values)))


def propagator(grid: Grid, dt: float) -> np.ndarray:
    """Fourier multiplier of U(dt) = exp(i dt/2 Laplacian)."""
    return np.exp(-0.5j * dt * grid.k2)


def free_propagate(f: Field, dt: float) -> Field:
    _require_finite(f.values)
    if dt == 0:
        return f
    return Field(f.grid, ifft(propagator(f.grid, dt) * fft(f.values)), f.time + dt)


def dealias(F: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with some axis index |m| > N/3."""
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coefficients, 0), F.time)


# --- snapshot files ---------------------------------------------------------

_HEADER = re.compile(r"^# nls-field v1 dim=(\d+) N=([\d,]+) L=(\S+) t=(\S+)\s*$")


def write_snapshot(f: Field, path) -> Path:
    path = Path(path)
    flat = f.values.reshape(-1)
    lines = [f"# nls-field v1 {f.grid.header()} t={float(f.time)!r}"]
    lines.extend(f"{z.real!r} {z.imag!r}" for z in flat.tolist())
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_snapshot(path) -> Field:
    with open(path, encoding="ascii") as fh:
        header = fh.readline()
        m = _HEADER.match(header)
        if m is None:
            raise ValueError(f"{path}: not an nls-field v1 snapshot")
        dim = int(m.group(1))
        points = tuple(int(v) for v in m.group(2).split(","))
        lengths = tuple(float(v) for v in m.group(3).split(","))
        if len(points) != dim or len(lengths) != dim:
            raise ValueError(f"{path}: header dimension mismatch")
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    grid = Grid(points, lengths)
    if data.shape != (grid.size, 2):
        raise ValueError(f"{path}: expected {grid.size} rows of 're im'")
    return Field(grid, (data[:, 0] + 1j * data[:, 1]).reshape(grid.shape), float(m.group(4)))


def mesh_sum(values: np.ndarray, grid: Grid) -> complex:
    """Riemann sum times cell volume; spectrally accurate for smooth periodic data."""
    return np.sum(values) * grid.cell_volume


def shell_mask(grid: Grid, width: int | None = None) -> np.ndarray:
    """Boolean mask of the outer ``width`` points along every axis."""
    mask = np.zeros(grid.shape, dtype=bool)
    for axis, n in enumerate(grid.points):
        w = width if width is not None else max(1, n // 32)
        sl: list = [slice(None)] * grid.dim
        sl[axis] = np.r_[0:w, n - w:n]
        mask[tuple(sl)] = True
    return mask


def as_points(value: int | Sequence[int], dim: int) -> tuple[int, ...]:
    if isinstance(value, (int, np.integer)):
        return (int(value),) * dim
    return tuple(int(v) for v in value)
