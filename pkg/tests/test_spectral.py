"""Grid, transforms, spectral derivatives, free propagation, dealiasing, snapshots."""
import math

import numpy as np
import pytest

from nls_conserve.spectral import (Field, Grid, NonFiniteFieldError, SpectralField, analyze, dealias,
                                   free_propagate, gradient, laplacian, read_snapshot,
                                   spectral_mass, synthesize, write_snapshot)

from conftest import free_gaussian


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((7,), (1.0,))
    with pytest.raises(ValueError):
        Grid((8,), (0.0,))
    with pytest.raises(ValueError):
        Grid((8, 8, 8), (1.0, 1.0, 1.0))
    g = Grid.uniform(2, 16, 4.0)
    assert g.shape == (16, 16)
    assert g.cell_volume == pytest.approx(0.0625)
    assert g.axes[0][0] == -2.0 and g.axes[0][-1] == pytest.approx(1.75)


def test_field_is_read_only(grid1):
    f = Field(grid1, np.zeros(512))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_constant_field_has_single_mode(grid1):
    F = analyze(Field(grid1, np.full(512, 2.5 - 1j)))
    assert F.coefficients[0] == pytest.approx(2.5 - 1j, abs=1e-15)
    assert np.max(np.abs(F.coefficients[1:])) < 1e-15


def test_plane_wave_has_single_mode(grid1):
    m = 7
    k = 2 * math.pi * m / grid1.lengths[0]
    F = analyze(Field.from_function(grid1, lambda x: np.exp(1j * k * x)))
    mags = np.abs(F.coefficients)
    assert np.argmax(mags) == m
    assert np.sum(mags > 1e-12) == 1


def test_round_trip(grid1, rng):
    vals = rng.standard_normal(512) + 1j * rng.standard_normal(512)
    back = synthesize(analyze(Field(grid1, vals)))
    assert np.max(np.abs(back.values - vals)) < 1e-14


def test_parseval(rng):
    g = Grid((32, 48), (5.0, 7.0))
    vals = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    F = analyze(Field(g, vals))
    direct = float(np.sum(np.abs(vals) ** 2)) * g.cell_volume
    assert spectral_mass(F) == pytest.approx(direct, rel=1e-13)


def test_non_finite_rejected(grid1):
    vals = np.zeros(512, dtype=complex)
    vals[3] = np.nan
    with pytest.raises(NonFiniteFieldError):
        analyze(Field(grid1, vals))


def test_gradient_of_sine(grid1):
    L = grid1.lengths[0]
    f = Field.from_function(grid1, lambda x: np.sin(2 * math.pi * x / L))
    (df,) = gradient(f)
    x = grid1.axes[0]
    assert np.max(np.abs(df.values - 2 * math.pi / L * np.cos(2 * math.pi * x / L))) < 1e-12


def test_constant_derivatives_vanish(grid1):
    f = Field(grid1, np.full(512, 3.0))
    assert np.max(np.abs(gradient(f)[0].values)) < 1e-14
    assert np.max(np.abs(laplacian(f).values)) < 1e-14


def test_laplacian_eigenfunction(grid1):
    k = 2 * math.pi * 5 / grid1.lengths[0]
    f = Field.from_function(grid1, lambda x: np.exp(1j * k * x))
    assert np.max(np.abs(laplacian(f).values + k * k * f.values)) < 1e-12


def test_gaussian_derivatives_against_finite_differences():
    # oracle: fourth-order centred differences on a 16x finer mesh
    g = Grid.uniform(2, 256, 40.0)
    f = Field.from_function(g, lambda x, y: np.exp(-((x - 1) ** 2 + y ** 2) / 2))
    gx, gy = gradient(f)
    fine = Grid.uniform(1, 256 * 16, 40.0)
    x = fine.axes[0]
    h = fine.spacing[0]
    u = np.exp(-(x - 1) ** 2 / 2)
    d1 = (-np.roll(u, -2) + 8 * np.roll(u, -1) - 8 * np.roll(u, 1) + np.roll(u, 2)) / (12 * h)
    d2 = (-np.roll(u, -2) + 16 * np.roll(u, -1) - 30 * u + 16 * np.roll(u, 1) - np.roll(u, 2)) / (12 * h * h)
    ey = np.exp(-g.axes[1] ** 2 / 2)
    ref_gx = np.outer(d1[::16], ey)
    assert np.max(np.abs(gx.values - ref_gx)) < 1e-6
    ey2 = (g.axes[1] ** 2 - 1) * ey
    ref_lap = np.outer(d2[::16], ey) + np.outer(u[::16], ey2)
    assert np.max(np.abs(laplacian(f).values - ref_lap)) < 1e-5
    assert np.max(np.abs(gy.values - np.outer(u[::16], -g.axes[1] * ey))) < 1e-12


def test_gradient_of_real_field_is_real(grid1, rng):
    vals = rng.standard_normal(512)
    assert np.max(np.abs(gradient(Field(grid1, vals))[0].values.imag)) < 1e-13


def test_free_propagate_identity(grid1, rng):
    f = Field(grid1, rng.standard_normal(512) + 0j, 0.3)
    assert free_propagate(f, 0.0) is f


def test_free_propagate_mode_phase(grid1):
    k = 2 * math.pi * 4 / grid1.lengths[0]
    f = Field.from_function(grid1, lambda x: np.exp(1j * k * x))
    out = free_propagate(f, 0.7)
    assert out.time == pytest.approx(0.7)
    assert np.max(np.abs(out.values - np.exp(-0.5j * k * k * 0.7) * f.values)) < 1e-12


@pytest.mark.parametrize("dim, n, length", [(1, 512, 60.0), (2, 128, 40.0)])
def test_free_gaussian_closed_form(dim, n, length):
    g = Grid.uniform(dim, n, length)
    f = Field(g, free_gaussian(g, 0.0))
    out = free_propagate(f, 1.0)
    assert np.max(np.abs(out.values - free_gaussian(g, 1.0))) < 1e-12


def test_free_propagation_group_property(grid1, rng):
    vals = np.exp(-grid1.r2) * (1 + 0.1 * rng.standard_normal(512))
    f = Field(grid1, vals)
    a = free_propagate(free_propagate(f, 0.3), 0.45)
    b = free_propagate(f, 0.75)
    assert np.max(np.abs(a.values - b.values)) < 1e-13
    back = free_propagate(b, -0.75)
    assert np.max(np.abs(back.values - vals)) < 1e-13
    assert spectral_mass(analyze(b)) == pytest.approx(spectral_mass(analyze(f)), rel=1e-13)


def test_dealias(grid1):
    m = grid1.mode_indices[0]
    band = np.where(np.isin(m, [-170, -3, 0, 40, 170]), 1.0 + 0.5j, 0)
    F = SpectralField(grid1, band)
    assert np.array_equal(dealias(F).coefficients, band)
    high = SpectralField(grid1, np.where(m == 255, 1.0 + 0j, 0))
    assert not np.any(dealias(high).coefficients)
    assert not np.any(dealias(SpectralField(grid1, np.where(m == 171, 1.0 + 0j, 0))).coefficients)


def test_dealias_2d_mask():
    g = Grid.uniform(2, 12, 1.0)
    mask = g.dealias_mask
    assert mask.sum() == 9 * 9  # |m| <= 4 on both axes
    assert mask[4, 4] and not mask[5, 0]


def test_snapshot_round_trip(tmp_path, rng):
    g = Grid((16, 8), (3.0, 2.5))
    f = Field(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape), 1.25)
    path = write_snapshot(f, tmp_path / "f.snap")
    assert path.read_text().startswith("# nls-field v1 dim=2 N=16,8 L=3.0,2.5 t=1.25\n")
    back = read_snapshot(path)
    assert back.grid == g and back.time == 1.25
    assert np.array_equal(back.values, f.values)


def test_snapshot_rejects_garbage(tmp_path):
    p = tmp_path / "bad.snap"
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        read_snapshot(p)
