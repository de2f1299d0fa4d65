"""Split-step integrator: exact sub-steps, order of accuracy, analytic solutions."""
import math

import numpy as np
import pytest

from nls_conserve.initial import InitialSpec, make_initial
from nls_conserve.integrator import (BlowUpError, NlsParams, StepSchedule, evolve,
                                     nonlinear_phase_step, strang_step)
from nls_conserve.spectral import Field, Grid, free_propagate

from conftest import free_gaussian


def l2(a: Field, b: Field) -> float:
    return math.sqrt(float(np.sum(np.abs(a.values - b.values) ** 2)) * a.grid.cell_volume)


def test_params_validation():
    with pytest.raises(ValueError):
        NlsParams(3, 3, 1.0)
    with pytest.raises(ValueError):
        NlsParams(1, 1, 1.0)
    assert NlsParams.transformed(1, 5, 1.0).beta == 0
    assert NlsParams.transformed(1, 3, 1.0).beta == -1
    assert NlsParams.transformed(2, 4, 1.0).beta == 1
    p = NlsParams(1, 3, 1.0, beta=-1)
    assert p.coefficient(2.0) == 0.5
    with pytest.raises(ValueError):
        p.coefficient(0.0)


def test_schedule():
    s = StepSchedule(0, 1, 0.1, 3)
    assert s.n_steps == 10
    assert s.time(10) == 1
    assert [k for k in range(11) if s.is_sample(k)] == [0, 3, 6, 9, 10]
    with pytest.raises(ValueError):
        StepSchedule(0, 1, 0.3)
    with pytest.raises(ValueError):
        StepSchedule(0, 1, 0.1).validate_for(NlsParams(1, 3, 1.0, beta=-1))


def test_phase_step(grid1, rng):
    f = Field(grid1, rng.standard_normal(512) + 1j * rng.standard_normal(512))
    assert nonlinear_phase_step(f, 0.1, NlsParams(1, 3, 0.0), 0.0) is f
    params = NlsParams(1, 3, 0.7, beta=-1)
    out = nonlinear_phase_step(f, 0.1, params, 2.0)
    expected = np.exp(-1j * 0.7 * 0.5 * np.abs(f.values) ** 2 * 0.1) * f.values
    assert np.max(np.abs(out.values - expected)) < 1e-14
    assert np.max(np.abs(np.abs(out.values) - np.abs(f.values))) < 1e-14


def test_linear_strang_is_free_propagation(grid1, rng):
    f = Field(grid1, np.exp(-grid1.r2) * (1 + 0.1 * rng.standard_normal(512)))
    out = strang_step(f, 0.0, 0.01, NlsParams(1, 3, 0.0))
    assert np.array_equal(out.values, free_propagate(f, 0.01).values)


def test_free_gaussian_evolution(grid1):
    phi = Field(grid1, free_gaussian(grid1, 0.0))
    traj = evolve(phi, NlsParams(1, 3, 0.0), StepSchedule(0, 1, 1e-3, 100))
    assert traj.final_field.time == 1.0
    assert np.max(np.abs(traj.final_field.values - free_gaussian(grid1, 1.0))) < 1e-8


def test_soliton(grid1):
    phi = make_initial(InitialSpec(kind="sech-soliton", a=1.0), grid1)
    traj = evolve(phi, NlsParams(1, 3, -1.0), StepSchedule(0, 5, 1e-3, 1000))
    exact = Field(grid1, np.exp(0.5j * 5) / np.cosh(grid1.axes[0]))
    assert l2(traj.final_field, exact) < 1e-6


def test_self_convergence_order(grid1):
    phi = make_initial(InitialSpec(amplitude=1.5), grid1)
    params = NlsParams(1, 3, 1.0)

    def run(dt):
        return evolve(phi, params, StepSchedule(0, 1, dt, 10 ** 6)).final_field

    ref = run(1.25e-4)
    errs = [l2(run(dt), ref) for dt in (4e-3, 2e-3, 1e-3)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.8 < q < 2.2 for q in orders), orders


@pytest.mark.parametrize("lam", [1.0, -1.0])
def test_time_reversibility(grid1, lam):
    phi = make_initial(InitialSpec(boost=(2 * math.pi * 2 / 60,)), grid1)
    params = NlsParams(1, 3, lam)
    f, t = phi, 0.0
    for _ in range(200):
        f = strang_step(f, t, 2e-3, params)
        t += 2e-3
    for _ in range(200):
        f = strang_step(f, t, -2e-3, params)
        t -= 2e-3
    assert np.max(np.abs(f.values - phi.values)) < 1e-8


def test_beta_zero_bit_identical():
    g = Grid.uniform(2, 32, 16.0)
    phi = make_initial(InitialSpec(width=2.0), g, 0.5)
    sched = StepSchedule(0.5, 1.0, 1e-2, 10)
    a = evolve(phi, NlsParams(2, 3, 1.0), sched).final_field
    b = evolve(phi, NlsParams.transformed(2, 3, 1.0), sched).final_field
    assert np.array_equal(a.values, b.values)


def test_evolve_is_deterministic(grid1):
    phi = make_initial(InitialSpec(), grid1)
    sched = StepSchedule(0, 0.2, 1e-3, 50)
    a = evolve(phi, NlsParams(1, 3, 1.0), sched)
    b = evolve(phi, NlsParams(1, 3, 1.0), sched)
    assert np.array_equal(a.final_field.values, b.final_field.values)
    assert a.records == b.records
    assert np.allclose(a.times, [0, 0.05, 0.1, 0.15, 0.2], rtol=0, atol=1e-15)


def test_observer_and_store_fields(grid1):
    phi = make_initial(InitialSpec(), grid1)
    seen = []
    traj = evolve(phi, NlsParams(1, 3, 1.0), StepSchedule(0, 0.1, 1e-2, 5),
                  observer=lambda rec, f: seen.append((rec.time, f.time)), store_fields=True)
    assert len(seen) == len(traj.records) == 3
    assert all(a == b for a, b in seen)
    assert sorted(traj.fields) == [r.time for r in traj.records]


def test_blowup_guard(grid1):
    phi = make_initial(InitialSpec(amplitude=3.0), grid1)
    with pytest.raises(BlowUpError) as info:
        evolve(phi, NlsParams(1, 3, -1.0), StepSchedule(0, 1, 1e-3), blowup_ceiling=3.5)
    err = info.value
    assert err.max_modulus > 3.5
    assert 0 < err.t <= 1
    assert len(err.trajectory.records) >= 1


def test_evolve_rejects_bad_input(grid1):
    vals = np.zeros(512, dtype=complex)
    vals[0] = np.inf
    with pytest.raises(FloatingPointError):
        evolve(Field(grid1, vals), NlsParams(1, 3, 1.0), StepSchedule(0, 0.1, 1e-2))
    with pytest.raises(ValueError):
        evolve(Field(grid1, np.zeros(512)), NlsParams(2, 3, 1.0), StepSchedule(0, 0.1, 1e-2))
