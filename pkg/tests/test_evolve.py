import math

import numpy as np
import pytest

from conftest import dimer
from thermodimer.bloch import build_reduced_system, initial_state_ground
from thermodimer.errors import DomainError, EstimationError, StiffnessError
from thermodimer.evolve import (
    TimeGrid,
    TimeSeries,
    affine_component_dense,
    affine_trajectory,
    estimate_oscillation_arrays,
    find_extrema,
    first_transient_extremum,
    propagate_affine,
    propagate_master,
    propagate_reduced,
    settling_time,
)
from thermodimer.liouvillian import build_generator, ground_state_rho
from thermodimer.steady import steady_state_reduced


def test_grid_validation():
    assert len(TimeGrid(0, 1, 11).times()) == 11
    g = TimeGrid(1e-3, 1e3, 7, "logarithmic").times()
    np.testing.assert_allclose(g, [1e-3, 1e-2, 1e-1, 1, 10, 100, 1e3])
    for bad in (dict(t_start=-1), dict(t_end=0), dict(n_samples=1), dict(spacing="logarithmic")):
        with pytest.raises(DomainError):
            TimeGrid(**bad)


def test_affine_initial_and_limit(fig2a_params):
    sys = build_reduced_system(fig2a_params)
    x0 = initial_state_ground()
    assert np.array_equal(propagate_affine(sys, x0, 0.0), x0)
    x_inf = steady_state_reduced(sys)
    np.testing.assert_allclose(propagate_affine(sys, x0, 200.0), x_inf, rtol=0, atol=1e-13)
    with pytest.raises(DomainError):
        propagate_affine(sys, x0, -1.0)


def test_stepping_matches_single_exponential():
    sys = build_reduced_system(dimer(delta=10.0))
    times = np.linspace(0, 2, 41)
    xs = affine_trajectory(sys, initial_state_ground(), times)
    for t in (0.35, 1.0, 2.0):
        i = int(round(t * 20))
        assert np.abs(xs[i] - propagate_affine(sys, initial_state_ground(), t)).max() < 1e-11


def test_dense_component_matches_stepping():
    sys = build_reduced_system(dimer(delta=10.0, xi=0.1))
    times = np.linspace(0, 1, 201)
    xs = affine_trajectory(sys, initial_state_ground(), times)
    dense = affine_component_dense(sys, initial_state_ground(), times)
    assert np.abs(dense - xs[:, 2]).max() < 1e-12


def test_uncoupled_relaxation_closed_form():
    # without coupling each inversion relaxes to -1/(1+2N) at rate 2(1+2N)
    from thermodimer.params import Geometry, SystemParams

    n = 0.3
    p = SystemParams(Geometry(0.5, 0, 0, 0), gamma2=1.0, n_photon=n)
    ts = propagate_reduced(build_reduced_system(p), initial_state_ground(), TimeGrid(0, 3, 31))
    k = 1 + 2 * n
    z = -1 / k + (-1 + 1 / k) * np.exp(-2 * k * ts.times)
    np.testing.assert_allclose(2 * ts.pop1 - 1, z, atol=1e-14)
    np.testing.assert_allclose(ts.zz, z * z, atol=1e-14)
    assert np.all(ts.current == 0)


def test_series_first_row_is_ground_state(fig2a_params):
    ts = propagate_reduced(build_reduced_system(fig2a_params), initial_state_ground(), TimeGrid(0, 1, 5))
    assert ts.row(0).as_row() == (0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    assert ts.table().shape == (5, 7)


def test_master_backends_agree():
    p = dimer(delta=10.0, xi=0.3)
    gen = build_generator(p)
    grid = TimeGrid(0, 2, 101)
    a = propagate_master(gen, ground_state_rho(), grid, "expm")
    b = propagate_master(gen, ground_state_rho(), grid, "ode")
    assert np.abs(a.table() - b.table()).max() < 1e-9


def test_master_matches_reduced():
    p = dimer(delta=30.0)
    grid = TimeGrid(0, 0.5, 51)
    a = propagate_master(build_generator(p), ground_state_rho(), grid)
    b = propagate_reduced(build_reduced_system(p), initial_state_ground(), grid)
    assert np.abs(a.table() - b.table()).max() < 1e-9


def test_ode_budget_raises_stiffness():
    gen = build_generator(dimer())
    with pytest.raises(StiffnessError):
        propagate_master(gen, ground_state_rho(), TimeGrid(0, 10, 10), "ode", max_evals=1000)


def test_unknown_backend(fig2a_params):
    with pytest.raises(ValueError):
        propagate_master(build_generator(fig2a_params), ground_state_rho(), TimeGrid(0, 1, 3), "rk4")


def test_find_extrema_rejects_ripple():
    t = np.linspace(0, 10, 2001)
    v = np.sin(t) + 1e-9 * np.sin(400 * t)
    ext = find_extrema(v)
    np.testing.assert_allclose(t[ext], [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2], atol=0.01)
    assert len(find_extrema(np.ones(10))) == 0


def test_damped_oscillation_recovered():
    t = np.linspace(0, 20, 20001)
    v = 0.3 + np.exp(-0.25 * t) * np.cos(3.0 * t + 0.4) + 0.01 * np.exp(-0.05 * t)
    fit = estimate_oscillation_arrays(t, v)
    assert fit.frequency == pytest.approx(3.0, rel=2e-3)
    assert fit.decay == pytest.approx(0.25, rel=0.05)


def test_overdamped_raises():
    t = np.linspace(0, 5, 100)
    with pytest.raises(EstimationError):
        estimate_oscillation_arrays(t, np.exp(-t))


def test_first_extremum_fig2a(fig2a_params):
    t, v = first_transient_extremum(build_reduced_system(fig2a_params), initial_state_ground())
    assert 0 < t < 2 * math.pi / 374906.0
    assert v > 0


def test_settling_time():
    t = np.linspace(0, 10, 1001)
    v = 1 - np.exp(-t)
    ts = TimeSeries(t, v, np.zeros_like(t, dtype=complex), v, v, v)
    assert settling_time(ts, 1.0) == pytest.approx(math.log(10), abs=0.011)
    with pytest.raises(EstimationError):
        settling_time(ts, 5.0)


def test_semigroup_property(generic_params):
    sys = build_reduced_system(generic_params)
    x0 = initial_state_ground()
    direct = propagate_affine(sys, x0, 0.7)
    split = propagate_affine(sys, propagate_affine(sys, x0, 0.3), 0.4)
    assert np.abs(direct - split).max() < 1e-10


def test_long_time_limit(generic_params):
    sys = build_reduced_system(generic_params)
    x = propagate_affine(sys, initial_state_ground(), 1e4)
    assert np.abs(x - steady_state_reduced(sys)).max() < 1e-10
