import numpy as np
import pytest

from conftest import dimer, random_params
from thermodimer.bloch import (
    SUBSYSTEMS,
    build_full_bloch_system,
    build_reduced_system,
    check_bloch_state,
    initial_state_ground,
    observables_from_bloch,
    to_real_coordinates,
)
from thermodimer.errors import ValidationError
from thermodimer.evolve import affine_trajectory
from thermodimer.params import Geometry, SystemParams


def uncoupled(n=0.0):
    # orthogonal dipoles with zero axis projections: no coupling at all
    return SystemParams(Geometry(0.5, 0.0, 0.0, 0.0), gamma2=1.0, n_photon=n)


def test_uncoupled_vacuum_matrix():
    sys = build_reduced_system(uncoupled())
    expected = np.diag([-2, -2, -2, -2, -4]).astype(complex)
    expected[4, :2] = -2  # relaxation of each site drives the correlator
    np.testing.assert_array_equal(sys.a_matrix, expected)
    np.testing.assert_array_equal(sys.l_vector, [-2, -2, 0, 0, 0])


def test_diagonal_entries_fig2a():
    sys = build_reduced_system(dimer())
    assert sys.a_matrix[0, 0] == pytest.approx(-2.4, rel=1e-15)
    assert sys.a_matrix[1, 1] == pytest.approx(-2.39976, rel=1e-15)
    assert sys.a_matrix[2, 2] == pytest.approx(-2.39988 - 100j, rel=1e-15)
    assert sys.a_matrix[3, 3] == pytest.approx(-2.39988 + 100j, rel=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_zero_pattern(seed):
    a = build_reduced_system(random_params(np.random.default_rng(seed))).a_matrix
    for i, j in [(0, 1), (1, 0), (0, 4), (1, 4), (2, 3), (3, 2)]:
        assert a[i, j] == 0


def test_coupling_entries():
    p = dimer()
    a = build_reduced_system(p).a_matrix
    t = p.couplings.t12
    assert a[0, 2] == -2 * t.conjugate() and a[0, 3] == -2 * t
    assert a[2, 0] == t / 2 and a[3, 1] == t / 2
    assert a[4, 0] == -2 * p.gamma2 and a[4, 1] == -2 * p.gamma1
    assert a[4, 2] == 4 * p.couplings.big_gamma


def test_ground_state():
    x = initial_state_ground()
    np.testing.assert_array_equal(x, [-1, -1, 0, 0, 1])
    check_bloch_state(x)
    obs = observables_from_bloch(x, dimer().couplings)
    assert obs.pop1 == 0 and obs.pop2 == 0 and obs.current == 0 and obs.zz == 1


def test_real_coherence_has_no_current():
    x = np.array([-0.5, -0.4, 0.1, 0.1, 0.2], dtype=complex)
    assert observables_from_bloch(x, dimer().couplings).current == 0


def test_invalid_states_rejected():
    with pytest.raises(ValidationError):
        check_bloch_state(np.array([-1, -1, 0.1j, 0.1j, 1]))
    with pytest.raises(ValidationError):
        check_bloch_state(np.array([-1 + 1e-6j, -1, 0, 0, 1]))
    with pytest.raises(ValidationError):
        check_bloch_state(np.array([-1.5, -1, 0, 0, 1]))


def test_full_system_partition_sizes():
    full = build_full_bloch_system(dimer())
    assert tuple(len(SUBSYSTEMS[k]) for k in ("i", "ii", "iii", "iv")) == (2, 4, 4, 5)
    assert sorted(full.partition).count("iv") == 5
    assert full.m_matrix.shape == (15, 15)


@pytest.mark.parametrize("seed", range(8))
def test_full_block_equals_reduced(seed):
    p = random_params(np.random.default_rng(100 + seed))
    a_full, b_full = build_full_bloch_system(p).block("iv")
    sys = build_reduced_system(p)
    scale = np.abs(sys.a_matrix).max()
    assert np.abs(a_full - sys.a_matrix).max() <= 1e-14 * scale
    assert np.abs(b_full - sys.l_vector).max() <= 1e-14


def test_full_system_uncoupled_is_diagonal_dominant():
    full = build_full_bloch_system(uncoupled(0.2))
    m = full.m_matrix
    off = np.abs(m - np.diag(np.diag(m))).sum(axis=1)
    assert np.all(np.abs(np.diag(m)) >= off)


def test_single_operator_coherences_stay_zero():
    p = dimer(delta=30)
    m, b = build_full_bloch_system(p).block("ii")
    assert np.all(b == 0)
    # zero initial values and zero drive: the block solution is identically 0
    from scipy.linalg import expm

    assert np.all(expm(m * 0.37) @ np.zeros(4) == 0)
    assert np.all(np.linalg.eigvals(m).real < 0)


@pytest.mark.parametrize("seed", range(3))
def test_full_and_reduced_trajectories_agree(seed):
    from scipy.linalg import expm

    p = random_params(np.random.default_rng(200 + seed))
    full = build_full_bloch_system(p)
    m, b = full.block("iv")
    sys = build_reduced_system(p)
    times = np.linspace(0, 2.0, 11)
    xs = affine_trajectory(sys, initial_state_ground(), times)
    # augmented exponential handles the affine drive without inverting m
    aug = np.zeros((6, 6), dtype=complex)
    aug[:5, :5], aug[:5, 5] = m, b
    y0 = np.append(initial_state_ground(), 1.0)
    for t, x in zip(times, xs):
        y = expm(aug * t) @ y0
        assert np.abs(y[:5] - x).max() < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_stability(seed):
    p = random_params(np.random.default_rng(300 + seed))
    assert np.all(np.linalg.eigvals(build_reduced_system(p).a_matrix).real < 0)


def test_real_coordinates_are_real():
    a, l = to_real_coordinates(build_reduced_system(dimer()))
    assert a.dtype == float and l.dtype == float
