import numpy as np
import pytest

from thermodimer.params import Geometry, SystemParams


def dimer(xi=0.02, f=0.0, delta=100.0, n=0.1, gamma2=0.9999, **kw):
    return SystemParams(Geometry.parallel(xi, f), gamma2=gamma2, delta=delta, n_photon=n, **kw)


@pytest.fixture
def fig2a_params():
    return dimer()


@pytest.fixture
def generic_params():
    return SystemParams(Geometry(0.3, 0.2, -0.5, 0.4), gamma2=0.7, delta=-13.0, n_photon=0.4)


def random_params(rng: np.random.Generator) -> SystemParams:
    """Draw from the ranges used for the route-equivalence checks."""
    return dimer(
        xi=10 ** rng.uniform(-2, 0),
        f=rng.uniform(0, 1),
        delta=rng.uniform(0, 200),
        n=rng.uniform(0, 1),
        gamma2=rng.uniform(0.5, 1),
    )
