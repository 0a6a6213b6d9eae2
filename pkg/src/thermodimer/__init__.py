"""Simulator for two dipole-coupled two-level molecules driven by thermal light."""

__version__ = "0.1.0"

from .bloch import (
    build_full_bloch_system,
    build_reduced_system,
    initial_state_ground,
    observables_from_bloch,
)
from .errors import (
    ConsistencyError,
    DegeneracyError,
    DomainError,
    EstimationError,
    SingularityError,
    StiffnessError,
    ValidationError,
)
from .evolve import (
    TimeGrid,
    TimeSeries,
    estimate_oscillation,
    propagate_affine,
    propagate_master,
    propagate_reduced,
)
from .liouvillian import build_generator, ground_state_rho, observables_from_rho
from .observables import ObservableSet
from .params import (
    Couplings,
    Geometry,
    SystemParams,
    coupling_gamma,
    coupling_omega,
    kappa,
    photon_number_from_temperature,
    static_vdd_limit,
)
from .steady import (
    SteadyReport,
    analytic_coherence_im,
    analytic_pop_diff,
    analytic_r,
    energy_balance_residual,
    steady_report,
    steady_state_full,
    steady_state_reduced,
)
