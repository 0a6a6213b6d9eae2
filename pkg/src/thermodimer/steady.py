"""Non-equilibrium steady state by three independent routes.

1. Linear solve of the reduced 5x5 system, x_inf = -A^-1 L.
2. Null space of the 16x16 master-equation generator.
3. Closed-form rational expressions for the coherence and the population
   imbalance.

The closed forms are sums of terms that cancel strongly when the exchange
rate is large, so they are accumulated with ``math.fsum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import liouvillian as lv
from .bloch import (
    REAL_BASIS,
    ReducedSystem,
    build_reduced_system,
    check_bloch_state,
    observables_from_bloch,
    to_real_coordinates,
)
from .errors import DegeneracyError, DomainError
from .observables import ObservableSet
from .params import SystemParams

COND_LIMIT = 1e12
_REFINE_STEPS = 4
_R_FLOOR = 1e-12


def checked_solve(a: np.ndarray, rhs: np.ndarray, what: str = "reduced system") -> np.ndarray:
    """Solve a @ x = rhs with a conditioning guard and iterative refinement.

    Columns are equilibrated by the magnitude of a first solution so small
    components (the cross-coherences at short distance are ~1e-12) keep
    their relative accuracy; residuals are accumulated in extended precision.
    """
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegeneracyError(
            f"{what} is singular or near-singular (condition number {cond:.3g}); "
            "this is the dark-state degeneracy, use the spectral-projector path"
        )
    x = scipy.linalg.solve(a, rhs)
    scale = np.abs(x)
    scale = np.where(scale > 0, scale, 1.0)
    a_scaled = a * scale[None, :]
    lu = scipy.linalg.lu_factor(a_scaled)
    y = scipy.linalg.lu_solve(lu, rhs)
    ext = np.clongdouble if np.iscomplexobj(a_scaled) or np.iscomplexobj(rhs) else np.longdouble
    a_ext = a_scaled.astype(ext)
    rhs_ext = np.asarray(rhs).astype(ext)
    for _ in range(_REFINE_STEPS):
        r = rhs_ext - a_ext @ y.astype(ext)
        dy = scipy.linalg.lu_solve(lu, r.astype(y.dtype))
        y = y + dy
        if np.abs(dy).max() <= 1e-17 * np.abs(y).max():
            break
    return y * scale


def relative_residual(a: np.ndarray, x: np.ndarray, rhs: np.ndarray) -> float:
    """Normwise backward error ||a x - rhs|| / (||a|| ||x|| + ||rhs||)."""
    r = a.astype(np.clongdouble) @ np.asarray(x).astype(np.clongdouble) - rhs
    num = float(np.linalg.norm(r.astype(complex)))
    den = np.linalg.norm(a, np.inf) * np.linalg.norm(x, np.inf) + np.linalg.norm(rhs, np.inf)
    return num / den


def steady_state_reduced(sys: ReducedSystem) -> np.ndarray:
    """x_inf = -A^-1 L, solved in real coordinates that separate Re and Im of the coherence."""
    a, l = to_real_coordinates(sys)
    y = checked_solve(a, -l)
    x = REAL_BASIS @ y
    if relative_residual(sys.a_matrix, x, -sys.l_vector) > 1e-14:
        raise DegeneracyError("steady-state solve did not converge")
    return x


def steady_state_full(gen: lv.Generator) -> np.ndarray:
    """Trace-normalized stationary density matrix of the generator."""
    s = gen.superop
    sv = np.linalg.svd(s, compute_uv=False)
    tol = max(1e-12, 1e-12 * sv[0])
    null_dim = int(np.sum(sv <= tol))
    if null_dim != 1:
        raise DegeneracyError(
            f"generator null space has dimension {null_dim}, expected 1 "
            f"(smallest singular values {sv[-2]:.3g}, {sv[-1]:.3g})"
        )
    # Replace the redundant trace row (vec(I)^T s = 0) by the normalization.
    n = lv.DIM
    trace_row = lv.vec(np.eye(n)).conj()
    a = s.copy()
    a[0, :] = trace_row
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = 1.0
    rho = lv.unvec(checked_solve(a, rhs, "stationarity system"))
    rho = 0.5 * (rho + rho.conj().T)
    lv.check_density_matrix(rho)
    return rho


def analytic_r(p: SystemParams) -> float:
    """Common denominator of the closed-form steady-state expressions."""
    c = p.couplings
    g1, g2, n, dl = p.gamma1, p.gamma2, p.n_photon, p.delta
    gam, om = c.big_gamma, c.big_omega
    a = 1.0 + 2.0 * n
    s = g1 + g2
    d = g2 - g1
    return math.fsum(
        [
            2.0 * a * d * dl * gam * om,
            gam**2 * a**2 * 2.0 * n * (g1 - g2) ** 2,
            -(gam**2) * a**2 * s**2,
            -4.0 * gam**2 * om**2,
            a**5 * g1 * g2 * s**2,
            a**3 * g1 * g2 * dl**2,
            a**3 * s**2 * om**2,
        ]
    )


def _checked_r(p: SystemParams) -> float:
    r = analytic_r(p)
    c = p.couplings
    scale = (1 + 2 * p.n_photon) ** 3 * (p.gamma1 + p.gamma2) ** 2 * (
        p.gamma1 * p.gamma2 + c.big_omega**2
    )
    if abs(r) < _R_FLOOR * scale:
        raise DegeneracyError(f"steady-state denominator vanishes (R={r:.3g})")
    return r


def analytic_coherence_im(p: SystemParams) -> float:
    """Closed-form Im<sigma2+ sigma1-> in the steady state."""
    c = p.couplings
    g1, g2, n = p.gamma1, p.gamma2, p.n_photon
    num = math.fsum(
        [
            (1.0 + 2.0 * n) * g1 * g2 * p.delta,
            (g2 - g1) * c.big_gamma * c.big_omega,
        ]
    )
    return 2.0 * n * c.big_gamma * num / _checked_r(p)


def analytic_pop_diff(p: SystemParams) -> float:
    """Closed-form excited-population difference pop2 - pop1 in the steady state."""
    c = p.couplings
    g1, g2, n = p.gamma1, p.gamma2, p.n_photon
    num = math.fsum(
        [
            p.delta * c.big_omega,
            (g1 - g2) * (1.0 + 2.0 * n) * c.big_gamma,
        ]
    )
    return 2.0 * n * c.big_gamma * (g1 + g2) * num / _checked_r(p)


def analytic_current(p: SystemParams) -> float:
    return 2.0 * p.couplings.big_omega * analytic_coherence_im(p)


def energy_balance_residual(p: SystemParams) -> float:
    """Current minus kappa/2 times the population imbalance, for equal decay rates.

    Exactly zero in the steady state; evaluated on the closed forms.
    """
    if p.gamma1 != p.gamma2:
        raise DomainError("energy balance identity requires gamma1 == gamma2")
    k = p.kappa1
    return math.fsum([analytic_current(p), -0.5 * k * analytic_pop_diff(p)])


@dataclass(frozen=True)
class SteadyReport:
    params: SystemParams
    x_inf: np.ndarray
    rho_inf: np.ndarray
    analytic_coherence_im: float
    analytic_pop_diff: float
    r_denominator: float
    current: float
    balance_residual: float | None

    @property
    def reduced(self) -> ObservableSet:
        return observables_from_bloch(self.x_inf, self.params.couplings)

    @property
    def full(self) -> ObservableSet:
        return lv.observables_from_rho(self.rho_inf, self.params.couplings)

    def observables(self) -> ObservableSet:
        """Steady observables, taking the coherence from the closed form.

        Without collective decay the steady coherence vanishes identically
        (the uncoupled steady state solves the equations exactly), so the
        round-off left by the linear solve is not reported.
        """
        red = self.reduced
        re_c = 0.0 if self.params.couplings.big_gamma == 0 else red.coherence.real
        return ObservableSet(
            current=self.current,
            coherence=complex(re_c, self.analytic_coherence_im),
            pop1=red.pop1,
            pop2=red.pop2,
            zz=red.zz,
        )


def steady_report(p: SystemParams) -> SteadyReport:
    sys = build_reduced_system(p)
    x = steady_state_reduced(sys)
    check_bloch_state(x)
    rho = steady_state_full(lv.build_generator(p))
    im = analytic_coherence_im(p)
    return SteadyReport(
        params=p,
        x_inf=x,
        rho_inf=rho,
        analytic_coherence_im=im,
        analytic_pop_diff=analytic_pop_diff(p),
        r_denominator=analytic_r(p),
        current=2.0 * p.couplings.big_omega * im,
        balance_residual=energy_balance_residual(p) if p.gamma1 == p.gamma2 else None,
    )
