"""Time propagation, sampling and oscillation analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from . import liouvillian as lv
from .bloch import REAL_BASIS, REAL_BASIS_INV, ReducedSystem, observables_from_bloch, to_real_coordinates
from .errors import DegeneracyError, DomainError, EstimationError, StiffnessError
from .observables import COLUMNS, ObservableSet
from .params import Couplings
from .steady import COND_LIMIT, steady_state_reduced

# Extrema whose prominence is below this fraction of the signal range are ripple.
EXTREMUM_FLOOR = 1e-6
# Tighter than 1e-10: the current is 2*Omega*Im(coherence) and amplifies
# coherence errors by up to ~1e6.
ODE_RTOL = 1e-13
ODE_ATOL = 1e-18


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    t_end: float = 50.0
    n_samples: int = 2000
    spacing: Literal["linear", "logarithmic"] = "linear"

    def __post_init__(self):
        if not self.t_start >= 0:
            raise DomainError(f"t_start must be >= 0, got {self.t_start}")
        if not self.t_end > self.t_start:
            raise DomainError("t_end must exceed t_start")
        if self.n_samples < 2:
            raise DomainError("need at least two samples")
        if self.spacing not in ("linear", "logarithmic"):
            raise DomainError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "logarithmic" and self.t_start <= 0:
            raise DomainError("logarithmic spacing needs t_start > 0")

    def times(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(self.t_start, self.t_end, self.n_samples)
        return np.geomspace(self.t_start, self.t_end, self.n_samples)


@dataclass(frozen=True)
class TimeSeries:
    """Observables sampled on a time grid, stored column-wise."""

    times: np.ndarray
    current: np.ndarray
    coherence: np.ndarray
    pop1: np.ndarray
    pop2: np.ndarray
    zz: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def from_rows(cls, times, rows: list[ObservableSet]) -> TimeSeries:
        return cls(
            times=np.asarray(times, dtype=float),
            current=np.array([r.current for r in rows]),
            coherence=np.array([r.coherence for r in rows]),
            pop1=np.array([r.pop1 for r in rows]),
            pop2=np.array([r.pop2 for r in rows]),
            zz=np.array([r.zz for r in rows]),
        )

    def row(self, i: int) -> ObservableSet:
        return ObservableSet(
            current=float(self.current[i]),
            coherence=complex(self.coherence[i]),
            pop1=float(self.pop1[i]),
            pop2=float(self.pop2[i]),
            zz=float(self.zz[i]),
        )

    @property
    def rows(self) -> list[ObservableSet]:
        return [self.row(i) for i in range(len(self))]

    def column(self, name: str) -> np.ndarray:
        if name == "coherence_re":
            return self.coherence.real
        if name == "coherence_im":
            return self.coherence.imag
        if name in COLUMNS:
            return getattr(self, name)
        raise KeyError(f"unknown observable {name!r}")

    def table(self) -> np.ndarray:
        """(n, 7) array with columns t, current, coherence_re, coherence_im, pop1, pop2, zz."""
        return np.column_stack([self.times] + [self.column(c) for c in COLUMNS])


def _check_invertible(a: np.ndarray) -> None:
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegeneracyError(
            f"reduced system matrix is near-singular (condition number {cond:.3g}); "
            "the affine solution needs A^-1, use the spectral-projector path instead"
        )


def propagate_affine(sys: ReducedSystem, x0: np.ndarray, t: float) -> np.ndarray:
    """x(t) = e^{At} x0 + (e^{At} - 1) A^-1 L.

    The exponential is taken in the real coordinates of the reduced system,
    which keeps the small imaginary part of the coherence accurate.
    """
    if t < 0:
        raise DomainError("propagation time must be >= 0")
    _check_invertible(sys.a_matrix)
    x0 = np.asarray(x0, dtype=complex)
    if t == 0:
        return x0.copy()
    a, _ = to_real_coordinates(sys)
    x_inf = steady_state_reduced(sys)
    dev = REAL_BASIS_INV @ (x0 - x_inf)
    return REAL_BASIS @ (scipy.linalg.expm(a * t) @ dev) + x_inf


def _step_propagate(a: np.ndarray, v0: np.ndarray, times: np.ndarray, offset=None) -> np.ndarray:
    """Propagate dv/dt = a (v - offset) sample to sample with exact exponentials.

    Steps of equal length share one exponential.
    """
    offset = np.zeros_like(v0) if offset is None else offset
    out = np.empty((len(times), len(v0)), dtype=complex)
    dev = v0 - offset
    t_prev = 0.0
    cache: dict[float, np.ndarray] = {}
    for i, t in enumerate(times):
        h = float(t - t_prev)
        if h != 0:
            key = round(h, 15) if h > 1e-300 else h
            prop = cache.get(key)
            if prop is None:
                if len(cache) > 4:
                    cache.clear()
                prop = scipy.linalg.expm(a * h)
                cache[key] = prop
            dev = prop @ dev
        out[i] = dev + offset
        t_prev = t
    return out


def affine_trajectory(sys: ReducedSystem, x0: np.ndarray, times) -> np.ndarray:
    """Reduced states at each time (rows), by exact stepping between samples."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise DomainError("times must be non-negative and non-decreasing")
    _check_invertible(sys.a_matrix)
    a, _ = to_real_coordinates(sys)
    x_inf = steady_state_reduced(sys)
    y0 = REAL_BASIS_INV @ np.asarray(x0, dtype=complex)
    y_inf = REAL_BASIS_INV @ x_inf
    ys = _step_propagate(a, y0, times, y_inf)
    return ys @ REAL_BASIS.T


def affine_component_dense(
    sys: ReducedSystem, x0: np.ndarray, times: np.ndarray, component: int = 2
) -> np.ndarray:
    """One component of x(t) on a large grid via the eigendecomposition of A.

    Vectorized over time, for grids too fine for stepping. Falls back to an
    error if the eigenbasis is ill-conditioned.
    """
    _check_invertible(sys.a_matrix)
    x_inf = steady_state_reduced(sys)
    lam, v = np.linalg.eig(sys.a_matrix)
    if np.linalg.cond(v) > 1e8:
        raise DegeneracyError("eigenbasis of A is ill-conditioned; use affine_trajectory")
    coef = np.linalg.solve(v, np.asarray(x0, dtype=complex) - x_inf) * v[component]
    times = np.asarray(times, dtype=float)
    out = np.full(times.shape, x_inf[component], dtype=complex)
    for lam_j, c_j in zip(lam, coef):
        out += c_j * np.exp(lam_j * times)
    return out


def series_from_bloch(times, xs: np.ndarray, c: Couplings) -> TimeSeries:
    return TimeSeries.from_rows(times, [observables_from_bloch(x, c) for x in xs])


def propagate_reduced(sys: ReducedSystem, x0: np.ndarray, grid: TimeGrid) -> TimeSeries:
    times = grid.times()
    return series_from_bloch(times, affine_trajectory(sys, x0, times), sys.couplings)


def propagate_master(
    gen: lv.Generator,
    rho0: np.ndarray,
    grid: TimeGrid,
    backend: Literal["expm", "ode"] = "expm",
    *,
    validate: bool = True,
    **ode_options,
) -> TimeSeries:
    """Sample observables of the density-matrix evolution on a grid.

    The ``expm`` backend steps with exact exponentials of the superoperator
    in Pauli-product coordinates. The ``ode`` backend integrates vec(rho)
    with an adaptive 8th-order Runge-Kutta method; it has to resolve every
    exchange oscillation and gets slow when the exchange rate is large.
    """
    lv.check_density_matrix(rho0)
    times = grid.times()
    if backend == "expm":
        vs = density_trajectory(gen, rho0, times).reshape(len(times), -1, order="F")
    elif backend == "ode":
        vs = _ode_propagate(gen.superop, lv.vec(rho0).astype(complex), times, **ode_options)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    rows = [lv.observables_from_rho(lv.unvec(v), gen.couplings, validate=validate) for v in vs]
    return TimeSeries.from_rows(times, rows)


def density_trajectory(gen: lv.Generator, rho0: np.ndarray, times) -> np.ndarray:
    """Density matrices at each time, shape (n, 4, 4)."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise DomainError("times must be non-negative and non-decreasing")
    r0 = lv.PAULI_BASIS_INV @ lv.vec(rho0).astype(complex)
    rs = _step_propagate(lv.real_superop(gen), r0, times)
    return np.array([lv.unvec(v) for v in rs @ lv.PAULI_BASIS.T])


class _EvalBudgetExceeded(Exception):
    pass


def _ode_propagate(
    s: np.ndarray,
    v0: np.ndarray,
    times: np.ndarray,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
    max_evals: int = 20_000_000,
) -> np.ndarray:
    count = 0

    def rhs(_t, v):
        nonlocal count
        count += 1
        if count > max_evals:
            raise _EvalBudgetExceeded
        return s @ v

    try:
        sol = solve_ivp(
            rhs, (0.0, float(times[-1])), v0, method="DOP853", t_eval=times, rtol=rtol, atol=atol
        )
    except _EvalBudgetExceeded:
        raise StiffnessError(
            f"adaptive integration exceeded {max_evals} evaluations; the exchange "
            "rate makes this problem stiff, use the expm backend"
        ) from None
    if not sol.success:
        raise StiffnessError(
            f"adaptive integration failed ({sol.message}); the exchange rate makes "
            "this problem stiff, use the expm backend"
        )
    return sol.y.T


# -- oscillation analysis ---------------------------------------------------


def find_extrema(values: np.ndarray, floor: float = EXTREMUM_FLOOR) -> np.ndarray:
    """Indices of strict three-point local extrema that stand out from ripple."""
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        return np.array([], dtype=int)
    mid = v[1:-1]
    is_max = (mid > v[:-2]) & (mid >= v[2:])
    is_min = (mid < v[:-2]) & (mid <= v[2:])
    idx = np.flatnonzero(is_max | is_min) + 1
    span = np.ptp(v)
    if span == 0:
        return np.array([], dtype=int)
    keep = []
    for i in idx:
        prominence = max(abs(v[i] - v[i - 1]), abs(v[i] - v[i + 1]))
        if prominence > floor * span:
            keep.append(i)
    return np.array(keep, dtype=int)


@dataclass(frozen=True)
class OscillationFit:
    frequency: float
    decay: float
    frequency_residual: float
    decay_residual: float
    n_extrema: int


def estimate_oscillation(series: TimeSeries, observable: str = "current") -> OscillationFit:
    """Angular frequency and envelope decay rate of a damped oscillation.

    The frequency comes from the mean spacing of successive extrema (half a
    period). The envelope uses half the jump between neighbouring extrema,
    which removes a slowly drifting baseline, and is fitted log-linearly.
    """
    return estimate_oscillation_arrays(series.times, series.column(observable))


def estimate_oscillation_arrays(times, values) -> OscillationFit:
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    ext = find_extrema(v)
    if len(ext) < 3:
        raise EstimationError(f"found {len(ext)} extrema, need at least 3 (overdamped?)")
    te = t[ext]
    k = np.arange(len(ext))
    # extremum k sits at t0 + k * half_period
    (half_period, t0), res, *_ = np.linalg.lstsq(np.column_stack([k, np.ones_like(k)]), te, rcond=None)
    freq_res = float(np.sqrt(res[0] / len(ext))) / half_period if len(res) else 0.0
    amp = 0.5 * np.abs(np.diff(v[ext]))
    tm = 0.5 * (te[1:] + te[:-1])
    good = amp > 0
    if good.sum() < 2:
        raise EstimationError("envelope has fewer than two non-zero amplitudes")
    (slope, _), res2, *_ = np.linalg.lstsq(
        np.column_stack([tm[good], np.ones(good.sum())]), np.log(amp[good]), rcond=None
    )
    decay_res = float(np.sqrt(res2[0] / good.sum())) if len(res2) else 0.0
    return OscillationFit(
        frequency=math.pi / half_period,
        decay=-float(slope),
        frequency_residual=freq_res,
        decay_residual=decay_res,
        n_extrema=len(ext),
    )


def oscillation_window(sys: ReducedSystem, periods: float = 4.0, per_period: int = 64) -> np.ndarray:
    """Linear grid from 0 resolving the fastest transient oscillation of the reduced system."""
    omega_max = float(np.abs(np.linalg.eigvals(sys.a_matrix).imag).max())
    rate_min = float(np.abs(np.linalg.eigvals(sys.a_matrix).real).min())
    if omega_max < 1e-9 * max(1.0, rate_min):
        t_end = periods / rate_min
        return np.linspace(0.0, t_end, int(periods * per_period) + 1)
    period = 2 * math.pi / omega_max
    return np.linspace(0.0, periods * period, int(periods * per_period) + 1)


def first_transient_extremum(
    sys: ReducedSystem, x0: np.ndarray, observable: str = "current"
) -> tuple[float, float]:
    """Time and value of the first extremum of an observable after t = 0."""
    times = oscillation_window(sys)
    series = series_from_bloch(times, affine_trajectory(sys, x0, times), sys.couplings)
    v = series.column(observable)
    ext = find_extrema(v)
    if len(ext) == 0:
        raise EstimationError("no transient extremum in the first oscillation periods")
    i = int(ext[0])
    return float(times[i]), float(v[i])


def settling_time(series: TimeSeries, target: float, rel: float = 0.1, observable: str = "current") -> float:
    """Earliest sample time after which the observable stays within rel*|target| of target."""
    v = series.column(observable)
    outside = np.flatnonzero(np.abs(v - target) > rel * abs(target))
    if len(outside) == 0:
        return float(series.times[0])
    last = int(outside[-1])
    if last == len(v) - 1:
        raise EstimationError("series never settles within the tolerance band")
    return float(series.times[last + 1])
