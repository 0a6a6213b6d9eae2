"""Physical parameters of the dimer and the retarded dipole-dipole couplings.

All rates are dimensionless multiples of the decay rate of molecule 1, and
times are in units of its inverse. The geometry enters only through inner
products of unit vectors, so it is stored that way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, SingularityError

# Below this effective distance the radial kernels are evaluated by series.
SERIES_CROSSOVER = 0.5
_SERIES_TERMS = 14

# Planck * c / Boltzmann, in metre kelvin (CODATA exact constants).
_HC_OVER_K = 6.62607015e-34 * 299792458.0 / 1.380649e-23

_GRAM_TOL = 1e-12


@dataclass(frozen=True)
class Geometry:
    """Relative orientation and distance of the two transition dipoles.

    Attributes:
        xi: effective distance, separation times the mean transition
            wavenumber.
        f1: cosine between dipole 1 and the separation axis.
        f2: cosine between dipole 2 and the separation axis.
        dd: cosine between the two dipoles.
    """

    xi: float
    f1: float = 0.0
    f2: float = 0.0
    dd: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.xi) or self.xi < 0:
            raise DomainError(f"effective distance must be >= 0, got {self.xi}")
        for name in ("f1", "f2", "dd"):
            v = getattr(self, name)
            if not -1.0 - _GRAM_TOL <= v <= 1.0 + _GRAM_TOL:
                raise DomainError(f"{name}={v} is not a cosine")
        if not self.is_realizable():
            raise DomainError(
                f"no unit vectors realize dd={self.dd}, f1={self.f1}, f2={self.f2}"
            )

    @classmethod
    def parallel(cls, xi: float, f: float = 0.0) -> Geometry:
        """Parallel dipoles making the same angle with the separation axis."""
        return cls(xi=xi, f1=f, f2=f, dd=1.0)

    @classmethod
    def from_vectors(cls, xi: float, d1, d2, r12) -> Geometry:
        """Build from (not necessarily normalized) 3-vectors."""
        d1, d2, r12 = (np.asarray(v, dtype=float) for v in (d1, d2, r12))
        norms = [np.linalg.norm(v) for v in (d1, d2, r12)]
        if min(norms) == 0:
            raise DomainError("direction vectors must be non-zero")
        d1, d2, r12 = (v / n for v, n in zip((d1, d2, r12), norms))
        return cls(
            xi=xi,
            f1=float(d1 @ r12),
            f2=float(d2 @ r12),
            dd=float(d1 @ d2),
        )

    def gram(self) -> np.ndarray:
        return np.array(
            [
                [1.0, self.dd, self.f1],
                [self.dd, 1.0, self.f2],
                [self.f1, self.f2, 1.0],
            ]
        )

    def is_realizable(self) -> bool:
        return bool(np.linalg.eigvalsh(self.gram()).min() >= -_GRAM_TOL)

    @property
    def near_factor(self) -> float:
        """Angular factor of the 1/xi^3 and 1/xi^2 kernels."""
        return self.dd - 3.0 * self.f1 * self.f2

    @property
    def far_factor(self) -> float:
        """Angular factor of the 1/xi (radiative) kernels."""
        return self.dd - self.f1 * self.f2


@dataclass(frozen=True)
class Couplings:
    """Collective decay rate and coherent exchange rate, in units of gamma1."""

    big_gamma: float
    big_omega: float

    @property
    def t12(self) -> complex:
        return complex(self.big_gamma, self.big_omega)


@dataclass(frozen=True)
class SystemParams:
    """Rates, detuning, thermal occupation and geometry of the dimer.

    ``gamma_override_zero`` forces the collective decay rate to zero while
    keeping the coherent exchange, a reference model used to isolate the
    role of collective decay.
    """

    geometry: Geometry
    gamma2: float = 0.9999
    delta: float = 0.0
    n_photon: float = 0.0
    gamma1: float = 1.0
    gamma_override_zero: bool = False
    _couplings: Couplings = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_rates(self.gamma1, self.gamma2)
        if not math.isfinite(self.delta):
            raise DomainError(f"detuning must be finite, got {self.delta}")
        if not (math.isfinite(self.n_photon) and self.n_photon >= 0):
            raise DomainError(f"mean photon number must be >= 0, got {self.n_photon}")
        object.__setattr__(self, "_couplings", _compute_couplings(self))

    @property
    def couplings(self) -> Couplings:
        return self._couplings

    @property
    def kappa1(self) -> float:
        return kappa(self.gamma1, self.n_photon)

    @property
    def kappa2(self) -> float:
        return kappa(self.gamma2, self.n_photon)

    def with_(self, **changes) -> SystemParams:
        """Copy with some fields replaced; geometry fields may be passed flat."""
        geo = {k: changes.pop(k) for k in ("xi", "f1", "f2", "dd") if k in changes}
        if "f" in changes:
            f = changes.pop("f")
            geo.setdefault("f1", f)
            geo.setdefault("f2", f)
        if geo:
            changes["geometry"] = replace(self.geometry, **geo)
        return replace(self, **changes)


def _check_rates(gamma1: float, gamma2: float) -> None:
    for name, g in (("gamma1", gamma1), ("gamma2", gamma2)):
        if not (math.isfinite(g) and g > 0):
            raise DomainError(f"{name} must be > 0, got {g}")


def _compute_couplings(p: SystemParams) -> Couplings:
    g = p.geometry
    big_gamma = 0.0 if p.gamma_override_zero else coupling_gamma(g, p.gamma1, p.gamma2)
    if g.xi == 0:
        raise SingularityError("coherent exchange diverges at zero distance")
    return Couplings(big_gamma, coupling_omega(g, p.gamma1, p.gamma2))


# -- radial kernels ---------------------------------------------------------
#
# sinc(x)   = sin x / x
# k_near(x) = cos x / x^2 - sin x / x^3          -> -1/3 as x -> 0
# c1(x)     = cos x / x
# k_omega(x)= sin x / x^2 + cos x / x^3
#
# The series forms below are exact term-by-term rearrangements of the Taylor
# expansions of sin and cos.

_FACT = [math.factorial(k) for k in range(2 * _SERIES_TERMS + 4)]


def _even_series(x2: float, coeffs: list[float]) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x2 + c
    return acc


_SINC_C = [(-1) ** n / _FACT[2 * n + 1] for n in range(_SERIES_TERMS)]
# n-th coefficient of k_near in powers of x^2: (-1)^(n+1) 2(n+1) / (2n+3)!
_KNEAR_C = [(-1) ** (n + 1) * 2 * (n + 1) / _FACT[2 * n + 3] for n in range(_SERIES_TERMS)]
_COS_C = [(-1) ** n / _FACT[2 * n] for n in range(_SERIES_TERMS)]
# k_omega(x) = x^-3 + x^-1 * sum_{m>=0} (-1)^(m+1) (1 - 2(m+1)) / (2m+2)! x^(2m)
_KOMEGA_C = [(-1) ** (m + 1) * (1 - 2 * (m + 1)) / _FACT[2 * m + 2] for m in range(_SERIES_TERMS)]


def kernels_series(xi: float) -> tuple[float, float, float, float]:
    """Radial kernels (sinc, k_near, c1, k_omega) from truncated Taylor series."""
    x2 = xi * xi
    sinc = _even_series(x2, _SINC_C)
    k_near = _even_series(x2, _KNEAR_C)
    if xi == 0:
        return sinc, k_near, math.inf, math.inf
    c1 = _even_series(x2, _COS_C) / xi
    k_omega = 1.0 / (xi * x2) + _even_series(x2, _KOMEGA_C) / xi
    return sinc, k_near, c1, k_omega


def kernels_direct(xi: float) -> tuple[float, float, float, float]:
    """Radial kernels evaluated from the closed forms."""
    if xi <= 0:
        raise SingularityError("closed-form kernels need xi > 0")
    s, c = math.sin(xi), math.cos(xi)
    return (
        s / xi,
        c / xi**2 - s / xi**3,
        c / xi,
        s / xi**2 + c / xi**3,
    )


def radial_kernels(xi: float) -> tuple[float, float, float, float]:
    if xi < SERIES_CROSSOVER:
        return kernels_series(xi)
    return kernels_direct(xi)


def coupling_gamma(
    g: Geometry, gamma1: float = 1.0, gamma2: float = 0.9999, *, kernels=radial_kernels
) -> float:
    """Collective (cross) decay rate of the pair.

    Finite at zero separation, where it tends to sqrt(gamma1*gamma2)*dd.
    """
    _check_rates(gamma1, gamma2)
    sinc, k_near, _, _ = kernels(g.xi)
    return 1.5 * math.sqrt(gamma1 * gamma2) * (g.far_factor * sinc + g.near_factor * k_near)


def coupling_omega(
    g: Geometry, gamma1: float = 1.0, gamma2: float = 0.9999, *, kernels=radial_kernels
) -> float:
    """Coherent exchange rate of the pair; diverges as xi^-3 at the origin."""
    _check_rates(gamma1, gamma2)
    if g.xi == 0:
        raise SingularityError("coherent exchange diverges at zero distance")
    _, _, c1, k_omega = kernels(g.xi)
    return 1.5 * math.sqrt(gamma1 * gamma2) * (-g.far_factor * c1 + g.near_factor * k_omega)


def static_vdd_limit(g: Geometry, gamma1: float = 1.0, gamma2: float = 0.9999) -> float:
    """Static (non-retarded) dipole-dipole shift, the xi^-3 part of the exchange rate."""
    _check_rates(gamma1, gamma2)
    if g.xi == 0:
        raise SingularityError("static dipole-dipole energy diverges at zero distance")
    return 1.5 * math.sqrt(gamma1 * gamma2) * g.near_factor / g.xi**3


def photon_number_from_temperature(wavelength: float, temperature: float) -> float:
    """Bose-Einstein occupation of a thermal mode.

    Args:
        wavelength: vacuum wavelength in metres.
        temperature: source temperature in kelvin.
    """
    if not (wavelength > 0 and temperature > 0):
        raise DomainError("wavelength and temperature must be positive")
    x = _HC_OVER_K / (wavelength * temperature)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def kappa(gamma: float, n_photon: float) -> float:
    """Thermal-broadened population relaxation rate 2*gamma*(1 + 2N)."""
    if not gamma > 0:
        raise DomainError(f"rate must be > 0, got {gamma}")
    if not n_photon >= 0:
        raise DomainError(f"mean photon number must be >= 0, got {n_photon}")
    return 2.0 * gamma * (1.0 + 2.0 * n_photon)
