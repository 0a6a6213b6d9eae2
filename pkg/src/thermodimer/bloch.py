"""Closed linear equations for operator expectation values.

Two constructions live here. ``build_reduced_system`` writes down the 5x5
population/coherence block by hand. ``build_full_bloch_system`` derives all
15 equations from the master-equation generator by projecting the adjoint
generator onto the operator basis, so the two can be checked against each
other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liouvillian as lv
from .errors import ConsistencyError, ValidationError
from .observables import ObservableSet
from .params import Couplings, SystemParams

# x = (<s1z>, <s2z>, <s2+ s1->, <s1+ s2->, <s1z s2z>)
REDUCED_LABELS = ("s1z", "s2z", "s2+s1-", "s1+s2-", "s1z s2z")

_SM, _SP, _SZ = lv.SIGMA_MINUS, lv.SIGMA_PLUS, lv.SIGMA_Z

# Operator vector Q in its conventional order; entries are (label, operator).
Q_OPERATORS = (
    ("s1-", _SM[0]),
    ("s1+", _SP[0]),
    ("s1z", _SZ[0]),
    ("s2-", _SM[1]),
    ("s2+", _SP[1]),
    ("s2z", _SZ[1]),
    ("s1- s2-", _SM[0] @ _SM[1]),
    ("s1- s2+", _SM[0] @ _SP[1]),
    ("s1- s2z", _SM[0] @ _SZ[1]),
    ("s1+ s2-", _SP[0] @ _SM[1]),
    ("s1+ s2+", _SP[0] @ _SP[1]),
    ("s1+ s2z", _SP[0] @ _SZ[1]),
    ("s1z s2-", _SZ[0] @ _SM[1]),
    ("s1z s2+", _SZ[0] @ _SP[1]),
    ("s1z s2z", _SZ[0] @ _SZ[1]),
)

# Indices into Q of the four uncoupled subsystems.
SUBSYSTEMS = {
    "i": (6, 10),
    "ii": (0, 3, 8, 12),
    "iii": (1, 4, 11, 13),
    "iv": (2, 5, 7, 9, 14),
}

_BLOCK_TOL = 1e-13
_REAL_TOL = 1e-10


@dataclass(frozen=True)
class ReducedSystem:
    """dx/dt = a_matrix @ x + l_vector for the five subsystem-(iv) variables."""

    a_matrix: np.ndarray
    l_vector: np.ndarray
    couplings: Couplings


@dataclass(frozen=True)
class FullBlochSystem:
    m_matrix: np.ndarray
    b_vector: np.ndarray
    partition: tuple[str, ...]

    def block(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = np.array(SUBSYSTEMS[name])
        return self.m_matrix[np.ix_(idx, idx)], self.b_vector[idx]


def build_reduced_system(p: SystemParams) -> ReducedSystem:
    c = p.couplings
    g1, g2 = p.gamma1, p.gamma2
    k1, k2 = p.kappa1, p.kappa2
    t = c.t12
    tc = t.conjugate()
    gam = c.big_gamma
    ks = 0.5 * (k1 + k2)
    a = np.array(
        [
            [-k1, 0, -2 * tc, -2 * t, 0],
            [0, -k2, -2 * t, -2 * tc, 0],
            [t / 2, tc / 2, -ks - 1j * p.delta, 0, gam],
            [tc / 2, t / 2, 0, -ks + 1j * p.delta, gam],
            [-2 * g2, -2 * g1, 4 * gam, 4 * gam, -k1 - k2],
        ],
        dtype=complex,
    )
    l = np.array([-2 * g1, -2 * g2, 0, 0, 0], dtype=complex)
    return ReducedSystem(a_matrix=a, l_vector=l, couplings=c)


# x = REAL_BASIS @ y, y = ((s1z+s2z)/2, (s1z-s2z)/2, Re c, Im c, s1z s2z)
# with c = <s2+ s1->. In y the generator is real, and for gamma1 == gamma2,
# delta == 0 the antisymmetric pair (y1, y3) decouples exactly.
REAL_BASIS = np.array(
    [
        [1, 1, 0, 0, 0],
        [1, -1, 0, 0, 0],
        [0, 0, 1, 1j, 0],
        [0, 0, 1, -1j, 0],
        [0, 0, 0, 0, 1],
    ],
    dtype=complex,
)
REAL_BASIS_INV = np.linalg.inv(REAL_BASIS)


def to_real_coordinates(sys: ReducedSystem) -> tuple[np.ndarray, np.ndarray]:
    """Matrix and drive of the reduced system in the y coordinates.

    The transformed system is checked to be real rather than forced to be.
    """
    a = REAL_BASIS_INV @ sys.a_matrix @ REAL_BASIS
    l = REAL_BASIS_INV @ sys.l_vector
    scale = max(1.0, np.abs(a).max())
    leak = max(np.abs(a.imag).max(), np.abs(l.imag).max())
    if leak > 1e-13 * scale:
        raise ConsistencyError(f"reduced system is not real in y coordinates ({leak:.3g})")
    return a.real.copy(), l.real.copy()


def initial_state_ground() -> np.ndarray:
    return np.array([-1, -1, 0, 0, 1], dtype=complex)


def check_bloch_state(x: np.ndarray, tol: float = _REAL_TOL) -> None:
    """Raise ValidationError if x is not a physical reduced state."""
    x = np.asarray(x)
    if x.shape != (5,):
        raise ValidationError(f"expected a 5-vector, got shape {x.shape}")
    im = np.abs(x[[0, 1, 4]].imag).max()
    if im > tol:
        raise ValidationError(f"populations/correlator have imaginary part {im:.3g}")
    if abs(x[3] - np.conj(x[2])) > tol:
        raise ValidationError("cross-coherences are not complex conjugates")
    if np.any(np.abs(x[[0, 1, 4]].real) > 1 + tol):
        raise ValidationError("expectation of sigma_z outside [-1, 1]")


def observables_from_bloch(
    x: np.ndarray, c: Couplings, *, validate: bool = True
) -> ObservableSet:
    if validate:
        check_bloch_state(x)
    coherence = complex(x[2])
    return ObservableSet(
        current=2.0 * c.big_omega * coherence.imag,
        coherence=coherence,
        pop1=0.5 * (1.0 + x[0].real),
        pop2=0.5 * (1.0 + x[1].real),
        zz=float(x[4].real),
    )


def _operator_basis() -> np.ndarray:
    """Rows are the linear functionals rho -> Tr(O rho) for O in (1, Q...)."""
    ops = [np.eye(lv.DIM, dtype=complex)] + [op for _, op in Q_OPERATORS]
    return np.array([lv.vec(op.T) for op in ops])


def build_full_bloch_system(p: SystemParams) -> FullBlochSystem:
    """Derive the 15 expectation-value equations from the master equation.

    For each operator O in Q, d<O>/dt = Tr(O L[rho]) is a linear functional
    of rho; expanding it in the functionals of (1, Q) gives the constant
    drive and the row of the coupling matrix.
    """
    gen = lv.build_generator(p)
    basis = _operator_basis()  # (16, 16), row j <-> functional of op j
    derivs = basis[1:] @ gen.superop  # row i: functional of d<Q_i>/dt
    # derivs = coeffs @ basis  ->  coeffs = derivs @ inv(basis)
    coeffs = np.linalg.solve(basis.T, derivs.T).T
    b = coeffs[:, 0]
    m = coeffs[:, 1:]

    partition = [""] * len(Q_OPERATORS)
    for name, idx in SUBSYSTEMS.items():
        for i in idx:
            partition[i] = name
    full = FullBlochSystem(m_matrix=m, b_vector=b, partition=tuple(partition))
    _verify_partition(full)
    return full


def _verify_partition(full: FullBlochSystem) -> None:
    labels = np.array(full.partition)
    scale = max(1.0, np.abs(full.m_matrix).max())
    off = labels[:, None] != labels[None, :]
    leak = np.abs(full.m_matrix[off]).max(initial=0.0)
    if leak > _BLOCK_TOL * scale:
        raise ConsistencyError(f"generator couples distinct subsystems (|entry| {leak:.3g})")
    drive = np.abs(full.b_vector[labels != "iv"]).max(initial=0.0)
    if drive > _BLOCK_TOL * scale:
        raise ConsistencyError(f"drive outside subsystem (iv) ({drive:.3g})")
