"""Master-equation generator on the 4x4 two-molecule density matrix.

Basis ordering is |g1 g2>, |e1 g2>, |g1 e2>, |e1 e2>, so the basis index is
``e1 + 2*e2`` and two-site operators are ``kron(op_site2, op_site1)``.

Vectorization is column-major (Fortran order): ``vec(A @ X @ B) =
kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .observables import ObservableSet
from .params import Couplings, SystemParams

DIM = 4
_TOL = 1e-10

_I2 = np.eye(2, dtype=complex)
# single site, basis (g, e)
_SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
_SP = _SM.conj().T
_SZ = np.diag([-1.0, 1.0]).astype(complex)

SIGMA_MINUS = (np.kron(_I2, _SM), np.kron(_SM, _I2))
SIGMA_PLUS = (np.kron(_I2, _SP), np.kron(_SP, _I2))
SIGMA_Z = (np.kron(_I2, _SZ), np.kron(_SZ, _I2))


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v).reshape(DIM, DIM, order="F")


def left(a: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> a @ rho."""
    return np.kron(np.eye(DIM), a)


def right(b: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> rho @ b."""
    return np.kron(b.T, np.eye(DIM))


def commutator(h: np.ndarray) -> np.ndarray:
    return left(h) - right(h)


def exchange_dissipator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> [a, rho b] + [a rho, b] = 2 a rho b - rho b a - b a rho."""
    return 2.0 * left(a) @ right(b) - right(b @ a) - left(b @ a)


@dataclass(frozen=True)
class Generator:
    """Vectorized master-equation generator, d vec(rho)/dt = superop @ vec(rho)."""

    superop: np.ndarray
    couplings: Couplings

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.superop @ vec(rho))


def build_generator(p: SystemParams) -> Generator:
    """Assemble the full generator for the given parameters.

    The collective term carries the bare collective rate, without thermal
    occupation factors, matching the single-channel form used throughout.
    """
    c = p.couplings
    gammas = (p.gamma1, p.gamma2)
    n = p.n_photon
    sm, sp = SIGMA_MINUS, SIGMA_PLUS
    s = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for k, l in ((0, 1), (1, 0)):
        sign = (-1) ** (k + 1)  # molecule index k+1 in {1, 2}
        s += 0.5j * p.delta * sign * commutator(sp[k] @ sm[k])
        s += -1j * c.big_omega * commutator(sp[k] @ sm[l])
        s += gammas[k] * n * exchange_dissipator(sp[k], sm[k])
        s += gammas[k] * (1.0 + n) * exchange_dissipator(sm[k], sp[k])
        s += c.big_gamma * exchange_dissipator(sm[k], sp[l])
    return Generator(superop=s, couplings=c)


_PAULI = (
    np.eye(2),
    np.array([[0, 1], [1, 0]]),
    np.array([[0, -1j], [1j, 0]]),
    np.diag([1.0, -1.0]),
)
# vec(rho) = PAULI_BASIS @ r with r real: r holds expectation values of the
# 16 Pauli products (up to a factor), a Hermitian coordinate system.
PAULI_BASIS = np.array([vec(np.kron(a, b) / 2) for a in _PAULI for b in _PAULI]).T.astype(complex)
PAULI_BASIS_INV = np.linalg.inv(PAULI_BASIS)


def real_superop(gen: Generator) -> np.ndarray:
    """The generator in Pauli-product coordinates, where it must be real.

    Exchange rates of 1e5 or more make complex-basis exponentials lose
    the small imaginary part of the coherence; the real form does not.
    """
    r = PAULI_BASIS_INV @ gen.superop @ PAULI_BASIS
    scale = max(1.0, np.abs(r).max())
    leak = np.abs(r.imag).max()
    if leak > 1e-13 * scale:
        raise ValidationError(f"generator does not preserve Hermiticity ({leak:.3g})")
    return r.real.copy()


def ground_state_rho() -> np.ndarray:
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def check_density_matrix(rho: np.ndarray, tol: float = _TOL) -> None:
    """Raise ValidationError unless rho is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.shape != (DIM, DIM):
        raise ValidationError(f"expected a {DIM}x{DIM} matrix, got shape {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > tol:
        raise ValidationError(f"density matrix not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise ValidationError(f"density matrix trace is {tr}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -tol:
        raise ValidationError(f"density matrix has negative eigenvalue {lam:.3g}")


def expect(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


def observables_from_rho(
    rho: np.ndarray, c: Couplings, *, validate: bool = True
) -> ObservableSet:
    if validate:
        check_density_matrix(rho)
    coherence = complex(rho[1, 2])
    return ObservableSet(
        current=2.0 * c.big_omega * coherence.imag,
        coherence=coherence,
        pop1=partial_trace(rho, 1)[1, 1].real,
        pop2=partial_trace(rho, 2)[1, 1].real,
        zz=expect(SIGMA_Z[0] @ SIGMA_Z[1], rho).real,
    )


def partial_trace(rho: np.ndarray, keep: int) -> np.ndarray:
    """Reduced 2x2 density matrix of molecule ``keep`` (1 or 2)."""
    # index = e1 + 2*e2 -> reshape to (e2, e1, e2', e1')
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("kakb->ab", t)
    if keep == 2:
        return np.einsum("akbk->ab", t)
    raise ValueError("keep must be 1 or 2")
