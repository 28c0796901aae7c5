"""Collective tests on n identical pairs with postselection.

Each party holds one particle of every pair.  After a local transformation,
particles 2..n are tested for spin up and the run is kept only if all of them
pass.  Only two rows of each local unitary survive this (those with all tested
indices 0), so a local transformation is described by a :class:`LocalRows`
pair.  Composite party indices are big-endian: a = m_1 2^{n-1} + ... + m_n.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densemat import regroup_pairs_to_parties
from .states import Bipartite, BipartiteDensity

MAX_PAIRS = 6
ROW_TOL = 1e-12
MIN_SUCCESS = 1e-14


class PostselectionError(ArithmeticError):
    """Raised when no run survives the spin-up tests."""


def _readonly(v) -> np.ndarray:
    a = np.array(v)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LocalRows:
    u0: np.ndarray
    u1: np.ndarray

    def __post_init__(self):
        u0, u1 = np.asarray(self.u0), np.asarray(self.u1)
        if u0.ndim != 1 or u0.shape != u1.shape:
            raise ValueError("rows must be 1-d vectors of equal length")
        dim = u0.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"row length {dim} is not a power of 2")
        if abs(np.linalg.norm(u0) - 1) > ROW_TOL or abs(np.linalg.norm(u1) - 1) > ROW_TOL:
            raise ValueError("rows must have unit norm")
        if abs(np.vdot(u0, u1)) > ROW_TOL:
            raise ValueError("rows must be orthogonal")
        object.__setattr__(self, "u0", _readonly(u0))
        object.__setattr__(self, "u1", _readonly(u1))

    @property
    def n(self) -> int:
        return self.u0.shape[0].bit_length() - 1

    def matrix(self) -> np.ndarray:
        """2 x 2^n array with the rows stacked."""
        return np.vstack([self.u0, self.u1])

    @classmethod
    def from_matrix(cls, m) -> "LocalRows":
        m = np.asarray(m)
        return cls(m[0], m[1])


@dataclass(frozen=True)
class PostselectionOutcome:
    rho_new: BipartiteDensity
    success_probability: float


def _check_pairs(n: int) -> int:
    if not 1 <= n <= MAX_PAIRS:
        raise ValueError(f"pair count {n} outside 1..{MAX_PAIRS}")
    return n


def pair_power(rho: Bipartite, n: int) -> np.ndarray:
    """rho tensored n times, reordered to (Alice's n qubits) x (Bob's n qubits)."""
    _check_pairs(n)
    if rho.d_a != 2 or rho.d_b != 2:
        raise ValueError("pair_power needs a two-qubit pair state")
    mat = rho.mat
    if not np.any(mat.imag):
        mat = mat.real
    out = mat
    for _ in range(n - 1):
        out = np.kron(out, mat)
    return regroup_pairs_to_parties(out, n) if n > 1 else out.copy()


def xor_rows(n: int) -> LocalRows:
    """u0 = e_{00..0}, u1 = e_{11..1}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u0 = np.zeros(2**n)
    u1 = np.zeros(2**n)
    u0[0] = 1.0
    u1[-1] = 1.0
    return LocalRows(u0, u1)


def parity_signs(n: int) -> np.ndarray:
    """(-1)^(nu + popcount(index)) for nu in {0, 1}; shape (2, 2^n)."""
    bits = np.array([bin(i).count("1") for i in range(2**n)])
    return np.array([(-1.0) ** (bits % 2), (-1.0) ** ((bits + 1) % 2)])


def basis_flip_rows(v: LocalRows) -> LocalRows:
    """Re-express Bob's rows after relabelling his spin-down state as -|1>.

    Row nu, component with index bits (n, n', ...), picks up the sign
    (-1)^(nu + n + n' + ...).  The map is its own inverse.
    """
    return LocalRows.from_matrix(parity_signs(v.n) * v.matrix())


def mirror_rows(u: LocalRows) -> LocalRows:
    """Bob's rows mirroring Alice's under the singlet's sign asymmetry."""
    return basis_flip_rows(u)


def retained_operator(u: LocalRows, v: LocalRows) -> np.ndarray:
    """4 x 4^n operator A[(mu, nu), (a, b)] = U[mu, a] V[nu, b]."""
    if u.n != v.n:
        raise ValueError("Alice and Bob rows are for different pair counts")
    return np.kron(u.matrix(), v.matrix())


def postselected_matrix(power: np.ndarray, u_mat: np.ndarray, v_mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Unnormalized A P A^dagger and its trace, for raw 2 x 2^n row arrays."""
    a = np.kron(u_mat, v_mat)
    kept = a @ power @ a.conj().T
    return kept, float(np.trace(kept).real)


def postselect(rho: Bipartite, n: int, u: LocalRows, v: LocalRows) -> PostselectionOutcome:
    """State of the untested first pair, given every tested spin came up.

    ``success_probability`` is the trace before renormalization.
    """
    if u.n != n or v.n != n:
        raise ValueError(f"rows are not for {n} pairs")
    kept, prob = postselected_matrix(pair_power(rho, n), u.matrix(), v.matrix())
    if prob < MIN_SUCCESS:
        raise PostselectionError(
            f"postselection annihilates the state (success probability {prob:.2e})"
        )
    mat = kept / prob
    mat = (mat + mat.conj().T) / 2
    return PostselectionOutcome(BipartiteDensity(mat, 2, 2), min(prob, 1.0))
