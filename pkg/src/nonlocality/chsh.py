"""CHSH expectation values and the exact two-qubit maximum.

The correlation matrix is ``T[p, q] = Tr[(s_p x s_q) rho]`` with Paulis in
(x, y, z) order.  For fixed rho the CHSH operator's largest expectation is
``2 sqrt(M)``, M being the sum of the two largest eigenvalues of ``T^T T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densemat import symmetric_jacobi
from .states import Bipartite, _check_amplitudes

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# PAULI_PAIRS[p, q] = s_p (x) s_q
PAULI_PAIRS = np.einsum("pab,qcd->pqacbd", PAULI, PAULI).reshape(3, 3, 4, 4)

IMAG_TOL = 1e-10
TSIRELSON = 2.0 * math.sqrt(2.0)
WERNER_BELL_THRESHOLD = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ChshSettings:
    """Unit measurement directions: A = a.sigma, A' = a_prime.sigma, etc."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError(f"setting {name} must be a unit 3-vector")
            object.__setattr__(self, name, v)


def _require_qubits(rho: Bipartite) -> None:
    if rho.d_a != 2 or rho.d_b != 2:
        raise ValueError(f"CHSH needs a two-qubit state, got {rho.d_a} x {rho.d_b}")


def correlation_from_matrix(mat: np.ndarray) -> np.ndarray:
    """T from a raw 4x4 matrix; imaginary parts are dropped unchecked."""
    # Tr[P rho] = sum_ij P[i, j] rho[j, i]
    return np.einsum("pqij,ji->pq", PAULI_PAIRS, mat).real


def t_matrix(rho: Bipartite) -> np.ndarray:
    _require_qubits(rho)
    t = np.einsum("pqij,ji->pq", PAULI_PAIRS, rho.mat)
    worst = float(np.max(np.abs(t.imag)))
    if worst > IMAG_TOL:
        raise ValueError(f"correlation traces have imaginary part {worst:.2e}")
    return t.real.copy()


def m_value(t: np.ndarray) -> float:
    """Sum of the two largest eigenvalues of T^T T."""
    vals, _, _ = symmetric_jacobi(t.T @ t)
    vals = np.sort(vals)
    return float(vals[-1] + vals[-2])


def chsh_from_t(t: np.ndarray) -> float:
    return 2.0 * math.sqrt(max(m_value(t), 0.0))


def chsh_max(rho: Bipartite) -> float:
    return chsh_from_t(t_matrix(rho))


def bell_expectation(rho: Bipartite, s: ChshSettings) -> float:
    """<AB + AB' + A'B - A'B'> evaluated through the correlation matrix."""
    t = t_matrix(rho)
    return float(s.a @ t @ (s.b + s.b_prime) + s.a_prime @ t @ (s.b - s.b_prime))


def _unit(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        v = rng.normal(size=3)
        norm = np.linalg.norm(v)
    return v / norm


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    return _unit(rng.normal(size=3), rng)


def brute_force_chsh(
    rho: Bipartite,
    restarts: int = 32,
    tol: float = 1e-13,
    seed: int = 0,
    max_iters: int = 10_000,
) -> tuple[float, ChshSettings]:
    """Search over measurement settings by alternating closed-form updates.

    With Bob's directions fixed, Alice's best choices are a along T(b + b')
    and a' along T(b - b'); Bob's update is the mirror image with T^T.  Each
    half-step can only increase the value, so each restart climbs to a fixed
    point.  Independent of the eigenvalue formula in :func:`chsh_max`.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    t = t_matrix(rho)
    rng = np.random.default_rng(seed)
    best_value, best = -math.inf, None
    for _ in range(restarts):
        b, bp = _random_unit(rng), _random_unit(rng)
        value = -math.inf
        for _ in range(max_iters):
            a, ap = _unit(t @ (b + bp), rng), _unit(t @ (b - bp), rng)
            b, bp = _unit(t.T @ (a + ap), rng), _unit(t.T @ (a - ap), rng)
            new = float(a @ t @ (b + bp) + ap @ t @ (b - bp))
            if new - value <= tol:
                value = max(value, new)
                break
            value = new
        if value > best_value:
            best_value, best = value, ChshSettings(a, ap, b, bp)
    return best_value, best


def gisin_filter_threshold(a: complex, b: complex) -> float:
    """Reference constant 1/(1 + 2|ab|(sqrt(2) - 1)); not derived from chsh_max."""
    a, b = _check_amplitudes(a, b)
    return 1.0 / (1.0 + 2.0 * abs(a * b) * (math.sqrt(2.0) - 1.0))


def violation_threshold(make_state, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bisect for the fraction where chsh_max(make_state(x)) crosses 2.

    Needs chsh_max <= 2 at ``lo`` and > 2 at ``hi``.
    """
    if chsh_max(make_state(lo)) > 2.0 or chsh_max(make_state(hi)) <= 2.0:
        raise ValueError("bracket does not straddle the CHSH bound")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if chsh_max(make_state(mid)) > 2.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
