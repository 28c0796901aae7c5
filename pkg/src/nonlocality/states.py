"""Bipartite density matrices.

Composite row index is ``m * d_b + mu`` with the first (Alice) subsystem most
significant; index 0 is spin up, 1 is spin down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .densemat import (
    HERMITIAN_TOL,
    as_matrix,
    hermiticity_defect,
    hermitian_eigenvalues,
    kron,
)

TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-12


class InvalidStateError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Bipartite:
    """Hermitian operator on a d_a x d_b system; not necessarily positive."""

    mat: np.ndarray
    d_a: int
    d_b: int

    def __post_init__(self):
        a = as_matrix(self.mat)
        if self.d_a < 1 or self.d_b < 1 or a.shape[0] != self.d_a * self.d_b:
            raise ValueError(f"order {a.shape[0]} does not factor as {self.d_a} x {self.d_b}")
        object.__setattr__(self, "mat", _frozen(a))

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b

    def entry(self, m: int, mu: int, n: int, nu: int) -> complex:
        return complex(self.mat[m * self.d_b + mu, n * self.d_b + nu])


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    passed: bool
    problems: list[str] = field(default_factory=list)


def validate(rho, d_a: int | None = None, d_b: int | None = None) -> ValidationReport:
    """Check the density-matrix invariants without raising."""
    if isinstance(rho, Bipartite):
        mat, d_a, d_b = rho.mat, rho.d_a, rho.d_b
    else:
        mat = as_matrix(rho)
    problems = []
    if d_a is not None and d_b is not None and mat.shape[0] != d_a * d_b:
        problems.append(f"order {mat.shape[0]} != {d_a}*{d_b}")
    herm, (r, c) = hermiticity_defect(mat)
    if herm > HERMITIAN_TOL:
        problems.append(f"not Hermitian: defect {herm:.3e} at ({r}, {c})")
    trace_defect = abs(np.trace(mat) - 1.0)
    if trace_defect > TRACE_TOL:
        problems.append(f"trace defect {trace_defect:.3e}")
    min_eig = math.nan
    if herm <= HERMITIAN_TOL:
        hermitized = (mat + mat.conj().T) / 2
        min_eig = hermitian_eigenvalues(hermitized).min
        if min_eig < -PSD_TOL:
            problems.append(f"negative eigenvalue {min_eig:.3e}")
    return ValidationReport(herm, float(trace_defect), min_eig, not problems, problems)


@dataclass(frozen=True)
class BipartiteDensity(Bipartite):
    """A valid density matrix: Hermitian, unit trace, positive semidefinite."""

    def __post_init__(self):
        super().__post_init__()
        report = validate(self.mat, self.d_a, self.d_b)
        if not report.passed:
            raise InvalidStateError("; ".join(report.problems))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def _density(mat, d_a: int, d_b: int) -> BipartiteDensity:
    return BipartiteDensity(np.asarray(mat, dtype=complex), d_a, d_b)


def _check_fraction(x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"fraction x={x} outside [0, 1]")
    return x


def singlet_vector() -> np.ndarray:
    """(|0>|1> - |1>|0>) / sqrt(2)."""
    return np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)


def singlet() -> BipartiteDensity:
    s = np.zeros((4, 4))
    s[1, 1] = s[2, 2] = 0.5
    s[1, 2] = s[2, 1] = -0.5
    return _density(s, 2, 2)


def werner(x: float) -> BipartiteDensity:
    """Singlet fraction x mixed with the maximally mixed state."""
    x = _check_fraction(x)
    return _density(x * singlet().mat + (1.0 - x) * np.eye(4) / 4.0, 2, 2)


def _check_amplitudes(a: complex, b: complex) -> tuple[complex, complex]:
    a, b = complex(a), complex(b)
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > NORM_TOL:
        raise ValueError(f"|a|^2 + |b|^2 = {abs(a) ** 2 + abs(b) ** 2} != 1")
    return a, b


def gisin_family(a: complex, b: complex, x: float) -> BipartiteDensity:
    """Fraction x of a|01> + b|10>, the rest split evenly over |00> and |11>."""
    a, b = _check_amplitudes(a, b)
    x = _check_fraction(x)
    r = np.zeros((4, 4), dtype=complex)
    r[0, 0] = r[3, 3] = (1.0 - x) / 2.0
    r[1, 1] = x * abs(a) ** 2
    r[2, 2] = x * abs(b) ** 2
    r[1, 2] = x * a * b.conjugate()
    r[2, 1] = r[1, 2].conjugate()
    return _density(r, 2, 2)


def singlet_plus_polarized(x: float) -> BipartiteDensity:
    x = _check_fraction(x)
    up = np.zeros((4, 4))
    up[0, 0] = 1.0
    return _density(x * singlet().mat + (1.0 - x) * up, 2, 2)


@dataclass(frozen=True)
class ProductEnsemble:
    """Weighted list of (weight, left factor, right factor) density matrices."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(w), as_matrix(l), as_matrix(r)) for w, l, r in self.terms)
        if not terms:
            raise ValueError("empty ensemble")
        total = sum(w for w, _, _ in terms)
        if any(w <= 0 for w, _, _ in terms):
            raise ValueError("ensemble weights must be positive")
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"ensemble weights sum to {total}, not 1")
        d_a, d_b = terms[0][1].shape[0], terms[0][2].shape[0]
        for _, left, right in terms:
            if left.shape[0] != d_a or right.shape[0] != d_b:
                raise ValueError("ensemble factors have inconsistent dimensions")
            for factor in (left, right):
                report = validate(factor)
                if not report.passed:
                    raise InvalidStateError("invalid factor: " + "; ".join(report.problems))
        object.__setattr__(self, "terms", terms)

    @property
    def dims(self) -> tuple[int, int]:
        return self.terms[0][1].shape[0], self.terms[0][2].shape[0]


def from_ensemble(e: ProductEnsemble | list) -> BipartiteDensity:
    if not isinstance(e, ProductEnsemble):
        e = ProductEnsemble(tuple(e))
    d_a, d_b = e.dims
    mat = sum(w * kron(left, right) for w, left, right in e.terms)
    return _density(mat, d_a, d_b)


def basis_projector(d: int, k: int) -> np.ndarray:
    p = np.zeros((d, d))
    p[k, k] = 1.0
    return p


# random generators used by property tests and acceptance checks

def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_separable(d_a: int, d_b: int, rng: np.random.Generator, max_terms: int = 6) -> BipartiteDensity:
    k = int(rng.integers(1, max_terms + 1))
    weights = rng.dirichlet(np.ones(k))
    weights = weights / weights.sum()
    terms = [(w, random_pure(d_a, rng), random_pure(d_b, rng)) for w in weights if w > 0]
    total = sum(w for w, _, _ in terms)
    terms = [(w / total, l, r) for w, l, r in terms]
    return from_ensemble(ProductEnsemble(tuple(terms)))


def random_density(d_a: int, d_b: int, rng: np.random.Generator) -> BipartiteDensity:
    """Full-rank state: random unitary conjugation of a random diagonal density."""
    d = d_a * d_b
    p = rng.dirichlet(np.ones(d))
    u = random_unitary(d, rng)
    mat = (u * p) @ u.conj().T
    mat = (mat + mat.conj().T) / 2
    mat /= np.trace(mat).real
    return _density(mat, d_a, d_b)
