"""Partial transpose and the positive-partial-transpose separability test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densemat import Spectrum, as_matrix, hermitian_eigenvalues, kron
from .states import Bipartite, BipartiteDensity, _check_amplitudes

PPT_TOL = 1e-10
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class PptVerdict:
    min_eigenvalue: float
    is_ppt: bool
    spectrum: Spectrum
    tol: float


def partial_transpose(rho: Bipartite) -> Bipartite:
    """Transpose the first subsystem's indices: sigma[m mu, n nu] = rho[n mu, m nu].

    Transposing the second subsystem instead gives the full transpose of this
    result, hence the same spectrum.
    """
    t = rho.mat.reshape(rho.d_a, rho.d_b, rho.d_a, rho.d_b)
    sigma = t.transpose(2, 1, 0, 3).reshape(rho.dim, rho.dim)
    return Bipartite(sigma, rho.d_a, rho.d_b)


def ppt_check(rho: Bipartite, tol: float = PPT_TOL) -> PptVerdict:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    spectrum = hermitian_eigenvalues(partial_transpose(rho).mat)
    return PptVerdict(spectrum.min, spectrum.min >= -tol, spectrum, tol)


def unitarity_defect(u) -> float:
    u = as_matrix(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def local_unitary_conjugate(rho: BipartiteDensity, u_a, u_b) -> BipartiteDensity:
    """(U_a x U_b) rho (U_a x U_b)^dagger."""
    u_a, u_b = as_matrix(u_a), as_matrix(u_b)
    if u_a.shape[0] != rho.d_a or u_b.shape[0] != rho.d_b:
        raise ValueError("local unitary orders do not match subsystem dimensions")
    for name, u in (("first", u_a), ("second", u_b)):
        defect = unitarity_defect(u)
        if defect > UNITARY_TOL:
            raise ValueError(f"{name} factor is not unitary (defect {defect:.2e})")
    w = kron(u_a, u_b)
    mat = w @ rho.mat @ w.conj().T
    return BipartiteDensity((mat + mat.conj().T) / 2, rho.d_a, rho.d_b)


def gisin_ppt_threshold(a: complex, b: complex) -> float:
    """Singlet-like fraction above which the |01>,|10> mixture fails the test: 1/(1 + 2|ab|)."""
    a, b = _check_amplitudes(a, b)
    return 1.0 / (1.0 + 2.0 * abs(a * b))


WERNER_PPT_THRESHOLD = 1.0 / 3.0
