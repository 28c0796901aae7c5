"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of ``complex128`` (or ``float64`` when the
caller knows the data is real).  The Hermitian eigensolver is a cyclic Jacobi
sweep on the real-symmetric embedding ``[[Re, -Im], [Im, Re]]``, whose spectrum
is the Hermitian spectrum with every eigenvalue doubled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
DEFAULT_EIG_TOL = 1e-12
MAX_ORDER = 4096
_MAX_SWEEPS = 100


class NonHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues plus the largest off-diagonal magnitude left at exit."""

    values: np.ndarray
    residual: float

    def __len__(self) -> int:
        return len(self.values)

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_ORDER:
        raise ValueError(f"matrix order {a.shape[0]} exceeds {MAX_ORDER}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermiticity_defect(m) -> tuple[float, tuple[int, int]]:
    """Largest |M[r, c] - conj(M[c, r])| and the (r, c) where it occurs."""
    a = np.asarray(m)
    d = np.abs(a - a.conj().T)
    idx = np.unravel_index(int(np.argmax(d)), d.shape)
    return float(d[idx]), (int(idx[0]), int(idx[1]))


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(m)
    defect, (r, c) = hermiticity_defect(a)
    if defect > tol:
        raise NonHermitianError(
            f"matrix is not Hermitian: |M[{r},{c}] - conj(M[{c},{r}])| = {defect:.3e} > {tol:.1e}"
        )
    return a


def _jacobi_small(a: list[list[float]], threshold: float) -> tuple[list[float], float]:
    # scalar path; for tiny orders numpy call overhead dominates the arithmetic
    n = len(a)
    for _ in range(_MAX_SWEEPS):
        off = max((abs(a[p][q]) for p in range(n) for q in range(p + 1, n)), default=0.0)
        if off < threshold:
            return [a[i][i] for i in range(n)], off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) < threshold:
                    continue
                tau = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                a[p][q] = a[q][p] = 0.0
    raise ConvergenceError("Jacobi sweeps did not converge")


def symmetric_jacobi(a, tol: float = DEFAULT_EIG_TOL, vectors: bool = False):
    """Cyclic Jacobi on a real symmetric matrix.

    Returns ``(values, vecs, residual)`` with unsorted eigenvalues; ``vecs`` is
    None unless requested.  Stops once every off-diagonal entry is below
    ``tol * max(1, ||a||_F)``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    if n <= 6 and not vectors:
        vals, off = _jacobi_small(a.tolist(), threshold)
        return np.array(vals), None, off

    # round-robin ordering: each step rotates N/2 disjoint pairs at once, and a
    # sweep of N-1 steps visits every pair exactly once
    size = n + (n % 2)
    if size != n:
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(size) if vectors else None
    iu = np.triu_indices(size, 1)
    players = np.arange(size)
    half = size // 2
    for _ in range(_MAX_SWEEPS):
        off = float(np.max(np.abs(a[iu]))) if size > 1 else 0.0
        if off < threshold:
            vecs = v[:n, :n] if v is not None else None
            return np.diag(a)[:n].copy(), vecs, off
        for _ in range(size - 1):
            p, q = players[:half], players[::-1][:half]
            apq = a[p, q]
            active = np.abs(apq) >= threshold
            if np.any(active):
                p, q, apq = p[active], q[active], apq[active]
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cp, cq = a[:, p], a[:, q]
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = a[p], a[q]
                a[p], a[q] = c[:, None] * rp - s[:, None] * rq, s[:, None] * rp + c[:, None] * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                if v is not None:
                    vp, vq = v[:, p], v[:, q]
                    v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
            players = np.concatenate(([players[0]], np.roll(players[1:], 1)))
    raise ConvergenceError("Jacobi sweeps did not converge")


def _embed(a: np.ndarray) -> np.ndarray:
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def hermitian_eigh(m, tol: float = DEFAULT_EIG_TOL) -> tuple[np.ndarray, np.ndarray, float]:
    """Eigenvalues (ascending) and unit eigenvectors as columns, via Jacobi."""
    a = check_hermitian(m)
    d = a.shape[0]
    if not np.iscomplexobj(a) or not np.any(a.imag):
        vals, vecs, off = symmetric_jacobi(a.real, tol, vectors=True)
        order = np.argsort(vals, kind="stable")
        return vals[order], vecs[:, order].astype(complex), off
    vals, vecs, off = symmetric_jacobi(_embed(a), tol, vectors=True)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    # every eigenvalue appears twice; within a cluster of 2k equal values the
    # vectors x + i*y span the k-dimensional complex eigenspace
    scale = max(1.0, float(np.max(np.abs(vals))))
    breaks = np.flatnonzero(np.diff(vals) > 1e-8 * scale) + 1
    out_vals, out_vecs = [], []
    for group in np.split(np.arange(2 * d), breaks):
        k = len(group) // 2
        if k == 0:
            continue
        z = vecs[:d, group] + 1j * vecs[d:, group]
        left, _, _ = np.linalg.svd(z, full_matrices=False)
        out_vecs.append(left[:, :k])
        out_vals.extend(vals[group[::2]][:k])
    return np.array(out_vals), np.hstack(out_vecs), off


def hermitian_eigenvalues(m, tol: float = DEFAULT_EIG_TOL) -> Spectrum:
    """Ascending spectrum of a Hermitian matrix.

    Raises NonHermitianError when any |M[r,c] - conj(M[c,r])| exceeds 1e-12.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = check_hermitian(m)
    if not np.iscomplexobj(a) or not np.any(a.imag):
        vals, _, off = symmetric_jacobi(a.real, tol)
        return Spectrum(np.sort(vals), off)
    vals, _, off = symmetric_jacobi(_embed(a), tol)
    return Spectrum(np.sort(vals)[::2].copy(), off)


def kron(a, b) -> np.ndarray:
    """Tensor product with entry (a*dB + b, c*dB + d) = A[a, c] * B[b, d]."""
    return np.kron(as_matrix(a), as_matrix(b))


def _pair_count(dim: int) -> int:
    n = 0
    while 4**n < dim:
        n += 1
    if 4**n != dim or n == 0:
        raise ValueError(f"dimension {dim} is not a positive power of 4")
    return n


def _pair_to_party_axes(n: int) -> list[int]:
    # pair-major bits (m1 n1 m2 n2 ...) -> party-major (m1 .. mn n1 .. nn)
    return list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))


def _permute_qubits(m: np.ndarray, n: int, axes: list[int]) -> np.ndarray:
    k = 2 * n
    t = m.reshape([2] * (2 * k))
    return t.transpose(axes + [k + i for i in axes]).reshape(4**n, 4**n)


def regroup_pairs_to_parties(m, n: int) -> np.ndarray:
    """Reorder a pair-major n-pair operator into Alice-block x Bob-block layout."""
    a = as_matrix(m)
    if _pair_count(a.shape[0]) != n:
        raise ValueError(f"order {a.shape[0]} does not match {n} pairs")
    return _permute_qubits(a, n, _pair_to_party_axes(n))


def regroup_parties_to_pairs(m, n: int) -> np.ndarray:
    """Inverse of :func:`regroup_pairs_to_parties`."""
    a = as_matrix(m)
    if _pair_count(a.shape[0]) != n:
        raise ValueError(f"order {a.shape[0]} does not match {n} pairs")
    inverse = list(np.argsort(_pair_to_party_axes(n)))
    return _permute_qubits(a, n, inverse)


def batched_symmetric_eigenvalues(a, tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """Cyclic Jacobi applied to a stack of small real symmetric matrices.

    ``a`` has shape (K, N, N); returns (K, N) eigenvalues sorted ascending.
    Every matrix in the stack sees the same rotation schedule; a rotation is a
    no-op for matrices whose (p, q) entry is already below threshold.
    """
    a = np.array(a, dtype=float)
    k, n, _ = a.shape
    threshold = tol * np.maximum(1.0, np.linalg.norm(a, axis=(1, 2)))
    iu = np.triu_indices(n, 1)
    rows = np.arange(k)
    for _ in range(_MAX_SWEEPS):
        if n == 1 or np.all(np.max(np.abs(a[:, iu[0], iu[1]]), axis=1) < threshold):
            return np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)
        for p, q in zip(*iu):
            apq = a[:, p, q]
            active = np.abs(apq) >= threshold
            if not np.any(active):
                continue
            safe = np.where(active, apq, 1.0)
            tau = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            cp, cq = a[:, :, p].copy(), a[:, :, q].copy()
            a[:, :, p] = c[:, None] * cp - s[:, None] * cq
            a[:, :, q] = s[:, None] * cp + c[:, None] * cq
            rp, rq = a[:, p, :].copy(), a[:, q, :].copy()
            a[:, p, :] = c[:, None] * rp - s[:, None] * rq
            a[:, q, :] = s[:, None] * rp + c[:, None] * rq
            a[rows[active], p, q] = 0.0
            a[rows[active], q, p] = 0.0
    raise ConvergenceError("batched Jacobi sweeps did not converge")
