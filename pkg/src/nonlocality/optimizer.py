"""Search for the local rows that maximize the postselected CHSH value.

The search runs over real rows only: the Werner pair power is real, so
complex phases cannot help.  In ``mirrored`` mode Bob's rows are derived
from Alice's by the parity sign map; ``independent`` mode searches both.

Each restart is a projected ascent: central finite-difference gradient in the
ambient parameter space, Armijo backtracking from a Barzilai-Borwein trial
step, then Gram-Schmidt back onto orthonormal row pairs.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chsh import PAULI_PAIRS
from .collective import (
    MIN_SUCCESS,
    LocalRows,
    pair_power,
    parity_signs,
    postselect,
    xor_rows,
)
from .densemat import batched_symmetric_eigenvalues
from .states import werner

MODES = ("mirrored", "independent")
START_SETS = ("random", "random+xor")
MAX_OPTIMIZE_PAIRS = 5
TRANSITION_MARGIN = 1e-4

# real parts of the nine Pauli-pair matrices, enough for real 4x4 states
_PAULI_PAIRS_RE = PAULI_PAIRS.real.reshape(9, 4, 4)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 64
    max_iters: int = 2000
    step_tol: float = 1e-10
    objective_tol: float = 1e-9
    gradient_step: float = 1e-6
    seed: int = 0
    mode: str = "mirrored"
    start_set: str = "random+xor"
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be >= 1")
        if min(self.step_tol, self.objective_tol, self.gradient_step) <= 0:
            raise ValueError("tolerances must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.start_set not in START_SETS:
            raise ValueError(f"start_set must be one of {START_SETS}")


@dataclass(frozen=True)
class RestartResult:
    start_id: int
    start: str
    value: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class OptimizerReport:
    x: float
    n: int
    mode: str
    best_value: float
    best_rows: LocalRows
    best_bob_rows: LocalRows
    per_restart: list[RestartResult] = field(default_factory=list)
    xor_value: float = math.nan
    used_xor_start: bool = False

    @property
    def success_probability(self) -> float:
        return postselect(werner(self.x), self.n, self.best_rows, self.best_bob_rows).success_probability


@lru_cache(maxsize=32)
def _werner_power(x: float, n: int) -> np.ndarray:
    p = pair_power(werner(x), n).real.copy()
    p.setflags(write=False)
    return p


def _orthonormalize(u: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on the last-axis rows of (..., 2, d) arrays."""
    u0 = u[..., 0, :]
    u0 = u0 / np.linalg.norm(u0, axis=-1, keepdims=True)
    u1 = u[..., 1, :]
    u1 = u1 - np.sum(u0 * u1, axis=-1, keepdims=True) * u0
    u1 = u1 / np.linalg.norm(u1, axis=-1, keepdims=True)
    u1 = u1 - np.sum(u0 * u1, axis=-1, keepdims=True) * u0
    u1 = u1 / np.linalg.norm(u1, axis=-1, keepdims=True)
    return np.stack([u0, u1], axis=-2)


class _Objective:
    """Batched CHSH maximum of the postselected Werner pair."""

    def __init__(self, x: float, n: int, mode: str):
        self.x, self.n, self.mode = x, n, mode
        self.d = 2**n
        self.power = _werner_power(float(x), n)
        self.signs = parity_signs(n)
        self.size = (2 if mode == "mirrored" else 4) * self.d

    def rows(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal (K, 2, d) row arrays for Alice and Bob."""
        theta = np.atleast_2d(theta)
        k = theta.shape[0]
        u = _orthonormalize(theta[:, : 2 * self.d].reshape(k, 2, self.d))
        if self.mode == "mirrored":
            v = self.signs * u
        else:
            v = _orthonormalize(theta[:, 2 * self.d :].reshape(k, 2, self.d))
        return u, v

    def project(self, theta: np.ndarray) -> np.ndarray:
        u = _orthonormalize(theta[: 2 * self.d].reshape(2, self.d)).ravel()
        if self.mode == "mirrored":
            return u
        v = _orthonormalize(theta[2 * self.d :].reshape(2, self.d)).ravel()
        return np.concatenate([u, v])

    def values(self, theta: np.ndarray) -> np.ndarray:
        u, v = self.rows(theta)
        k = u.shape[0]
        a = np.einsum("kia,kjb->kijab", u, v).reshape(k, 4, self.d * self.d)
        kept = np.einsum("kia,kja->kij", (a.reshape(4 * k, -1) @ self.power).reshape(k, 4, -1), a)
        prob = np.trace(kept, axis1=1, axis2=2)
        ok = prob >= MIN_SUCCESS
        kept = kept / np.where(ok, prob, 1.0)[:, None, None]
        t = np.einsum("pij,kji->kp", _PAULI_PAIRS_RE, kept).reshape(k, 3, 3)
        eig = batched_symmetric_eigenvalues(np.einsum("kqp,kqr->kpr", t, t))
        m = np.maximum(eig[:, -1] + eig[:, -2], 0.0)
        return np.where(ok, 2.0 * np.sqrt(m), -np.inf)

    def value(self, theta: np.ndarray) -> float:
        return float(self.values(theta)[0])

    def gradient(self, theta: np.ndarray, h: float) -> np.ndarray:
        eye = np.eye(self.size) * h
        vals = self.values(np.concatenate([theta + eye, theta - eye]))
        return (vals[: self.size] - vals[self.size :]) / (2.0 * h)


def objective(x: float, n: int, u: LocalRows, mode: str = "mirrored", v: LocalRows | None = None) -> float:
    """CHSH maximum of the postselected state for Werner pairs of singlet fraction x.

    Returns -inf when the rows annihilate the state.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if u.n != n:
        raise ValueError(f"rows are not for {n} pairs")
    obj = _Objective(x, n, mode)
    if mode == "mirrored":
        theta = u.matrix().real.ravel()
    else:
        if v is None:
            raise ValueError("independent mode needs Bob's rows")
        theta = np.concatenate([u.matrix().real.ravel(), v.matrix().real.ravel()])
    return obj.value(theta)


def _ascend(obj: _Objective, theta: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, float, int, bool]:
    theta = obj.project(theta)
    f = obj.value(theta)
    if not np.isfinite(f):
        return theta, f, 0, False
    g = obj.gradient(theta, cfg.gradient_step)
    step = 1.0
    prev_theta = prev_g = None
    for it in range(1, cfg.max_iters + 1):
        gnorm2 = float(g @ g)
        if gnorm2 == 0.0:
            return theta, f, it, True
        if prev_theta is not None:
            s, y = theta - prev_theta, g - prev_g
            sy = float(s @ y)
            # ascent: curvature is negative near a maximum, so sy < 0
            if sy < 0:
                step = min(max(float(s @ s) / -sy, 1e-8), 1e3)
            else:
                step = min(step * 2.0, 1e3)
        accepted = False
        for _ in range(60):
            cand = obj.project(theta + step * g)
            fc = obj.value(cand)
            if fc >= f + 1e-4 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return theta, f, it, True
        moved = float(np.linalg.norm(cand - theta))
        gain = fc - f
        prev_theta, prev_g = theta, g
        theta, f = cand, fc
        if moved < cfg.step_tol or gain < cfg.objective_tol:
            return theta, f, it, True
        g = obj.gradient(theta, cfg.gradient_step)
    return theta, f, cfg.max_iters, False


def _xor_theta(n: int, mode: str) -> np.ndarray:
    u = xor_rows(n).matrix()
    if mode == "mirrored":
        return u.ravel()
    return np.concatenate([u.ravel(), (parity_signs(n) * u).ravel()])


def _run_restart(args) -> tuple[int, str, np.ndarray, float, int, bool]:
    x, n, cfg, start_id, kind, theta0 = args
    obj = _Objective(x, n, cfg.mode)
    if theta0 is None:
        rng = np.random.default_rng([cfg.seed, start_id])
        theta0 = rng.normal(size=obj.size)
    theta, f, iters, conv = _ascend(obj, theta0, cfg)
    return start_id, kind, theta, f, iters, conv


def _starts(x: float, n: int, cfg: OptimizerConfig, warm_start) -> list:
    tasks = []
    if cfg.start_set == "random+xor":
        tasks.append((x, n, cfg, len(tasks), "xor", _xor_theta(n, cfg.mode)))
    if warm_start is not None:
        tasks.append((x, n, cfg, len(tasks), "warm", np.asarray(warm_start, dtype=float)))
    first_random = len(tasks)
    for i in range(cfg.restarts):
        tasks.append((x, n, cfg, first_random + i, "random", None))
    return tasks


def _rows_from_theta(obj: _Objective, theta: np.ndarray) -> tuple[LocalRows, LocalRows]:
    u, v = obj.rows(theta)
    return LocalRows.from_matrix(u[0]), LocalRows.from_matrix(v[0])


def _theta_from_rows(u: LocalRows, v: LocalRows, mode: str) -> np.ndarray:
    if mode == "mirrored":
        return u.matrix().real.ravel()
    return np.concatenate([u.matrix().real.ravel(), v.matrix().real.ravel()])


def optimize(x: float, n: int, cfg: OptimizerConfig = OptimizerConfig(), warm_start=None) -> OptimizerReport:
    """Best postselected CHSH value over local rows, from many starting points.

    ``warm_start`` is a parameter vector (or a pair of LocalRows) tried in
    addition to the configured starts.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if not 1 <= n <= MAX_OPTIMIZE_PAIRS:
        raise ValueError(f"n must lie in 1..{MAX_OPTIMIZE_PAIRS}")
    if isinstance(warm_start, tuple) and isinstance(warm_start[0], LocalRows):
        warm_start = _theta_from_rows(*warm_start, cfg.mode)
    obj = _Objective(x, n, cfg.mode)
    tasks = _starts(x, n, cfg, warm_start)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_run_restart, tasks))
    else:
        results = [_run_restart(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    xor_value = obj.value(_xor_theta(n, cfg.mode))
    per_restart = [RestartResult(i, kind, float(f), it, conv) for i, kind, _, f, it, conv in results]
    best = max(results, key=lambda r: (r[3], -r[0]))
    theta = best[2]
    value = float(best[3])
    if not np.isfinite(value):
        theta, value = _xor_theta(n, cfg.mode), xor_value
    rows, bob = _rows_from_theta(obj, theta)
    return OptimizerReport(
        x=float(x),
        n=n,
        mode=cfg.mode,
        best_value=value,
        best_rows=rows,
        best_bob_rows=bob,
        per_restart=per_restart,
        xor_value=xor_value,
        used_xor_start=cfg.start_set == "random+xor",
    )


@dataclass(frozen=True)
class ScanPoint:
    x: float
    best_value: float
    xor_value: float
    success_probability: float
    n: int = 0
    mode: str = "mirrored"


def scan_curve(n: int, x_grid, cfg: OptimizerConfig = OptimizerConfig()) -> list[ScanPoint]:
    """One optimization per grid point, warm-started from the previous point's best rows."""
    grid = sorted(float(x) for x in x_grid)
    if any(not 0.0 <= x <= 1.0 for x in grid):
        raise ValueError("grid values must lie in [0, 1]")
    points, warm = [], None
    for x in grid:
        report = optimize(x, n, cfg, warm_start=warm)
        warm = (report.best_rows, report.best_bob_rows)
        points.append(
            ScanPoint(x, report.best_value, report.xor_value, report.success_probability, n, cfg.mode)
        )
    return points


def transition_point(points: list[ScanPoint], margin: float = TRANSITION_MARGIN) -> float | None:
    """Smallest grid x where the optimum beats the XOR rows by more than ``margin``."""
    for p in points:
        if p.best_value - p.xor_value > margin:
            return p.x
    return None
