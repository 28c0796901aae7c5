import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocality import states
from nonlocality.chsh import TSIRELSON, chsh_max
from nonlocality.collective import LocalRows, mirror_rows, postselect, xor_rows
from nonlocality.optimizer import (
    OptimizerConfig,
    ScanPoint,
    _Objective,
    objective,
    optimize,
    scan_curve,
    transition_point,
)
from oracles import xor_value_closed_form

FAST = OptimizerConfig(restarts=6, max_iters=300)


def test_objective_single_pair():
    # one pair: any rows are a local unitary, so the value is 2 sqrt(2) x
    assert objective(0.9, 1, xor_rows(1)) == pytest.approx(2 * math.sqrt(2) * 0.9)
    assert objective(0.9, 1, xor_rows(1)) == pytest.approx(2.5456, abs=1e-4)


def test_objective_two_singlets():
    assert objective(1.0, 2, xor_rows(2)) == pytest.approx(TSIRELSON)


def test_objective_independent_needs_bob():
    with pytest.raises(ValueError):
        objective(0.5, 2, xor_rows(2), mode="independent")


def test_objective_rejects_bad_mode():
    with pytest.raises(ValueError):
        objective(0.5, 2, xor_rows(2), mode="sideways")


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), x=st.floats(0.05, 1))
def test_batched_objective_matches_postselect(seed, n, x):
    rng = np.random.default_rng(seed)
    u = LocalRows.from_matrix(np.linalg.qr(rng.normal(size=(2**n, 2**n)))[0][:2])
    v = mirror_rows(u)
    want = chsh_max(postselect(states.werner(x), n, u, v).rho_new)
    assert objective(x, n, u) == pytest.approx(want, abs=1e-10)


def test_independent_objective_matches_postselect(rng):
    n, x = 2, 0.7
    u = LocalRows.from_matrix(np.linalg.qr(rng.normal(size=(4, 4)))[0][:2])
    v = LocalRows.from_matrix(np.linalg.qr(rng.normal(size=(4, 4)))[0][:2])
    want = chsh_max(postselect(states.werner(x), n, u, v).rho_new)
    assert objective(x, n, u, mode="independent", v=v) == pytest.approx(want, abs=1e-10)


def test_annihilating_rows_score_minus_inf():
    obj = _Objective(1.0, 2, "independent")
    theta = np.concatenate([np.eye(4)[:2].ravel(), np.eye(4)[:2].ravel()])
    assert obj.value(theta) == -np.inf


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(mode="both")
    with pytest.raises(ValueError):
        OptimizerConfig(start_set="xor")
    with pytest.raises(ValueError):
        OptimizerConfig(gradient_step=0)


def test_optimize_rejects_out_of_range():
    with pytest.raises(ValueError):
        optimize(1.2, 2, FAST)
    with pytest.raises(ValueError):
        optimize(0.5, 6, FAST)


def test_three_pairs_beats_xor():
    report = optimize(0.7, 3, OptimizerConfig(restarts=12))
    assert report.xor_value == pytest.approx(xor_value_closed_form(0.7, 3), abs=1e-12)
    assert report.best_value == pytest.approx(2.408735, abs=1e-5)
    assert report.best_value > report.xor_value + 1e-3


def test_three_pairs_value_at_0_6():
    assert optimize(0.6, 3, OptimizerConfig(restarts=12)).best_value == pytest.approx(2.142857, abs=1e-5)


def test_deterministic_for_seed():
    a = optimize(0.6, 3, FAST)
    b = optimize(0.6, 3, FAST)
    assert a.best_value == b.best_value
    np.testing.assert_array_equal(a.best_rows.matrix(), b.best_rows.matrix())
    assert [r.value for r in a.per_restart] == [r.value for r in b.per_restart]


def test_best_rows_are_orthonormal_and_reproduce_value():
    report = optimize(0.65, 3, FAST)
    u = report.best_rows.matrix()
    np.testing.assert_allclose(u @ u.T, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(report.best_bob_rows.matrix(), mirror_rows(report.best_rows).matrix())
    rho = postselect(states.werner(0.65), 3, report.best_rows, report.best_bob_rows).rho_new
    assert chsh_max(rho) == pytest.approx(report.best_value, abs=1e-10)
    assert 0 < report.success_probability <= 1


def test_restart_bookkeeping():
    report = optimize(0.5, 2, FAST)
    kinds = [r.start for r in report.per_restart]
    assert kinds[0] == "xor" and kinds.count("random") == FAST.restarts
    assert [r.start_id for r in report.per_restart] == list(range(len(kinds)))
    assert report.used_xor_start


def test_warm_start_is_tried():
    warm = (xor_rows(2), mirror_rows(xor_rows(2)))
    report = optimize(0.5, 2, OptimizerConfig(restarts=2, start_set="random"), warm_start=warm)
    assert [r.start for r in report.per_restart] == ["warm", "random", "random"]
    assert not report.used_xor_start


@pytest.mark.parametrize("x", [0.3, 0.55, 0.8])
def test_never_below_xor(x):
    report = optimize(x, 3, FAST)
    assert report.best_value >= report.xor_value - 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_never_above_tsirelson(n):
    assert optimize(0.95, n, FAST).best_value <= TSIRELSON + 1e-9


def test_single_pair_scan_is_linear():
    grid = np.linspace(0, 1, 6)
    for p in scan_curve(1, grid, OptimizerConfig(restarts=2, max_iters=50)):
        assert p.best_value == pytest.approx(2 * math.sqrt(2) * p.x, abs=1e-9)
        assert p.success_probability == pytest.approx(1.0)


def test_scan_is_monotone():
    points = scan_curve(3, np.arange(0.5, 0.81, 0.05), FAST)
    values = [p.best_value for p in points]
    assert all(b >= a - 2e-3 for a, b in zip(values, values[1:]))
    assert [p.n for p in points] == [3] * len(points)


def test_transition_point():
    pts = [ScanPoint(0.5, 2.0, 2.0, 1.0), ScanPoint(0.6, 2.1, 2.0, 1.0), ScanPoint(0.7, 2.5, 2.0, 1.0)]
    assert transition_point(pts) == 0.6
    assert transition_point(pts[:1]) is None
    assert transition_point(pts, margin=0.2) == 0.7


@pytest.mark.slow
def test_independent_mode_agrees_with_mirrored():
    cfg = OptimizerConfig(restarts=8, mode="independent")
    report = optimize(0.7, 3, cfg)
    assert report.best_value == pytest.approx(2.408735, abs=1e-4)


@pytest.mark.slow
def test_four_pairs_beats_xor():
    report = optimize(0.53, 4, OptimizerConfig(restarts=16))
    assert report.best_value == pytest.approx(2.0808, abs=1e-3)
    assert report.xor_value == pytest.approx(xor_value_closed_form(0.53, 4), abs=1e-12)


@pytest.mark.slow
@settings(max_examples=5)
@given(x=st.floats(0.05, 0.95))
def test_two_pairs_xor_is_optimal(x):
    report = optimize(x, 2, FAST)
    assert report.best_value == pytest.approx(report.xor_value, abs=1e-6)
