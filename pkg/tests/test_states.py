import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocality import states
from nonlocality.separability import ppt_check
from nonlocality.states import (
    BipartiteDensity,
    InvalidStateError,
    ProductEnsemble,
    basis_projector,
    from_ensemble,
    gisin_family,
    singlet,
    singlet_plus_polarized,
    validate,
    werner,
)

fractions = st.floats(0.0, 1.0)


def test_singlet_entries():
    s = singlet()
    assert s.entry(0, 1, 0, 1) == 0.5
    assert s.entry(1, 0, 1, 0) == 0.5
    assert s.entry(0, 1, 1, 0) == -0.5
    assert s.entry(1, 0, 0, 1) == -0.5
    assert np.count_nonzero(s.mat) == 4
    assert np.trace(s.mat) == pytest.approx(1)
    assert s.purity == pytest.approx(1)


def test_werner_endpoints():
    np.testing.assert_allclose(werner(1.0).mat, singlet().mat)
    np.testing.assert_allclose(werner(0.0).mat, np.eye(4) / 4)


def test_werner_substitution():
    assert werner(0.5).entry(0, 1, 0, 1) == pytest.approx(0.375)


@pytest.mark.parametrize("x", [-0.1, 1.5])
def test_werner_range(x):
    with pytest.raises(ValueError):
        werner(x)


def test_gisin_substitution():
    r = gisin_family(1 / math.sqrt(2), 1 / math.sqrt(2), 0.6)
    assert r.entry(0, 1, 1, 0) == pytest.approx(0.3)
    assert r.entry(0, 0, 0, 0) == pytest.approx(0.2)


def test_gisin_product_limit_is_diagonal_and_ppt():
    r = gisin_family(1, 0, 0.7)
    np.testing.assert_array_equal(r.mat, np.diag(np.diag(r.mat)))
    assert ppt_check(r).is_ppt


def test_gisin_conjugation_convention():
    a, b = 0.6, 0.8j
    r = gisin_family(a, b, 0.5)
    assert r.entry(0, 1, 1, 0) == pytest.approx(0.5 * a * np.conj(b))
    assert r.entry(1, 0, 0, 1) == pytest.approx(0.5 * np.conj(a) * b)


def test_gisin_rejects_unnormalized():
    with pytest.raises(ValueError):
        gisin_family(1, 1, 0.5)


@given(theta=st.floats(0, math.pi / 2), phase=st.floats(0, 2 * math.pi), x=fractions)
def test_gisin_trace(theta, phase, x):
    r = gisin_family(math.cos(theta), math.sin(theta) * np.exp(1j * phase), x)
    assert np.trace(r.mat).real == pytest.approx(1.0, abs=1e-12)


@given(theta=st.floats(0, math.pi / 2))
def test_gisin_pure_at_one(theta):
    assert gisin_family(math.cos(theta), math.sin(theta), 1.0).purity == pytest.approx(1.0)


def test_singlet_plus_polarized_values():
    np.testing.assert_array_equal(singlet_plus_polarized(0.0).mat, basis_projector(4, 0))
    np.testing.assert_allclose(singlet_plus_polarized(1.0).mat, singlet().mat)
    r = singlet_plus_polarized(0.4)
    assert r.entry(0, 0, 0, 0) == pytest.approx(0.6)
    assert r.entry(0, 1, 0, 1) == pytest.approx(0.2)
    assert r.entry(1, 0, 1, 0) == pytest.approx(0.2)


@given(x=fractions)
def test_constructors_validate(x):
    for rho in (werner(x), singlet_plus_polarized(x), gisin_family(0.6, 0.8, x)):
        assert validate(rho).passed


def test_from_ensemble_single_product():
    up = basis_projector(2, 0)
    np.testing.assert_array_equal(from_ensemble([(1.0, up, up)]).mat, basis_projector(4, 0))


def test_from_ensemble_mixture():
    up, down = basis_projector(2, 0), basis_projector(2, 1)
    rho = from_ensemble([(0.5, up, up), (0.5, down, down)])
    np.testing.assert_allclose(rho.mat, np.diag([0.5, 0, 0, 0.5]))


def test_from_ensemble_rejects_bad_weights():
    up = basis_projector(2, 0)
    with pytest.raises(ValueError):
        from_ensemble([(0.5, up, up), (0.4, up, up)])


def test_ensemble_rejects_invalid_factor():
    with pytest.raises(InvalidStateError):
        ProductEnsemble(((1.0, np.diag([1.5, -0.5]), basis_projector(2, 0)),))


def test_validate_reports_trace_defect():
    report = validate(np.diag([0.4, 0.2, 0.2, 0.1]), 2, 2)
    assert not report.passed
    assert report.trace_defect == pytest.approx(0.1)


def test_validate_reports_negative_eigenvalue():
    report = validate(np.diag([0.6, 0.3, 0.3, -0.2]), 2, 2)
    assert not report.passed
    assert report.min_eigenvalue == pytest.approx(-0.2)
    assert any("negative" in p for p in report.problems)


def test_validate_reports_hermiticity():
    m = np.eye(4) / 4
    m = m.astype(complex)
    m[0, 1] = 0.1j
    report = validate(m)
    assert not report.passed and report.hermiticity_defect == pytest.approx(0.1)


def test_density_rejects_invalid():
    with pytest.raises(InvalidStateError):
        BipartiteDensity(np.diag([0.6, 0.3, 0.3, -0.2]), 2, 2)


def test_density_is_immutable():
    rho = werner(0.5)
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1.0


@given(d_a=st.integers(2, 3), d_b=st.integers(2, 3), seed=st.integers(0, 2**32 - 1))
def test_random_generators_valid(d_a, d_b, seed):
    rng = np.random.default_rng(seed)
    assert validate(states.random_separable(d_a, d_b, rng)).passed
    assert validate(states.random_density(d_a, d_b, rng)).passed
