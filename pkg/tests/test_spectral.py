import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spdeweak.errors import DomainError, RangeError
from spdeweak.spectral import (
    SpectralVector,
    apply_fractional_power,
    apply_inverse_semigroup,
    apply_semigroup,
    eigenvalue,
    eigenvalues,
    project,
    smoothing_bound_check,
    sobolev_norm,
)

finite = st.floats(-10, 10, allow_nan=False, allow_subnormal=False)
coeff_lists = st.lists(finite, min_size=1, max_size=40)
# e^{-30} times a tiny normal float drops into subnormals and loses digits
moderate = finite.filter(lambda x: x == 0 or abs(x) > 1e-290)


@pytest.mark.parametrize("k, expected", [(1, 9.869604401), (2, 39.47841760), (10, 986.9604401)])
def test_eigenvalue_examples(k, expected):
    assert eigenvalue(k) == pytest.approx(expected, abs=1e-8)


def test_eigenvalues_strictly_increasing():
    lam = eigenvalues(100)
    assert np.all(np.diff(lam) > 0)


@pytest.mark.parametrize("k", [0, -3, 1.5])
def test_eigenvalue_rejects_bad_index(k):
    with pytest.raises(DomainError):
        eigenvalue(k)


def test_vector_rejects_non_finite():
    with pytest.raises(DomainError):
        SpectralVector([1.0, np.nan])
    with pytest.raises(DomainError):
        SpectralVector([np.inf])
    with pytest.raises(DomainError):
        SpectralVector([])


def test_vector_is_immutable():
    v = SpectralVector([1.0, 2.0])
    with pytest.raises(ValueError):
        v.coeffs[0] = 3.0


def test_semigroup_examples():
    v = SpectralVector([0.3, -1.2, 4.0])
    assert apply_semigroup(v, 0.0) == v
    e1 = SpectralVector.basis(1, 3)
    out = apply_semigroup(e1, 1.0)
    assert out.coeffs[0] == pytest.approx(math.exp(-math.pi ** 2), rel=1e-14)
    assert out.coeffs[0] == pytest.approx(5.1723e-5, rel=1e-4)
    assert np.all(out.coeffs[1:] == 0)


def test_semigroup_rejects_bad_time():
    v = SpectralVector([1.0])
    with pytest.raises(DomainError):
        apply_semigroup(v, -0.1)
    with pytest.raises(DomainError):
        apply_semigroup(v, math.nan)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(0, 0.5), st.floats(0, 0.5))
def test_semigroup_law(c, s, t):
    v = SpectralVector(c)
    lhs = apply_semigroup(apply_semigroup(v, s), t).coeffs
    rhs = apply_semigroup(v, s + t).coeffs
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(0, 0.1))
def test_semigroup_norm_nonincreasing(c, t):
    v = SpectralVector(c)
    assert apply_semigroup(v, t).norm() <= v.norm() * (1 + 1e-15)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(0, 0.2), st.floats(-1.5, 1.5))
def test_power_and_semigroup_commute(c, t, gamma):
    v = SpectralVector(c)
    a = apply_fractional_power(apply_semigroup(v, t), gamma).coeffs
    b = apply_semigroup(apply_fractional_power(v, gamma), t).coeffs
    # atol only absorbs results that underflow into subnormals
    assert np.allclose(a, b, rtol=1e-14, atol=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.lists(moderate, min_size=1, max_size=12), st.floats(0, 1))
def test_inverse_semigroup_consistency(c, frac):
    v = SpectralVector(c)
    # stay inside lambda_n t <= 30
    t = frac * 30.0 / eigenvalues(v.n)[-1]
    back = apply_inverse_semigroup(apply_semigroup(v, t), t).coeffs
    assert np.allclose(back, v.coeffs, rtol=1e-10, atol=0)


def test_inverse_semigroup_overflow_domain():
    v = SpectralVector(np.ones(10))
    t_ok = 699.0 / eigenvalues(10)[-1]
    assert np.all(np.isfinite(apply_inverse_semigroup(v, t_ok).coeffs))
    with pytest.raises(RangeError):
        apply_inverse_semigroup(v, 701.0 / eigenvalues(10)[-1])


def test_fractional_power_examples():
    v = SpectralVector([1.0, -2.0, 0.5])
    assert apply_fractional_power(v, 0.0) == v
    e1 = SpectralVector.basis(1, 3)
    assert apply_fractional_power(e1, 0.5).coeffs[0] == pytest.approx(math.pi, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(-2, 2))
def test_fractional_power_inverse(c, gamma):
    v = SpectralVector(c)
    back = apply_fractional_power(apply_fractional_power(v, -gamma), gamma).coeffs
    assert np.allclose(back, v.coeffs, rtol=1e-12, atol=0)


def test_sobolev_norm_examples():
    v = SpectralVector([3.0, -4.0])
    assert sobolev_norm(v, 0.0) == pytest.approx(5.0, rel=1e-15)
    assert sobolev_norm(SpectralVector.basis(1, 4), 2.0) == pytest.approx(math.pi ** 2, rel=1e-14)
    assert sobolev_norm(SpectralVector.basis(2, 4), -1.0) == pytest.approx(0.159154943, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(-2, 2), st.floats(0, 2))
def test_sobolev_embedding(c, g1, dg):
    v = SpectralVector(c)
    assert sobolev_norm(v, g1) <= sobolev_norm(v, g1 + dg) * (1 + 1e-12)


def test_project_examples():
    v = SpectralVector(np.arange(1.0, 9.0))
    assert project(v, 8) == v
    e3 = SpectralVector.basis(3, 8)
    assert project(e3, 2) == SpectralVector.zeros(2)
    padded = project(SpectralVector([1.0, 2.0]), 4)
    assert np.array_equal(padded.coeffs, [1.0, 2.0, 0.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.integers(1, 50))
def test_project_orthogonality(c, m):
    v = SpectralVector(c)
    p = project(v, m)
    resid = v.coeffs.copy()
    resid[: min(m, v.n)] = 0.0
    embedded = project(p, v.n)
    assert np.linalg.norm(v.coeffs - embedded.coeffs) == pytest.approx(
        math.sqrt(np.sum(resid ** 2)), rel=1e-12, abs=1e-300
    )


def _brute_force_norm(gamma, t, kmax=10 ** 6):
    lam = eigenvalues(kmax)
    return float(np.max(lam ** gamma * np.exp(-lam * t)))


def test_smoothing_gamma_zero_is_contraction():
    for t in (1e-3, 0.1, 1.0):
        rep = smoothing_bound_check(0.0, t)
        assert rep.norm == pytest.approx(math.exp(-math.pi ** 2 * t), rel=1e-15)
        assert rep.norm <= 1.0


def test_smoothing_gamma_one_at_inverse_lambda1():
    t = 1.0 / math.pi ** 2
    rep = smoothing_bound_check(1.0, t)
    oracle = _brute_force_norm(1.0, t)
    assert rep.norm == pytest.approx(oracle, rel=1e-14)
    assert rep.norm == pytest.approx(math.pi ** 2 / math.e, rel=1e-14)
    assert rep.norm == pytest.approx(3.6308, abs=1e-4)
    assert rep.maximizer == 1


@pytest.mark.parametrize("t", [1e-3, 1e-2, 1e-1])
def test_smoothing_ratio_bounded(t):
    rep = smoothing_bound_check(0.5, t)
    assert rep.norm == pytest.approx(_brute_force_norm(0.5, t), rel=1e-14)
    assert rep.ratio <= (0.5 / math.e) ** 0.5 + 1e-9
    assert rep.bound == pytest.approx(0.4289, abs=1e-4)
    assert rep.within_bound


def test_smoothing_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        smoothing_bound_check(0.5, 0.0)
