import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from spdeweak import rng
from spdeweak.errors import ConfigError, DomainError
from spdeweak.noise import (
    CovarianceSpec,
    exact_ou_variance,
    filter_increments,
    hs_condition_value,
    raw_increments,
    sample_filtered_increment,
    sample_raw_increment,
    sample_subinterval_pair,
)
from spdeweak.spectral import eigenvalues

PI2 = math.pi ** 2


def test_covariance_eigenvalues():
    assert np.array_equal(CovarianceSpec.white().q(3), [1.0, 1.0, 1.0])
    assert np.allclose(CovarianceSpec.power_decay(2).q(3), [1.0, 0.25, 1 / 9], rtol=1e-15)
    assert np.array_equal(CovarianceSpec.custom([2.0, 0.5]).q(4), [2.0, 0.5, 0.0, 0.0])


def test_covariance_validation():
    with pytest.raises(DomainError):
        CovarianceSpec.power_decay(0.0)
    with pytest.raises(DomainError):
        CovarianceSpec.custom([1.0, -0.1])
    with pytest.raises(ConfigError):
        CovarianceSpec.from_config({"kind": "pink"})
    with pytest.raises(ConfigError):
        CovarianceSpec.from_config({"kind": "power_decay"})


@pytest.mark.parametrize("cov", [CovarianceSpec.white(), CovarianceSpec.power_decay(1.5), CovarianceSpec.custom([1, 2])])
def test_covariance_config_round_trip(cov):
    assert CovarianceSpec.from_config(cov.to_config()) == cov


def test_hs_white_beta_04_against_zeta():
    oracle = float(mpmath.pi ** -1.2 * mpmath.zeta(1.2))
    rep = hs_condition_value(CovarianceSpec.white(), 0.4, 10 ** 7)
    assert rep.converges
    assert rep.partial_sum <= oracle <= rep.partial_sum + rep.tail_bound
    assert oracle == pytest.approx(1.41565, abs=1e-5)
    assert rep.partial_sum + rep.tail_bound == pytest.approx(oracle, rel=1e-6)


def test_hs_trace_class_beta_one_is_basel():
    rep = hs_condition_value(CovarianceSpec.power_decay(2.0), 1.0, 10 ** 6)
    assert rep.converges
    assert rep.partial_sum <= math.pi ** 2 / 6 <= rep.partial_sum + rep.tail_bound


def test_hs_white_beta_half_diverges():
    rep = hs_condition_value(CovarianceSpec.white(), 0.5, 1000)
    assert not rep.converges
    assert rep.tail_bound == math.inf


def test_filtered_variance_example():
    tau = 0.01
    expected = tau * math.exp(-2 * PI2 * tau)
    assert expected == pytest.approx(0.0082089, abs=5e-7)
    raw = raw_increments(CovarianceSpec.white(), tau, 1, 0, np.arange(200_000), 0)
    filt = filter_increments(raw, tau)[:, 0]
    se = expected * math.sqrt(2 / filt.size)
    assert abs(filt.var() - expected) < 4 * se


def test_filtered_is_filter_of_raw():
    cov = CovarianceSpec.power_decay(1.0)
    path = rng.SeedPath(3, 4, 5)
    raw = sample_raw_increment(cov, 0.02, 9, path)
    filt = sample_filtered_increment(cov, 0.02, 9, path)
    assert filt.filtered and not raw.filtered
    assert np.array_equal(filt.values.coeffs, np.exp(-eigenvalues(9) * 0.02) * raw.values.coeffs)


def test_raw_increment_variances():
    cov = CovarianceSpec.power_decay(2.0)
    x = raw_increments(cov, 0.05, 4, 1, np.arange(100_000), 0)
    v = x.var(axis=0)
    expected = 0.05 * cov.q(4)
    assert np.all(np.abs(v - expected) < 4 * expected * math.sqrt(2 / x.shape[0]))


def test_subinterval_pair_is_independent_and_additive():
    cov = CovarianceSpec.white()
    tau, s = 0.04, 0.01
    firsts, rests = [], []
    for sid in range(20_000):
        a, b = sample_subinterval_pair(cov, tau, s, 2, rng.SeedPath(9, sid, 0))
        firsts.append(a.values.coeffs[0])
        rests.append(b.values.coeffs[0])
    a, b = np.array(firsts), np.array(rests)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(a.size)
    total = a + b
    assert abs(total.var() - tau) < 4 * tau * math.sqrt(2 / a.size)


def test_subinterval_pair_rejects_bad_split():
    with pytest.raises(DomainError):
        sample_subinterval_pair(CovarianceSpec.white(), 0.1, 0.1, 2, rng.SeedPath(0, 0, 0))


def test_exact_ou_variance_example():
    v = exact_ou_variance(CovarianceSpec.white(), 1.0, 1)[0]
    assert v == pytest.approx((1 - math.exp(-2 * PI2)) / (2 * PI2), rel=1e-15)
    assert v == pytest.approx(0.0506603, abs=5e-7)


def test_exact_ou_variance_matches_isometry_integral():
    cov = CovarianceSpec.power_decay(1.0)
    T, a = 0.3, 2.0
    got = exact_ou_variance(cov, T, 3, drift=a)
    for k in range(3):
        lam = eigenvalues(3)[k]
        ref, _ = integrate.quad(lambda s: math.exp(-2 * (lam - a) * (T - s)) * cov.q(3)[k], 0, T, epsabs=1e-14)
        assert got[k] == pytest.approx(ref, rel=1e-10)
