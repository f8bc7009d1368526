import warnings

import numpy as np
import pytest

from spdeweak.errors import FitError
from spdeweak.montecarlo import SampleStats, block_ranges, map_blocks
from spdeweak.rates import fit_rate, usable_points


def test_exact_power_law_time():
    taus = 2.0 ** -np.arange(4, 11)
    fit = fit_rate([(t, 3.0 * t, 0.0) for t in taus])
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert not fit.weighted


def test_exact_power_law_eigenvalue_abscissa():
    lam = (np.array([8, 16, 32, 64, 128]) * np.pi) ** 2
    fit = fit_rate([(h, 0.7 / h, 0.0) for h in lam])
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)


def test_weighted_exact_power_law():
    taus = 2.0 ** -np.arange(4, 9)
    fit = fit_rate([(t, t ** 0.5, 1e-3 * t ** 0.5) for t in taus])
    assert fit.weighted
    assert fit.slope == pytest.approx(0.5, abs=1e-12)


def test_two_points_is_an_error():
    with pytest.raises(FitError):
        fit_rate([(0.1, 0.1, 0.0), (0.05, 0.05, 0.0)])


def test_noise_floor_guard():
    pts = [(0.1, 1.0, 0.01), (0.05, 0.5, 0.01), (0.025, 0.25, 0.01), (0.0125, 0.03, 0.01)]
    kept, excluded = usable_points(pts)
    assert len(kept) == 3 and excluded == [(0.0125, 0.03, 0.01)]
    with pytest.warns(UserWarning):
        fit = fit_rate(pts)
    assert all(err >= 4 * se for _, err, se in fit.points)
    assert fit.slope == pytest.approx(1.0, abs=1e-12)


def test_non_positive_errors_excluded():
    pts = [(0.1, 1.0, 0.0), (0.05, 0.5, 0.0), (0.025, 0.25, 0.0), (0.01, 0.0, 0.0), (0.005, -1.0, 0.0)]
    with pytest.warns(UserWarning):
        fit = fit_rate(pts)
    assert len(fit.excluded) == 2


def test_fit_is_deterministic():
    pts = [(t, t ** 0.8 * (1 + 0.1 * np.sin(1 / t)), 0.0) for t in 2.0 ** -np.arange(3, 9)]
    assert fit_rate(pts) == fit_rate(pts)


@pytest.mark.parametrize("weighted", [True, False])
def test_confidence_interval_coverage(weighted):
    taus = 2.0 ** -np.arange(4, 11)
    true_slope, sigma = 0.5, 0.05
    hits = 0
    for seed in range(100):
        g = np.random.default_rng(seed)
        clean = 2.0 * taus ** true_slope
        err = clean * (1 + sigma * g.standard_normal(taus.size))
        se = sigma * clean if weighted else np.zeros_like(clean)
        fit = fit_rate(list(zip(taus, err, se)))
        lo, hi = fit.slope_ci
        hits += lo <= true_slope <= hi
    assert hits >= 90


def test_sample_stats():
    st = SampleStats.from_values([1.0, 2.0, 3.0, 4.0])
    assert st.mean == 2.5
    assert st.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2, rel=1e-15)
    assert SampleStats.from_values([5.0]).stderr == float("inf")


def test_sample_stats_independent_of_order():
    v = np.random.default_rng(1).standard_normal(10_001) * 1e8 + 1.0
    a = SampleStats.from_values(v)
    b = SampleStats.from_values(v[::-1])
    assert a == b


def test_blocks_and_threads():
    assert [b.tolist() for b in block_ranges(5, 2)] == [[0, 1], [2, 3], [4]]
    fn = lambda s: np.sqrt(s.astype(float))
    one = map_blocks(fn, 1000, 64, threads=1)
    many = map_blocks(fn, 1000, 64, threads=4)
    assert np.array_equal(one, many)
    assert np.array_equal(one, np.sqrt(np.arange(1000.0)))
