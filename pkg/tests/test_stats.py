"""Statistical machinery: KS tests, weighted moments, convergence fits."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from kpzstat import specfun, stats
from kpzstat.errors import ParameterRegionError


def test_ks_uniform_null():
    rng = specfun.make_rng(1)
    x = rng.uniform(size=100_000)
    rep = stats.ks_one_sample(x, lambda s: np.clip(s, 0, 1))
    assert rep.passed
    assert rep.statistic < 1.95 / math.sqrt(100_000) * 1.5


def test_ks_gaussian_pass_and_shift_fail():
    rng = specfun.make_rng(2)
    x = rng.standard_normal(100_000)
    assert stats.ks_one_sample(x, ndtr).passed
    rep = stats.ks_one_sample(x + 0.5, ndtr)
    assert not rep.passed
    # the sup gap for a half-unit shift: 2 Phi(1/4) - 1
    expected_gap = 2 * ndtr(0.25) - 1
    assert rep.statistic == pytest.approx(expected_gap, abs=0.01)


def test_ks_weighted_matches_tilted_law():
    # weights e^{x} tilt N(0,1) exactly to N(1,1)
    rng = specfun.make_rng(3)
    x = rng.standard_normal(200_000)
    w = np.exp(x - x.max())
    rep = stats.ks_one_sample(x, lambda s: ndtr(s - 1.0), weights=w)
    assert rep.passed, rep.statistic
    assert rep.n_effective < x.size  # ESS-adjusted threshold


def test_ks_two_sample():
    rng = specfun.make_rng(4)
    a = rng.standard_normal(50_000)
    b = rng.standard_normal(50_000)
    assert stats.ks_two_sample(a, b).passed
    assert not stats.ks_two_sample(a, b + 0.3).passed
    with pytest.raises(ParameterRegionError):
        stats.ks_two_sample([], [1.0])


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.1, max_value=5.0), st.integers(min_value=0, max_value=2**31 - 1))
def test_ks_invariant_under_monotone_transform(scale, seed):
    rng = specfun.make_rng(seed)
    x = rng.standard_normal(2000)
    rep1 = stats.ks_one_sample(x, ndtr)
    # strictly monotone map applied to samples and reference alike
    f = lambda s: np.expm1(scale * s)
    finv_cdf = lambda s: ndtr(np.log1p(s) / scale)
    rep2 = stats.ks_one_sample(f(x), finv_cdf)
    assert rep1.statistic == pytest.approx(rep2.statistic, abs=1e-12)


def test_weighted_moments_basics():
    rng = specfun.make_rng(5)
    x = rng.standard_normal(100_000)
    vals, errs = stats.weighted_moments(x, None, orders=(0, 1, 2))
    assert vals[0] == 1.0 and errs[0] == 0.0
    assert vals[2] == pytest.approx(1.0, abs=3 * errs[2])
    # exponential tilt moves the mean to exactly 1
    lw = x.copy()
    vals, errs = stats.weighted_moments(x, lw, orders=(1,))
    assert vals[0] == pytest.approx(1.0, abs=3 * errs[0])


def test_weighted_moments_equal_weights_reduce_exactly():
    rng = specfun.make_rng(6)
    x = rng.standard_normal(4000)
    v1, _ = stats.weighted_moments(x, None, orders=(1, 2))
    v2, _ = stats.weighted_moments(x, np.full(x.size, -3.7), orders=(1, 2))
    assert np.allclose(v1, v2, rtol=1e-13)


def test_blocked_jackknife_sees_autocorrelation():
    # AR(1) synthetic chain: blocked stderr must exceed the naive iid stderr
    rng = specfun.make_rng(7)
    n, rho = 200_000, 0.95
    eps = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = eps[0]
    for i in range(1, n):
        x[i] = rho * x[i - 1] + math.sqrt(1 - rho * rho) * eps[i]
    _, errs = stats.weighted_moments(x, None, orders=(1,))
    naive = x.std(ddof=1) / math.sqrt(n)
    assert errs[0] > 2.0 * naive


def test_weighted_moments_input_validation():
    with pytest.raises(ParameterRegionError):
        stats.weighted_moments(np.arange(5), None, orders=(1,), n_blocks=20)
    with pytest.raises(ParameterRegionError):
        stats.weighted_moments(np.arange(100.0), np.full(100, np.inf), orders=(1,))


def test_histogram_weighted():
    rng = specfun.make_rng(8)
    x = rng.standard_normal(50_000)
    edges, dens, err = stats.weighted_histogram(x, np.linspace(-4, 4, 41))
    mass = np.sum(dens * np.diff(edges))
    assert mass == pytest.approx(1.0, abs=1e-3)
    assert np.all(err >= 0)


def test_chi2_helpers():
    obs = np.array([0.26, 0.24, 0.25, 0.25])
    rep = stats.chi2_flatness(obs, n_eff=1000)
    assert rep.passed
    rep = stats.chi2_flatness(np.array([0.4, 0.2, 0.2, 0.2]), n_eff=10_000)
    assert not rep.passed
    with pytest.raises(ParameterRegionError):
        stats.chi2_vs_expected([0.5, 0.5], [0.5, 0.0], 100)


def test_convergence_order_slopes():
    deltas = [1 / 256, 1 / 512, 1 / 1024, 1 / 2048]
    rng = specfun.make_rng(9)
    noise = lambda: 1.0 + 0.02 * rng.standard_normal()
    first = [3.0 * d * noise() for d in deltas]
    slope, _, _ = stats.convergence_order(deltas, first)
    assert slope == pytest.approx(1.0, abs=0.1)
    second = [3.0 * d * d * noise() for d in deltas]
    slope, _, _ = stats.convergence_order(deltas, second)
    assert slope == pytest.approx(2.0, abs=0.1)
    with pytest.raises(ParameterRegionError):
        stats.convergence_order([1e-3, 1e-3, 1e-3], [1, 1, 1])
    with pytest.raises(ParameterRegionError):
        stats.convergence_order([1e-3, 1e-2], [1, 1])


def test_ess_from_log_weights():
    lw = np.zeros(1000)
    assert stats.ess_from_log_weights(lw) == pytest.approx(1000.0)
    lw = np.array([0.0, -50.0, -50.0])
    assert stats.ess_from_log_weights(lw) == pytest.approx(1.0, abs=1e-10)
