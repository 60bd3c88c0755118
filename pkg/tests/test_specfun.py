"""Special-function layer against independent oracles."""

import math

import mpmath
import numpy as np
import pytest

from kpzstat import specfun
from kpzstat.errors import ParameterRegionError


def erfc_series_oracle(x: float) -> float:
    """Continued-fraction / series evaluation independent of the library route."""
    # Abramowitz-Stegun style: erf by Taylor series for small x, Lentz CF for the tail
    if x < 1.5:
        total, term, k = 0.0, x, 0
        while abs(term) > 1e-18:
            total += term / (2 * k + 1)
            k += 1
            term *= -x * x / k
        return 1.0 - 2.0 / math.sqrt(math.pi) * total
    # continued fraction erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + 1/2/(x + 2/2/(x + ...)))
    f = 0.0
    for n in range(120, 0, -1):
        f = (n / 2.0) / (x + f)
    return math.exp(-x * x) / math.sqrt(math.pi) / (x + f)


def test_erf_erfc_values():
    assert specfun.erf(0.0) == 0.0
    assert specfun.erfc(0.0) == 1.0
    assert specfun.erfc(1.0) == pytest.approx(erfc_series_oracle(1.0), rel=1e-13)
    assert specfun.erfc(2.5) == pytest.approx(erfc_series_oracle(2.5), rel=1e-13)


def test_erf_complement_grid():
    xs = np.linspace(-6.0, 6.0, 1000)
    assert np.max(np.abs(specfun.erf(xs) + specfun.erfc(xs) - 1.0)) < 1e-12
    assert np.max(np.abs(specfun.erf(-xs) + specfun.erf(xs))) < 1e-12


def test_log_gamma():
    assert specfun.log_gamma(1.0) == 0.0
    assert specfun.log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), abs=1e-14)
    assert specfun.log_gamma(4.0) == pytest.approx(math.log(6.0), abs=1e-14)
    x = 1.7
    assert math.exp(specfun.log_gamma(x + 1.0)) == pytest.approx(x * math.exp(specfun.log_gamma(x)), rel=1e-13)
    with pytest.raises(ParameterRegionError):
        specfun.log_gamma(-1.0)


def test_abs_gamma_sq_reflection_values():
    assert specfun.abs_gamma_sq(1.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    # |Gamma(1+iy)|^2 = pi y / sinh(pi y)
    for y in (0.3, 1.0, 4.0):
        assert specfun.abs_gamma_sq(1.0, y) == pytest.approx(math.pi * y / math.sinh(math.pi * y), rel=1e-12)
    # |Gamma(ik)|^2 = pi / (k sinh(pi k))
    for k in (0.25, 1.0, 3.0):
        assert specfun.abs_gamma_sq(0.0, k) == pytest.approx(math.pi / (k * math.sinh(math.pi * k)), rel=1e-12)
    assert specfun.abs_gamma_sq(0.7, -2.0) == specfun.abs_gamma_sq(0.7, 2.0)


def test_abs_gamma_sq_recurrence_grid():
    a = np.linspace(0.1, 5.0, 23)[:, None]
    b = np.linspace(0.0, 10.0, 21)[None, :]
    lhs = specfun.abs_gamma_sq(a + 1.0, b)
    rhs = (a * a + b * b) * specfun.abs_gamma_sq(a, b)
    assert np.max(np.abs(lhs / rhs - 1.0)) < 1e-12


def test_abs_gamma_sq_negative_real_part():
    val = specfun.abs_gamma_sq(-1.3, 0.8)
    ref = abs(complex(mpmath.gamma(-1.3 + 0.8j))) ** 2
    assert val == pytest.approx(ref, rel=1e-11)
    with pytest.raises(ParameterRegionError):
        specfun.abs_gamma_sq(-2.0, 0.0)


def test_gamma4():
    assert specfun.gamma4(1.0, 0.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    # degenerate y = 0 collapse
    assert specfun.gamma4(0.8, 0.6, 0.0) == pytest.approx(specfun.abs_gamma_sq(0.8, 0.6) ** 2, rel=1e-12)
    # symmetric in x <-> y and sign flips
    assert specfun.gamma4(0.5, 0.3, 0.7) == pytest.approx(specfun.gamma4(0.5, 0.7, 0.3), rel=1e-13)
    assert specfun.gamma4(0.5, -0.3, 0.7) == pytest.approx(specfun.gamma4(0.5, 0.3, 0.7), rel=1e-13)
    assert specfun.gamma4(0.5, 0.3, 0.7) > 0
    with pytest.raises(ParameterRegionError):
        specfun.gamma4(-0.5, 0.3, 0.7)


def test_bessel_k_imag_against_mpmath():
    for nu in (0.0, 0.5, 1.0, 2.5, 5.0):
        for x in (0.5, 1.0, 2.0, 10.0):
            ref = float(complex(mpmath.besselk(mpmath.mpc(0, nu), x)).real)
            assert specfun.bessel_k_imag(nu, x) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_bessel_k_zero_order_value():
    # K_0(1), classical reference value
    assert specfun.bessel_k_imag(0.0, 1.0) == pytest.approx(0.42102443824070834, rel=1e-12)


def test_bessel_k_monotone_decay():
    xs = np.linspace(1.0, 10.0, 40)
    vals = specfun.bessel_k_imag(0.7, xs)
    assert np.all(np.diff(vals) < 0)
    assert np.all(vals > 0)


def test_bessel_k_warning_and_domain():
    with pytest.warns(RuntimeWarning):
        specfun.bessel_k_imag(5.0, 0.05)
    with pytest.raises(ParameterRegionError):
        specfun.bessel_k_imag(1.0, -1.0)
    with pytest.raises(ParameterRegionError):
        specfun.bessel_k_imag(-1.0, 1.0)


def test_variates_reproducible_and_laws():
    rng1 = specfun.make_rng(7)
    rng2 = specfun.make_rng(7)
    a = specfun.sample_variate("gamma", rng1, 10, shape=2.0)
    b = specfun.sample_variate("gamma", rng2, 10, shape=2.0)
    assert np.array_equal(a, b)

    rng = specfun.make_rng(11)
    n = 200_000
    g1 = specfun.sample_variate("gamma", rng, n, shape=1.0)
    e1 = specfun.sample_variate("exponential", rng, n, rate=1.0)
    # gamma(1) and exponential(1) share a law: two-sample KS
    from kpzstat import stats

    rep = stats.ks_two_sample(g1, e1)
    assert rep.passed, rep.statistic

    ig = specfun.sample_variate("inverse_gamma", rng, n, shape=2.0)
    assert np.mean(ig) == pytest.approx(1.0, abs=5 * np.std(ig) / math.sqrt(n))

    # moment identity E[gamma_u^a] = Gamma(u + a) / Gamma(u)
    u, a_pow = 0.9, 0.7
    g = specfun.sample_variate("gamma", rng, n, shape=u)
    target = math.exp(specfun.log_gamma(u + a_pow) - specfun.log_gamma(u))
    se = np.std(g**a_pow, ddof=1) / math.sqrt(n)
    assert np.mean(g**a_pow) == pytest.approx(target, abs=3 * se)


def test_variate_domain_errors():
    rng = specfun.make_rng(0)
    with pytest.raises(ParameterRegionError):
        specfun.sample_variate("gamma", rng, shape=-1.0)
    with pytest.raises(ParameterRegionError):
        specfun.sample_variate("exponential", rng, rate=0.0)
    with pytest.raises(ParameterRegionError):
        specfun.sample_variate("cauchy", rng)


def test_spawned_streams_differ():
    rngs = specfun.spawn_rngs(3, 4)
    draws = [r.standard_normal(4) for r in rngs]
    for i in range(4):
        for j in range(i + 1, 4):
            assert not np.allclose(draws[i], draws[j])
