"""Special functions and random-variate generation.

Everything here is self-contained numerics: squared moduli of the complex
Gamma function assembled in log space, the modified Bessel function of
imaginary order through its cosine-cosh integral representation, and the
counter-based random streams used by every sampler in the package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special as sps

from .errors import ParameterRegionError

__all__ = [
    "SpecFunConfig",
    "DEFAULT_CONFIG",
    "erf",
    "erfc",
    "log_gamma",
    "log_abs_gamma_sq",
    "abs_gamma_sq",
    "log_gamma4",
    "gamma4",
    "log_inv_abs_gamma_ik_sq",
    "lqm_norm_const",
    "bessel_k_imag",
    "sample_variate",
    "make_rng",
    "spawn_rngs",
    "spawn_seed_sequences",
]

LOG_PI = math.log(math.pi)
LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class SpecFunConfig:
    """Accuracy knobs for the series/quadrature evaluations in this module."""

    rel_tol: float = 1e-12
    max_terms: int = 1_000_000
    quadrature_fallback: bool = True

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_CONFIG = SpecFunConfig()


def erf(x):
    """Error function, vectorized."""
    return sps.erf(x)


def erfc(x):
    """Complementary error function, erf(x) + erfc(x) = 1."""
    return sps.erfc(x)


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ParameterRegionError("log_gamma requires x > 0")
    out = sps.gammaln(x)
    return float(out) if out.ndim == 0 else out


def log_abs_gamma_sq(a, b):
    """log |Gamma(a + i b)|^2 for real a, b.

    Computed as 2 Re log Gamma in log space so that large imaginary parts
    (exponential e^{-pi |b|} decay) never underflow an intermediate.  For
    a <= 0 the recurrence |Gamma(z)|^2 = |Gamma(z+1)|^2 / |z|^2 is applied
    until the real part is positive; poles (b = 0 at nonpositive integer a)
    raise.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    a_b, b_b = np.broadcast_arrays(a_arr, b_arr)
    out = np.zeros(a_b.shape, dtype=float)

    pole = (b_b == 0.0) & (a_b <= 0.0) & (a_b == np.round(a_b))
    if np.any(pole):
        raise ParameterRegionError("|Gamma|^2 pole at nonpositive integer")

    shift = np.zeros(a_b.shape, dtype=float)
    a_work = a_b.copy()
    # climb out of the left half plane; |b| bounds the number of steps needed
    while np.any(a_work <= 0.0):
        mask = a_work <= 0.0
        shift = np.where(mask, shift - np.log(a_work**2 + b_b**2, where=mask, out=np.zeros_like(shift)), shift)
        a_work = np.where(mask, a_work + 1.0, a_work)

    out = 2.0 * np.real(sps.loggamma(a_work + 1j * b_b)) + shift
    return float(out) if out.ndim == 0 else out


def abs_gamma_sq(a, b):
    """|Gamma(a + i b)|^2, positive, even in b."""
    return np.exp(log_abs_gamma_sq(a, b))


def log_gamma4(alpha, x, y):
    """log of the four-fold product Gamma(alpha +- i x +- i y).

    The four factors pair into conjugates, so the product equals
    |Gamma(alpha + i(x+y))|^2 |Gamma(alpha + i(x-y))|^2.
    """
    if np.any(np.asarray(alpha) <= 0):
        raise ParameterRegionError("gamma4 requires alpha > 0")
    return log_abs_gamma_sq(alpha, np.asarray(x) + np.asarray(y)) + log_abs_gamma_sq(
        alpha, np.asarray(x) - np.asarray(y)
    )


def gamma4(alpha, x, y):
    """Product of four Gamma factors Gamma(alpha +- ix +- iy); real and positive."""
    return np.exp(log_gamma4(alpha, x, y))


def log_inv_abs_gamma_ik_sq(k):
    """log( 1 / |Gamma(i k)|^2 ) = log( k sinh(pi k) / pi ), stable for all k > 0.

    This is the spectral weight attached to each wavenumber in the
    eigenfunction expansion; it vanishes like k^2 at the origin.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ParameterRegionError("spectral weight needs k > 0")
    out = np.log(k) + np.pi * k + np.log1p(-np.exp(-2.0 * np.pi * k)) - LOG_2PI
    return float(out) if out.ndim == 0 else out


def lqm_norm_const(k):
    """Eigenfunction normalization N_k with N_k^2 = 2 / (pi |Gamma(i k)|^2)."""
    return np.exp(0.5 * (math.log(2.0) - LOG_PI + log_inv_abs_gamma_ik_sq(k)))


# ---------------------------------------------------------------------------
# Modified Bessel function of imaginary order
# ---------------------------------------------------------------------------

_TS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _tanh_sinh_nodes(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-sinh rule on (0, 1) at step h = 1/2^level.

    Returns (left, w): node positions as distances from the left endpoint in
    units of the interval, evaluated in a saturation-free form so endpoint
    neighbourhoods keep full precision (the grid is symmetric, so the
    mirrored array 1 - left is exactly left[::-1]).
    """
    cached = _TS_CACHE.get(level)
    if cached is not None:
        return cached
    h = 1.0 / 2.0**level
    # |t| beyond ~6.6 reaches weights below 1e-300
    kmax = int(math.floor(6.6 / h))
    t = h * np.arange(-kmax, kmax + 1)
    half_pi = 0.5 * math.pi
    s = half_pi * np.sinh(t)
    with np.errstate(over="ignore"):
        w = 0.5 * h * half_pi * np.cosh(t) / np.cosh(s) ** 2
        # (1 + tanh(s)) / 2 without cancellation at either end
        left = np.where(s >= 0, 1.0 / (1.0 + np.exp(-2.0 * s)), np.exp(2.0 * s) / (1.0 + np.exp(2.0 * s)))
    keep = (w > 1e-300) & (left > 0.0) & (left < 1.0)
    _TS_CACHE[level] = (left[keep], w[keep])
    return _TS_CACHE[level]


def bessel_k_imag(nu: float, x, config: SpecFunConfig = DEFAULT_CONFIG):
    """K_{i nu}(x): modified Bessel function of purely imaginary order.

    Evaluated from the integral of cos(nu t) exp(-x cosh t) over t >= 0 with
    a tanh-sinh rule, doubling the node density until the relative change
    drops below config.rel_tol.  Real for nu >= 0, x > 0; vectorized in x.
    """
    if nu < 0:
        raise ParameterRegionError("bessel_k_imag requires nu >= 0")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0):
        raise ParameterRegionError("bessel_k_imag requires x > 0")
    if np.any(x_arr < nu / 50.0):
        warnings.warn(
            "bessel_k_imag: x < nu/50, oscillatory regime; accuracy may degrade",
            RuntimeWarning,
            stacklevel=2,
        )

    xmin = float(x_arr.min())
    # truncate where exp(-x cosh t) is below 1e-26 relative to exp(-x)
    t_max = math.acosh(1.0 + 60.0 / xmin)

    prev = None
    val = None
    for level in range(4, 13):
        left, w = _tanh_sinh_nodes(level)
        t = t_max * left
        wt = t_max * w
        integrand = np.cos(nu * t)[None, :] * np.exp(-np.outer(x_arr, np.cosh(t)))
        val = integrand @ wt
        if prev is not None:
            err = np.abs(val - prev)
            if np.all(err <= config.rel_tol * np.maximum(np.abs(val), 1e-300) + 1e-300):
                break
        prev = val
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(val[0])
    return val


# ---------------------------------------------------------------------------
# Random variates and reproducible streams
# ---------------------------------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) from an explicit integer seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def spawn_seed_sequences(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Deterministically split one seed into n independent child sequences."""
    return np.random.SeedSequence(int(seed)).spawn(n)


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent Philox streams derived from one seed."""
    return [np.random.Generator(np.random.Philox(ss)) for ss in spawn_seed_sequences(seed, n)]


def sample_variate(kind: str, rng: np.random.Generator, size=None, *, shape: float | None = None, rate: float | None = None):
    """Draw from one of the base laws used by the samplers.

    kind is one of "gaussian", "gamma" (requires shape > 0),
    "inverse_gamma" (shape > 0) or "exponential" (rate > 0).
    """
    if kind == "gaussian":
        return rng.standard_normal(size)
    if kind == "gamma":
        if shape is None or shape <= 0:
            raise ParameterRegionError("gamma variate requires shape > 0")
        return rng.gamma(shape, size=size)
    if kind == "inverse_gamma":
        if shape is None or shape <= 0:
            raise ParameterRegionError("inverse_gamma variate requires shape > 0")
        return 1.0 / rng.gamma(shape, size=size)
    if kind == "exponential":
        if rate is None or rate <= 0:
            raise ParameterRegionError("exponential variate requires rate > 0")
        return rng.exponential(1.0 / rate, size=size)
    raise ParameterRegionError(f"unknown variate kind: {kind!r}")
