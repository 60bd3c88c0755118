"""Statistical comparison machinery for the Monte Carlo cross-checks.

Weighted empirical CDFs and KS statistics, weighted moments with block
jackknife errors, histogram construction with per-bin errors, chi-square
comparisons against reference probabilities, and log-log convergence-order
fits.  Thresholds are configuration, not science: the weighted KS test uses
the effective sample size in the critical value, a conservative choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import chdtri

from .errors import ParameterRegionError

__all__ = [
    "ComparisonReport",
    "ess_from_log_weights",
    "ks_one_sample",
    "ks_two_sample",
    "weighted_moments",
    "weighted_histogram",
    "chi2_vs_expected",
    "chi2_flatness",
    "convergence_order",
]

# KS critical scale: P(D > c / sqrt(n)) ~ 2 exp(-2 c^2): c = 1.95 gives ~ 1e-3
KS_DEFAULT_SCALE = 1.95
CHI2_THREE_SIGMA_P = 0.0027


@dataclass
class ComparisonReport:
    """Outcome of one statistical comparison."""

    statistic: float
    threshold: float
    passed: bool
    n_effective: float
    notes: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.statistic < 0:
            raise ValueError("statistic must be >= 0")


def ess_from_log_weights(log_weights: np.ndarray) -> float:
    """Effective sample size (sum w)^2 / sum w^2, from unnormalized logs."""
    lw = np.asarray(log_weights, dtype=float)
    m = lw.max()
    w = np.exp(lw - m)
    return float(np.sum(w) ** 2 / np.sum(w * w))


def _normalized_weights(samples, weights):
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ParameterRegionError("empty sample")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
        n_eff = float(x.size)
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.any(w > 0):
            raise ParameterRegionError("weights must be >= 0 and not all zero")
        n_eff = float(np.sum(w) ** 2 / np.sum(w * w))
        w = w / np.sum(w)
    return x, w, n_eff


def ks_one_sample(samples, cdf, weights=None, threshold: float | None = None) -> ComparisonReport:
    """Weighted one-sample KS test against a reference CDF.

    The statistic is the sup-gap between the weighted empirical CDF and the
    reference; the default threshold is KS_DEFAULT_SCALE / sqrt(ESS).
    """
    x, w, n_eff = _normalized_weights(samples, weights)
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cum = np.cumsum(ws)
    ref = np.asarray(cdf(xs), dtype=float)
    d_plus = np.max(cum - ref)
    d_minus = np.max(ref - np.concatenate([[0.0], cum[:-1]]))
    stat = float(max(d_plus, d_minus))
    thr = threshold if threshold is not None else KS_DEFAULT_SCALE / math.sqrt(n_eff)
    return ComparisonReport(stat, thr, stat < thr, n_eff)


def ks_two_sample(x, y, threshold: float | None = None) -> ComparisonReport:
    """Two-sample KS test (unweighted)."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ParameterRegionError("empty sample")
    both = np.concatenate([x, y])
    fx = np.searchsorted(x, both, side="right") / x.size
    fy = np.searchsorted(y, both, side="right") / y.size
    stat = float(np.max(np.abs(fx - fy)))
    n_eff = x.size * y.size / (x.size + y.size)
    thr = threshold if threshold is not None else KS_DEFAULT_SCALE / math.sqrt(n_eff)
    return ComparisonReport(stat, thr, stat < thr, float(n_eff))


def weighted_moments(samples, log_weights=None, orders=(1, 2), n_blocks: int = 20):
    """Self-normalized moments with contiguous-block jackknife errors.

    Returns (values, stderrs) aligned with orders; order 0 is exactly 1.
    Contiguous blocks make the error bars honest for autocorrelated chain
    input as well as for independent weighted samples.
    """
    x = np.asarray(samples, dtype=float)
    if log_weights is None:
        lw = np.zeros(x.size)
    else:
        lw = np.asarray(log_weights, dtype=float)
    if not np.all(np.isfinite(lw)):
        raise ParameterRegionError("log-weights must be finite")
    if x.size < n_blocks:
        raise ParameterRegionError(f"need at least n_blocks={n_blocks} samples")
    w = np.exp(lw - lw.max())

    values, errors = [], []
    blocks = np.array_split(np.arange(x.size), n_blocks)
    for order in orders:
        g = x**order if order != 0 else np.ones_like(x)
        full = float(np.sum(w * g) / np.sum(w))
        if order == 0:
            values.append(1.0)
            errors.append(0.0)
            continue
        loo = np.empty(n_blocks)
        sw, swg = np.sum(w), np.sum(w * g)
        for i, idx in enumerate(blocks):
            loo[i] = (swg - np.sum(w[idx] * g[idx])) / (sw - np.sum(w[idx]))
        jk = (n_blocks - 1) / n_blocks * np.sum((loo - np.mean(loo)) ** 2)
        values.append(full)
        errors.append(float(np.sqrt(jk)))
    return np.array(values), np.array(errors)


def weighted_histogram(samples, bins, weights=None, density: bool = True):
    """Histogram with per-bin standard errors.

    Returns (edges, heights, stderrs).  Heights are probability densities
    when density=True, otherwise bin probabilities.  Errors come from the
    per-bin weight second moments of the self-normalized estimator.
    """
    x = np.asarray(samples, dtype=float)
    w = np.ones(x.size) if weights is None else np.asarray(weights, dtype=float)
    edges = np.asarray(bins, dtype=float)
    total = np.sum(w)
    idx = np.digitize(x, edges) - 1
    inside = (idx >= 0) & (idx < edges.size - 1)
    sums = np.bincount(idx[inside], weights=w[inside], minlength=edges.size - 1)
    sq = np.bincount(idx[inside], weights=w[inside] ** 2, minlength=edges.size - 1)
    p = sums / total
    err = np.sqrt(np.maximum(sq, 0.0)) / total  # conservative per-bin error
    if density:
        widths = np.diff(edges)
        return edges, p / widths, err / widths
    return edges, p, err


def chi2_vs_expected(observed_p, expected_p, n_eff: float, threshold_p: float = CHI2_THREE_SIGMA_P) -> ComparisonReport:
    """Chi-square of observed vs expected bin probabilities at sample size n_eff."""
    obs = np.asarray(observed_p, dtype=float)
    exp = np.asarray(expected_p, dtype=float)
    if obs.shape != exp.shape or np.any(exp <= 0):
        raise ParameterRegionError("need matching bins with positive expected mass")
    scale = np.sum(obs) / np.sum(exp)
    stat = float(n_eff * np.sum((obs - exp * scale) ** 2 / (exp * scale)))
    dof = obs.size - 1
    thr = float(chdtri(dof, threshold_p))
    return ComparisonReport(stat, thr, stat < thr, n_eff, notes=f"dof={dof}")


def chi2_flatness(observed_p, n_eff: float, threshold_p: float = CHI2_THREE_SIGMA_P) -> ComparisonReport:
    """Chi-square of observed bin probabilities against the uniform profile."""
    obs = np.asarray(observed_p, dtype=float)
    flat = np.full(obs.size, np.sum(obs) / obs.size)
    return chi2_vs_expected(obs, flat, n_eff, threshold_p)


def convergence_order(deltas, errors):
    """Least-squares slope of log(error) against log(delta).

    Returns (slope, intercept, max_residual).  Degenerate (constant) input
    raises.
    """
    d = np.asarray(deltas, dtype=float)
    e = np.asarray(errors, dtype=float)
    if d.size < 3:
        raise ParameterRegionError("need at least 3 points")
    if np.any(d <= 0) or np.any(e <= 0):
        raise ParameterRegionError("deltas and errors must be positive")
    if np.allclose(d, d[0]):
        raise ParameterRegionError("degenerate deltas")
    lx, ly = np.log(d), np.log(e)
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(a, ly, rcond=None)
    resid = ly - a @ coef
    return float(coef[0]), float(coef[1]), float(np.max(np.abs(resid)))
