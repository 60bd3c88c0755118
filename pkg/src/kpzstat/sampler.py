"""Monte Carlo estimation under the weighted stationary measures.

Self-normalized importance sampling from a Brownian (optionally drifted)
base, a reference-measure-preserving Metropolis chain on path space, and
the distributional-identity verifiers: the split-interval weight limit,
the transform identity in law, and the polymer endpoint decomposition.

Everything is batched: paths are generated in chunks whose size keeps the
working set small, and all randomness flows from explicit 64-bit seeds
through split counter-based streams, so runs are reproducible and chunks
merge deterministically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from . import paths as pth
from . import quadrature, specfun, stats
from .analytic import ModelParams, RescaledParams
from .errors import DegenerateWeightsError, ParameterRegionError

__all__ = [
    "EstimateReport",
    "PathBatch",
    "obs_endpoint",
    "obs_point",
    "obs_one",
    "obs_min",
    "is_estimate",
    "fp_is_estimate",
    "mcmc_chain",
    "McmcResult",
    "tune_beta",
    "verify_delta_limit",
    "DeltaLimitReport",
    "verify_idelaw",
    "endpoint_ratio_samples",
]

DEFAULT_BATCH = 10_000
ESS_WARN_FRACTION = 0.01


@dataclass
class EstimateReport:
    """One Monte Carlo estimate with its error bar and diagnostics."""

    value: float
    std_err: float
    ess: float
    n_total: int
    method: str
    seed: int
    params: dict = field(default_factory=dict)
    notes: str = ""
    degenerate: bool = False

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be >= 0")
        if self.ess > self.n_total + 1e-9:
            raise ValueError("ess cannot exceed n_total")

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "std_err": self.std_err,
            "ess": self.ess,
            "n_total": self.n_total,
            "method": self.method,
            "seed": self.seed,
            "params": self.params,
            "notes": self.notes,
        }


@dataclass
class PathBatch:
    """What an observable sees: a batch of paths plus refined minima."""

    values: np.ndarray  # (count, n + 1)
    grid: np.ndarray
    minima: np.ndarray | None = None  # bridge-refined continuum minima


def obs_endpoint(batch: PathBatch) -> np.ndarray:
    return batch.values[:, -1]


def obs_point(x: float) -> Callable[[PathBatch], np.ndarray]:
    def f(batch: PathBatch) -> np.ndarray:
        idx = int(round(x / batch.grid[-1] * (batch.grid.size - 1)))
        return batch.values[:, idx]

    return f


def obs_one(batch: PathBatch) -> np.ndarray:
    return np.ones(batch.values.shape[0])


def obs_min(batch: PathBatch) -> np.ndarray:
    if batch.minima is not None:
        return batch.minima
    return np.min(batch.values, axis=1)


def _self_normalized(log_w: np.ndarray, obs: np.ndarray, n_blocks: int = 20):
    """Value, jackknife stderr and ESS of a self-normalized estimator."""
    values, errs = stats.weighted_moments(obs, log_w, orders=(1,), n_blocks=n_blocks)
    ess = stats.ess_from_log_weights(log_w)
    return float(values[0]), float(errs[0]), ess


def is_estimate(
    observable: Callable[[PathBatch], np.ndarray],
    params: ModelParams,
    n: int,
    n_steps: int,
    base_drift: float = 0.0,
    seed: int = 0,
    *,
    normalized: bool = True,
    batch_size: int = DEFAULT_BATCH,
) -> EstimateReport:
    """Importance-sampling estimate of E[O[X]] under the interval measure.

    The base is Brownian with diffusion 1/2 and the given drift; the log
    weight is -2 v X(L) - (u + v) log Z plus the drift-change correction,
    so drift-matched bases collapse part of the weight analytically.  With
    normalized=False the plain weighted mean is returned (the measure
    normalization when O = 1).
    """
    if n < 100:
        raise ParameterRegionError("need n >= 100 importance samples")
    u, v, L = params.u, params.v, params.L
    mu = base_drift
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / batch_size)))
    grid = np.linspace(0.0, L, n_steps + 1)

    all_logw, all_obs = [], []
    remaining = n
    for rng in rngs:
        count = min(batch_size, remaining)
        remaining -= count
        vals = pth.brownian_batch(L, n_steps, count, mu, 0.5, rng)
        log_z = pth.log_exp_functional(vals, L)
        log_w = -2.0 * v * vals[:, -1] - (u + v) * log_z - 2.0 * mu * vals[:, -1] + mu * mu * L
        all_logw.append(log_w)
        all_obs.append(np.asarray(observable(PathBatch(vals, grid))))
        if remaining <= 0:
            break
    log_w = np.concatenate(all_logw)
    obs = np.concatenate(all_obs)

    ess = stats.ess_from_log_weights(log_w)
    degenerate = ess < ESS_WARN_FRACTION * n
    if degenerate:
        warnings.warn(f"importance weights are degenerate: ESS = {ess:.1f} of {n}", RuntimeWarning, stacklevel=2)

    if normalized:
        value, err, _ = _self_normalized(log_w, obs)
    else:
        # unnormalized: mean of w * O, stable in log space
        shift = log_w.max()
        w = np.exp(log_w - shift)
        prod = w * obs
        value = float(np.mean(prod) * math.exp(shift))
        err = float(np.std(prod, ddof=1) / math.sqrt(n) * math.exp(shift))
    return EstimateReport(
        value=value,
        std_err=err,
        ess=float(ess),
        n_total=n,
        method="is",
        seed=seed,
        params={"u": u, "v": v, "L": L, "n_steps": n_steps, "base_drift": mu, "normalized": normalized},
        degenerate=degenerate,
    )


def fp_is_estimate(
    observable: Callable[[PathBatch], np.ndarray],
    r: RescaledParams,
    n: int,
    n_steps: int,
    seed: int = 0,
    *,
    normalized: bool = True,
    refined: bool = True,
    batch_size: int = DEFAULT_BATCH,
) -> EstimateReport:
    """Importance sampling under the rescaled (fixed point) measure on [0, 1].

    The weight is exp(2 (u_t + v_t) min X - 2 v_t X(1)) against the
    Brownian base with diffusion 1/2; with refined=True the minimum is the
    bridge-refined continuum minimum, which removes the O(sqrt(dt)) grid
    bias of the weight.
    """
    if n < 100:
        raise ParameterRegionError("need n >= 100 importance samples")
    ut, vt = r.u_t, r.v_t
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / batch_size)))
    grid = np.linspace(0.0, 1.0, n_steps + 1)

    all_logw, all_obs = [], []
    remaining = n
    for rng in rngs:
        count = min(batch_size, remaining)
        remaining -= count
        vals = pth.brownian_batch(1.0, n_steps, count, 0.0, 0.5, rng)
        minima = pth.refined_min(vals, 1.0, 0.5, rng) if refined else np.min(vals, axis=1)
        log_w = pth.fp_log_weight(vals, ut, vt, minima=minima)
        all_logw.append(np.atleast_1d(log_w))
        all_obs.append(np.asarray(observable(PathBatch(vals, grid, minima))))
        if remaining <= 0:
            break
    log_w = np.concatenate(all_logw)
    obs = np.concatenate(all_obs)

    ess = stats.ess_from_log_weights(log_w)
    degenerate = ess < ESS_WARN_FRACTION * n
    if degenerate:
        warnings.warn(f"importance weights are degenerate: ESS = {ess:.1f} of {n}", RuntimeWarning, stacklevel=2)
    if normalized:
        value, err, _ = _self_normalized(log_w, obs)
    else:
        shift = log_w.max()
        w = np.exp(log_w - shift)
        prod = w * obs
        value = float(np.mean(prod) * math.exp(shift))
        err = float(np.std(prod, ddof=1) / math.sqrt(n) * math.exp(shift))
    return EstimateReport(
        value=value,
        std_err=err,
        ess=float(ess),
        n_total=n,
        method="is",
        seed=seed,
        params={"u_t": ut, "v_t": vt, "n_steps": n_steps, "refined": refined, "normalized": normalized},
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# Path-space Metropolis chain with a reference-preserving proposal
# ---------------------------------------------------------------------------


@dataclass
class McmcResult:
    """Output of a chain run: thinned paths, observable traces, diagnostics."""

    ensemble: pth.WeightedEnsemble
    traces: dict[str, np.ndarray]
    acceptance_rate: float
    burn_in: int
    iat: float
    beta: float
    seed: int


def _energy_batch(vals: np.ndarray, u: float, v: float, L: float) -> np.ndarray:
    return 2.0 * v * vals[:, -1] + (u + v) * pth.log_exp_functional(vals, L)


def tune_beta(params: ModelParams, n_steps: int, seed: int = 0, target: tuple[float, float] = (0.25, 0.40)) -> float:
    """Pre-run that adjusts the proposal mixing angle to the target band."""
    beta = 0.5
    rng = specfun.make_rng(seed)
    n_chains, rounds, steps = 64, 12, 40
    u, v, L = params.u, params.v, params.L
    state = pth.brownian_batch(L, n_steps, n_chains, 0.0, 0.5, rng)
    energy = _energy_batch(state, u, v, L)
    for _ in range(rounds):
        accepted = 0
        for _ in range(steps):
            fresh = pth.brownian_batch(L, n_steps, n_chains, 0.0, 0.5, rng)
            prop = math.sqrt(1.0 - beta * beta) * state + beta * fresh
            e_prop = _energy_batch(prop, u, v, L)
            take = np.log(rng.uniform(size=n_chains)) < (energy - e_prop)
            state[take] = prop[take]
            energy[take] = e_prop[take]
            accepted += int(np.sum(take))
        rate = accepted / (steps * n_chains)
        if target[0] <= rate <= target[1]:
            return beta
        beta = min(1.0, max(1e-3, beta * (0.7 if rate < target[0] else 1.4)))
    return beta


def _batch_means_iat(series: np.ndarray, n_batches: int = 32) -> float:
    """Integrated autocorrelation time from batch means (>= 1)."""
    m = series.size // n_batches
    if m < 2:
        return 1.0
    trimmed = series[: m * n_batches].reshape(n_batches, m)
    var_full = np.var(series[: m * n_batches], ddof=1)
    if var_full == 0:
        return 1.0
    var_bm = np.var(trimmed.mean(axis=1), ddof=1)
    return float(max(1.0, m * var_bm / var_full))


def mcmc_chain(
    params: ModelParams,
    n_samples: int,
    n_steps: int,
    beta: float | None = None,
    seed: int = 0,
    *,
    n_chains: int = 64,
    thin: int = 4,
    burn_in: int | None = None,
    max_keep_paths: int = 2048,
    observables: dict[str, Callable[[PathBatch], np.ndarray]] | None = None,
) -> McmcResult:
    """Metropolis chain whose proposal preserves the Brownian reference.

    Proposal X' = sqrt(1 - beta^2) X + beta Xi with Xi a fresh base path;
    the acceptance ratio involves only the boundary-weight exponent
    2 v X(L) + (u + v) log Z, so acceptance stays flat as n_steps grows.
    Chains run in parallel; n_samples states (unit weights) are collected
    across chains after burn-in with the given thinning stride.  Burn-in
    defaults to 10 integrated autocorrelation times of X(L) measured on a
    pilot stretch.
    """
    if beta is None:
        beta = tune_beta(params, n_steps, seed=seed)
    if not 0.0 < beta <= 1.0:
        raise ParameterRegionError("beta must be in (0, 1]")
    u, v, L = params.u, params.v, params.L
    rng = specfun.make_rng(seed)
    grid = np.linspace(0.0, L, n_steps + 1)
    observables = observables or {"endpoint": obs_endpoint}

    state = pth.brownian_batch(L, n_steps, n_chains, 0.0, 0.5, rng)
    energy = _energy_batch(state, u, v, L)
    bad = ~np.isfinite(energy)
    rejected_nonfinite = int(np.sum(bad))
    energy[bad] = np.inf

    sweeps_pilot = 200
    pilot_endpoint = np.empty((sweeps_pilot, n_chains))
    accepted = 0
    proposed = 0

    def sweep():
        nonlocal accepted, proposed, rejected_nonfinite, state, energy
        fresh = pth.brownian_batch(L, n_steps, n_chains, 0.0, 0.5, rng)
        prop = math.sqrt(1.0 - beta * beta) * state + beta * fresh
        e_prop = _energy_batch(prop, u, v, L)
        finite = np.isfinite(e_prop)
        rejected_nonfinite += int(np.sum(~finite))
        log_alpha = np.where(finite, energy - e_prop, -np.inf)
        take = np.log(rng.uniform(size=n_chains)) < log_alpha
        state[take] = prop[take]
        energy[take] = e_prop[take]
        accepted += int(np.sum(take))
        proposed += n_chains

    for i in range(sweeps_pilot):
        sweep()
        pilot_endpoint[i] = state[:, -1]
    iat = float(np.mean([_batch_means_iat(pilot_endpoint[:, c]) for c in range(n_chains)]))
    if burn_in is None:
        burn_in = int(math.ceil(10 * iat))
    for _ in range(burn_in):
        sweep()

    n_collect = math.ceil(n_samples / n_chains)
    traces = {name: np.empty((n_collect, n_chains)) for name in observables}
    keep_every = max(1, math.ceil(n_collect * n_chains / max_keep_paths))
    kept = []
    for j in range(n_collect):
        for _ in range(thin):
            sweep()
        batch = PathBatch(state, grid)
        for name, f in observables.items():
            traces[name][j] = np.asarray(f(batch))
        if j % keep_every == 0:
            kept.append(state.copy())

    flat = {name: arr.reshape(-1)[:n_samples].copy() for name, arr in traces.items()}
    kept_values = np.vstack(kept)[:max_keep_paths]
    ens = pth.WeightedEnsemble(L, kept_values, np.zeros(kept_values.shape[0]), params=params)
    return McmcResult(
        ensemble=ens,
        traces=flat,
        acceptance_rate=accepted / max(1, proposed),
        burn_in=burn_in,
        iat=iat,
        beta=beta,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Distributional-identity verifiers
# ---------------------------------------------------------------------------


@dataclass
class DeltaLimitReport:
    """MC split-interval weight ratios against their large-size limit."""

    region: str
    limit_value: float
    l_values: list[float]
    mc_values: list[float]
    mc_errors: list[float]
    abs_errors: list[float]
    monotone_decreasing: bool


def _delta_region(u: float, v: float) -> str:
    in1 = u > 0 and v > 0
    in2 = u < 0 and u < v
    in3 = v < 0 and v < u
    if sum((in1, in2, in3)) != 1:
        raise ParameterRegionError("parameters must lie strictly inside one region")
    return "max_current" if in1 else ("low_density" if in2 else "high_density")


def _gamma_expectation_integral(b: float, a: float, xi: float, c: float) -> float:
    """E over Gamma(b) of (a G + xi)^(-c), by quadrature."""

    def f(rv):
        rv = np.asarray(rv, dtype=float)
        return np.exp((b - 1.0) * np.log(rv) - rv - gammaln(b) - c * np.log(a * rv + xi))

    res = quadrature.tanh_sinh(f, 0.0, 80.0 + 4.0 * b, tol=1e-12)
    return res.value


def delta_limit_value(u: float, v: float, a: float, xi: float, x: float) -> float:
    """Closed-form limit of the split-interval weight ratio."""
    region = _delta_region(u, v)
    if region == "max_current":
        return math.exp(v * v * x) * xi ** (-v) * _gamma_expectation_integral(u, a, xi, u)
    if region == "low_density":
        return math.exp((v * v - u * u) * x) * xi ** (-(u + v))
    return _gamma_expectation_integral(u - v, a, xi, u + v)


def verify_delta_limit(
    a: float,
    xi: float,
    params: ModelParams,
    l_seq: Sequence[float],
    x: float = 0.5,
    n: int = 100_000,
    n_steps_per_unit: int = 64,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
) -> DeltaLimitReport:
    """Monte Carlo of Delta(a, xi, L - x) / Delta(0, 1, L) against its limit.

    Delta(a, xi, T) averages (a + xi Z_T)^{-(u+v)} over the drifted base
    path.  One nested path set per batch evaluates every L in l_seq through
    the running exponential integral, so errors across sizes are strongly
    correlated and the monotone approach to the limit is visible.
    """
    if a <= 0 or xi <= 0:
        raise ParameterRegionError("need a > 0 and xi > 0")
    u, v = params.u, params.v
    region = _delta_region(u, v)
    l_seq = sorted(float(val) for val in l_seq)
    if x >= min(l_seq):
        raise ParameterRegionError("x must be smaller than every L")
    l_max = max(l_seq)
    n_steps = int(round(n_steps_per_unit * l_max))
    grid = np.linspace(0.0, l_max, n_steps + 1)
    c = u + v

    sums_num = np.zeros(len(l_seq))
    sums_den = np.zeros(len(l_seq))
    sq_num = np.zeros(len(l_seq))
    sq_den = np.zeros(len(l_seq))
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / batch_size)))
    remaining = n
    total = 0
    for rng in rngs:
        count = min(batch_size, remaining)
        remaining -= count
        total += count
        vals = pth.brownian_batch(l_max, n_steps, count, -v, 0.5, rng)
        running = pth.running_exp_integral(vals, l_max)
        for i, l_val in enumerate(l_seq):
            idx_num = int(round((l_val - x) / l_max * n_steps))
            idx_den = int(round(l_val / l_max * n_steps))
            z_num = running[:, idx_num]
            z_den = running[:, idx_den]
            f_num = (a + xi * z_num) ** (-c)
            f_den = z_den ** (-c)
            sums_num[i] += np.sum(f_num)
            sq_num[i] += np.sum(f_num**2)
            sums_den[i] += np.sum(f_den)
            sq_den[i] += np.sum(f_den**2)
        if remaining <= 0:
            break

    limit = delta_limit_value(u, v, a, xi, x)
    mc_vals, mc_errs, abs_errs = [], [], []
    for i in range(len(l_seq)):
        mean_n, mean_d = sums_num[i] / total, sums_den[i] / total
        var_n = sq_num[i] / total - mean_n**2
        var_d = sq_den[i] / total - mean_d**2
        ratio = mean_n / mean_d
        rel_err = math.sqrt(max(var_n, 0.0) / (total * mean_n**2) + max(var_d, 0.0) / (total * mean_d**2))
        mc_vals.append(float(ratio))
        mc_errs.append(float(abs(ratio) * rel_err))
        abs_errs.append(float(abs(ratio - limit)))
    monotone = all(b <= a_ for a_, b in zip(abs_errs, abs_errs[1:]))
    return DeltaLimitReport(
        region=region,
        limit_value=float(limit),
        l_values=list(l_seq),
        mc_values=mc_vals,
        mc_errors=mc_errs,
        abs_errors=abs_errs,
        monotone_decreasing=monotone,
    )


def verify_idelaw(
    mu: float,
    t: float = 1.0,
    n: int = 100_000,
    n_steps: int = 512,
    seed: int = 0,
    horizon: float = 30.0,
    horizon_steps_per_unit: int = 64,
    batch_size: int = 4_000,
) -> dict:
    """Transform identity in law for drifted standard Brownian motion, mu < 0.

    Compares (a) endpoints at time t of the transformed positive-drift
    path X - log(1 + 2 G int e^{2X}) with G Gamma(-mu), against (b) plain
    endpoints with drift mu; plus the scalar law: the reciprocal of the
    infinite-horizon exponential integral of the drift-mu path is 2 G in
    law (horizon-truncated, with a tail-mass warning flag).
    """
    if mu >= 0:
        raise ParameterRegionError("identity in law needs mu < 0")
    rngs = specfun.spawn_rngs(seed, 3 * max(1, math.ceil(n / batch_size)))
    r_iter = iter(rngs)

    transformed, direct, scalars = [], [], []
    tail_ratio_acc = 0.0
    remaining = n
    while remaining > 0:
        count = min(batch_size, remaining)
        remaining -= count
        rng = next(r_iter)
        # (a) transformed positive-drift path at time t
        vals = pth.brownian_batch(t, n_steps, count, -mu, 1.0, rng)
        gam = rng.gamma(-mu, size=count)
        running = pth.running_exp_integral(vals, t, sign=2.0)
        transformed.append(vals[:, -1] - np.log1p(2.0 * gam * running[:, -1]))
        # (b) direct drift-mu endpoints
        direct.append(rng.normal(mu * t, math.sqrt(t), size=count))
        # scalar: 1 / int_0^horizon e^{2 X_mu}
        n_h = int(horizon_steps_per_unit * horizon)
        vals_h = pth.brownian_batch(horizon, n_h, count, mu, 1.0, rng)
        run_h = pth.running_exp_integral(vals_h, horizon, sign=2.0)
        scalars.append(1.0 / run_h[:, -1])
        tail_ratio_acc += float(np.mean(np.exp(2.0 * vals_h[:, -1]) / run_h[:, -1]))

    transformed = np.concatenate(transformed)
    direct = np.concatenate(direct)
    scalars = np.concatenate(scalars)
    ks_proc = stats.ks_two_sample(transformed, direct)
    scalar_cdf = lambda s: gammainc(-mu, s / 2.0)
    ks_scalar = stats.ks_one_sample(scalars, scalar_cdf)
    tail_flag = tail_ratio_acc / max(1, math.ceil(n / batch_size)) > 1e-3
    if tail_flag:
        warnings.warn("idelaw horizon truncation may be insufficient", RuntimeWarning, stacklevel=2)
    return {
        "ks_process": ks_proc,
        "ks_scalar": ks_scalar,
        "truncation_warning": tail_flag,
        "n": n,
        "seed": seed,
    }


def endpoint_ratio_samples(params: ModelParams, n: int, seed: int = 0, n_steps: int = 512, **mcmc_kwargs) -> np.ndarray:
    """Log of the polymer endpoint weight ratio: sqrt(L/2) G + X(L).

    X(L) comes from the stationary chain; G is an independent unit
    Gaussian from the white-noise part of the height.
    """
    res = mcmc_chain(params, n, n_steps, seed=seed, **mcmc_kwargs)
    y = res.traces["endpoint"]
    rng = specfun.make_rng(seed + 1)
    g = rng.standard_normal(y.size)
    return math.sqrt(params.L / 2.0) * g + y
