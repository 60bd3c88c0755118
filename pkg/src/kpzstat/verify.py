"""Cross-validation battery: every analytic/Monte Carlo check, by name.

Each check is a pure function of a context (seed, scale) returning a
CheckResult; the registry order fixes the per-check random streams, so a
filtered run (--only) uses the same seeds as a full run.  Thresholds for
the statistical checks are stated at full scale (scale = 1.0); quick runs
divide sample counts by 10 and loosen the fixed distribution thresholds
by sqrt(10), keeping error-bar-based checks self-calibrating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, gammainc, ndtr

from . import analytic, paths as pth, quadrature, sampler, specfun, stats
from .analytic import ModelParams, RescaledParams
from .quadrature import LaplaceQuery

__all__ = ["CheckResult", "VerifyContext", "CHECK_NAMES", "run_checks", "run_check"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return repr(obj)


@dataclass
class VerifyContext:
    seed: int = 20_240_001
    scale: float = 1.0  # 0.1 in quick mode

    def n(self, full: int, minimum: int = 1000) -> int:
        return max(minimum, int(full * self.scale))

    def ks_threshold(self, full_threshold: float) -> float:
        if self.scale >= 1.0:
            return full_threshold
        return full_threshold / math.sqrt(self.scale)

    def check_seed(self, index: int) -> int:
        child = np.random.SeedSequence(self.seed).spawn(len(_REGISTRY))[index]
        return int(child.generate_state(1, dtype=np.uint64)[0] % (2**63))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _sigma_check(name, value, target, err, n_sigma=3.0, details=None) -> CheckResult:
    err = max(err, 1e-300)
    stat = abs(value - target) / err
    d = {"value": value, "target": target, "std_err": err}
    d.update(details or {})
    return CheckResult(name, stat < n_sigma, stat, n_sigma, d)


# ---------------------------------------------------------------------------
# deterministic quadrature / analytic checks
# ---------------------------------------------------------------------------


def check_quad_gaussian(ctx, seed) -> CheckResult:
    res = quadrature.integrate_adaptive(lambda k: np.exp(-k * k / 4.0), 0.0, np.inf, tol=1e-12)
    stat = _rel(res.value, math.sqrt(math.pi))
    return CheckResult("quad_gaussian", stat < 1e-10, stat, 1e-10, {"value": res.value})


def check_quad_closed_forms(ctx, seed) -> CheckResult:
    """Integral-vs-closed-form agreement for every dual-representation formula."""
    worst = 0.0
    details = {}
    # Lorentzian-damped Gaussian and its erfc closed form
    a = 2.0
    g_int = quadrature.integrate_adaptive(lambda k: np.exp(-k * k / 4) / (k * k + a * a), 0.0, np.inf, tol=1e-12).value
    g_closed = math.pi * math.exp(a * a / 4.0) * erfc(a / 2.0) / (2.0 * a)
    details["g"] = [g_int, g_closed]
    worst = max(worst, _rel(g_int, g_closed))
    # normalization on the u+v=-1 line vs its defining x-integral
    u, v, L = -0.2, -0.8, 1.0
    n_int = quadrature.integrate_adaptive(lambda x: np.exp((1 + 2 * v) * x), 0.0, L, tol=1e-13).value * math.exp(v * v * L)
    n_closed = analytic.norm_Z(ModelParams(u, v, L))
    details["norm_line1"] = [n_int, n_closed]
    worst = max(worst, _rel(n_int, n_closed))
    # radial quadrature density vs the closed erf forms, n = 1 and 2
    for (uu, vv, n_idx) in ((-0.2, -0.8, 1), (-0.7, -1.3, 2)):
        p = ModelParams(uu, vv, 1.0)
        for y in (-1.0, 0.0, 1.0):
            worst = max(worst, _rel(analytic.pdf_Y(p, y), analytic.pdf_Y_quadrature(p, y, n_idx)))
    details["pdf_radial_worst"] = worst
    return CheckResult("quad_closed_forms", worst < 1e-8, worst, 1e-8, details)


def check_lqm_id1(ctx, seed) -> CheckResult:
    worst = 0.0
    grid = []
    for w in (0.5, 1.0, 1.5):
        for k in (0.5, 1.0, 2.0):
            lhs, rhs = quadrature.verify_id1(w, k)
            rel = _rel(lhs, rhs)
            grid.append({"w": w, "k": k, "rel": rel})
            worst = max(worst, rel)
    return CheckResult("lqm_id1", worst < 1e-6, worst, 1e-6, {"grid": grid})


def check_lqm_matrix_element(ctx, seed) -> CheckResult:
    worst = 0.0
    grid = []
    for alpha in (0.5, 1.0, 1.5):
        for (k, kp) in ((0.5, 2.0), (1.0, 1.0), (2.0, 0.7)):
            lhs, rhs = quadrature.verify_matrix_element(alpha, k, kp)
            rel = _rel(lhs, rhs)
            grid.append({"alpha": alpha, "k": k, "kp": kp, "rel": rel})
            worst = max(worst, rel)
    # symmetry under k <-> k'
    l1, r1 = quadrature.verify_matrix_element(0.8, 0.6, 1.7)
    l2, r2 = quadrature.verify_matrix_element(0.8, 1.7, 0.6)
    sym = max(_rel(l1, l2), _rel(r1, r2))
    worst = max(worst, sym)
    return CheckResult("lqm_matrix_element", worst < 1e-6, worst, 1e-6, {"grid": grid, "symmetry": sym})


def check_bessel_integral(ctx, seed) -> CheckResult:
    """Module Bessel values against an independent composite-Simpson oracle."""
    worst = 0.0
    for nu in (0.0, 1.0, 2.5, 5.0):
        for x in (0.5, 1.0, 4.0, 10.0):
            t_hi = math.acosh(1.0 + 60.0 / x)
            t = np.linspace(0.0, t_hi, 20001)
            f = np.cos(nu * t) * np.exp(-x * np.cosh(t))
            h = t[1] - t[0]
            simpson = h / 3.0 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
            worst = max(worst, abs(specfun.bessel_k_imag(nu, x) - simpson))
    return CheckResult("bessel_cos_cosh", worst < 1e-8, worst, 1e-8, {})


def check_specfun_identities(ctx, seed) -> CheckResult:
    xs = np.linspace(-6.0, 6.0, 1001)
    worst = float(np.max(np.abs(specfun.erf(xs) + specfun.erfc(xs) - 1.0)))
    worst = max(worst, float(np.max(np.abs(specfun.erf(-xs) + specfun.erf(xs)))))
    # |Gamma|^2 recurrence over a coarse grid
    for a in (0.1, 0.7, 2.3, 5.0):
        for b in (0.0, 0.5, 3.0, 10.0):
            lhs = specfun.abs_gamma_sq(a + 1.0, b)
            rhs = (a * a + b * b) * specfun.abs_gamma_sq(a, b)
            worst = max(worst, _rel(lhs, rhs))
    # reflection values
    worst = max(worst, _rel(specfun.abs_gamma_sq(1.0, 1.0), math.pi / math.sinh(math.pi)))
    worst = max(worst, _rel(specfun.abs_gamma_sq(0.0, 0.7), math.pi / (0.7 * math.sinh(0.7 * math.pi))))
    return CheckResult("specfun_identities", worst < 1e-11, worst, 1e-11, {})


def check_norm_lqm_exact(ctx, seed) -> CheckResult:
    worst = 0.0
    for L in (0.5, 1.0, 4.0):
        val = math.exp(quadrature.log_norm_lqm(0.5, 1e-13, L))
        worst = max(worst, _rel(val, L**-0.5))
    return CheckResult("norm_lqm_exact", worst < 1e-8, worst, 1e-8, {})


def check_cumulant_fd(ctx, seed) -> CheckResult:
    """Numeric log-normalization derivatives reproduce the closed cumulants."""
    w = -1.0
    L = 1.0
    worst = 0.0
    for v in (-0.8, -0.5, -0.35):
        p = ModelParams(w - v, v, L)

        def logz(vv):
            return math.log(float(analytic._norm_line1(vv, L)))

        h = 1e-4
        d1 = (logz(v + h) - logz(v - h)) / (2 * h)
        d2 = (logz(v + h) - 2 * logz(v) + logz(v - h)) / h**2
        worst = max(worst, abs(-0.5 * d1 - analytic.cumulant_Y(p, 1)))
        worst = max(worst, abs(0.25 * d2 - analytic.cumulant_Y(p, 2)))
    return CheckResult("cumulant_fd_consistency", worst < 1e-5, worst, 1e-5, {})


def check_fp_triangle(ctx, seed) -> CheckResult:
    """Laplace / endpoint density / joint-minimum closed forms cross-check."""
    details = {}
    r = RescaledParams(1.0, 1.0)
    lap = analytic.fp_laplace(r, 0.5)
    quad = quadrature.integrate_adaptive(
        lambda y: np.exp(-0.5 * y) * analytic.fp_pdf_Y(r, y), -14.0, 14.0, tol=1e-13
    ).value
    worst = _rel(lap, quad)
    details["laplace_vs_pdf"] = [lap, quad]
    # minimum-endpoint marginal integrates back to the endpoint density
    marg = quadrature.integrate_adaptive(lambda y: analytic.fp_min_end_pdf(r, y, 0.3), -12.0, 0.0, tol=1e-12).value
    worst_b = abs(marg - analytic.fp_pdf_Y(r, 0.3))
    details["minend_marginal"] = [marg, analytic.fp_pdf_Y(r, 0.3)]
    # total mass via the normalization
    r2 = RescaledParams(0.5, 1.5)

    def inner(ys):
        return np.array(
            [
                quadrature.integrate_adaptive(lambda yy2: analytic.fp_min_end_pdf(r2, yy, yy2), yy, 14.0, tol=1e-11).value
                for yy in np.atleast_1d(ys)
            ]
        )

    mass = quadrature.integrate_adaptive(inner, -10.0, 0.0, tol=1e-9).value
    details["total_mass"] = mass
    worst_c = abs(mass - 1.0)
    # location integral of the joint law
    jm = quadrature.tanh_sinh(
        lambda x: np.array([analytic.fp_joint_min_pdf(r, -0.4, xx, 0.3) for xx in np.atleast_1d(x)]),
        0.0,
        1.0,
        tol=1e-12,
    ).value
    worst_d = _rel(jm, analytic.fp_min_end_pdf(r, -0.4, 0.3))
    details["joint_x_integral"] = [jm, analytic.fp_min_end_pdf(r, -0.4, 0.3)]
    # endpoint-density route agreement at negative u_t + v_t (joint-minimum route)
    r3 = RescaledParams(-0.3, -0.4)
    marg3 = quadrature.integrate_adaptive(lambda y: analytic.fp_min_end_pdf(r3, y, 0.2), -14.0, 0.0, tol=1e-12).value
    worst_e = _rel(marg3, analytic.fp_pdf_Y(r3, 0.2))
    details["negative_w_route"] = [marg3, analytic.fp_pdf_Y(r3, 0.2)]
    stat = max(worst, worst_b, worst_c, worst_d, worst_e)
    return CheckResult("fp_triangle", stat < 1e-6, stat, 1e-6, details)


def check_fp_norm_symmetry(ctx, seed) -> CheckResult:
    worst = 0.0
    for (a, b) in ((1.0, 0.0), (0.5, 1.5), (-0.4, 0.9), (2.0, -0.3)):
        worst = max(worst, _rel(analytic.fp_norm(RescaledParams(a, b)), analytic.fp_norm(RescaledParams(b, a))))
    # equal-parameter limit against a two-sided finite difference
    t = 0.7
    h = 1e-5
    fd = (analytic.fp_norm(RescaledParams(t + h, t - h)) + analytic.fp_norm(RescaledParams(t - h, t + h))) / 2.0
    worst = max(worst, _rel(analytic.fp_norm(RescaledParams(t, t)), fd))
    return CheckResult("fp_norm_symmetry", worst < 1e-8, worst, 1e-8, {})


def check_fp_multipoint_m0(ctx, seed) -> CheckResult:
    worst = 0.0
    for r in (RescaledParams(1.0, 1.0), RescaledParams(-0.3, -0.4), RescaledParams(0.8, -0.2)):
        for y in (-0.5, 0.2, 1.0):
            a = analytic.fp_multipoint_pdf(r, [1.0], [y])
            b = analytic.fp_pdf_Y(r, y)
            worst = max(worst, _rel(a, b))
    # killed kernel far from the wall reduces to the free kernel
    gb = analytic._absorbed_kernel(0.3, 0.1, -40.0, 0.5)
    free = analytic._free_kernel(0.3, 0.1, 0.5)
    worst_free = _rel(float(gb), float(free))
    return CheckResult(
        "fp_multipoint_m0", max(worst, worst_free) < 1e-8, max(worst, worst_free), 1e-8, {"free_kernel_rel": worst_free}
    )


def check_laplace_finite_largeL(ctx, seed) -> CheckResult:
    """Finite-size Laplace value approaches the Gamma-ratio limit like c/L.

    The deviation constant is (3/2) [psi'(v+c/2)+psi'(u-c/2)-psi'(u)-psi'(v)]
    times the limit; checked at L = 400.
    """
    from scipy.special import polygamma

    u = v = 1.0
    c = 1.0
    target = math.pi**2 / 4.0
    pred_const = target * 1.5 * (polygamma(1, 1.5) + polygamma(1, 0.5) - 2 * polygamma(1, 1.0))
    L = 400.0
    val = analytic.laplace_finite(ModelParams(u, v, L), c)
    dev = (target - val) * L
    stat = abs(dev / pred_const - 1.0)
    return CheckResult(
        "laplace_finite_largeL",
        stat < 0.15,
        stat,
        0.15,
        {"L": L, "value": val, "deviation_times_L": dev, "predicted_const": pred_const},
    )


def check_laplace_j_zero(ctx, seed) -> CheckResult:
    q = LaplaceQuery([0.5], [0.0], ModelParams(1.0, 1.0, 1.0))
    a = quadrature.laplace_J(q)
    qfp = LaplaceQuery([0.5], [0.0], RescaledParams(1.0, 1.0))
    b = quadrature.laplace_J_fp(qfp)
    stat = max(abs(a - 1.0), abs(b - 1.0))
    return CheckResult("laplace_j_zero", stat == 0.0, stat, 1e-15, {})


def check_laplace_j_determinism(ctx, seed) -> CheckResult:
    q = LaplaceQuery([0.5], [0.4], ModelParams(1.0, 1.0, 1.0))
    a = quadrature.laplace_J(q)
    b = quadrature.laplace_J(q)
    return CheckResult("laplace_j_determinism", a == b, abs(a - b), 0.0, {"value": a})


def check_laplace_j_to_fp(ctx, seed) -> CheckResult:
    """Rescaled finite-size ratios converge to the hard-wall ratio."""
    target = quadrature.laplace_J_fp(LaplaceQuery([0.5], [0.5], RescaledParams(1.0, 1.0)))
    errs = []
    for L in (4.0, 16.0, 64.0):
        q = LaplaceQuery([0.5 * L], [0.5 / math.sqrt(L)], ModelParams(1.0 / math.sqrt(L), 1.0 / math.sqrt(L), L))
        errs.append(abs(quadrature.laplace_J(q) - target))
    ok = errs[0] > errs[1] > errs[2]
    return CheckResult("laplace_j_to_fp", ok, errs[-1], errs[0], {"errors": errs, "target": target})


# ---------------------------------------------------------------------------
# Monte Carlo vs analytic
# ---------------------------------------------------------------------------


def check_mc_norm_interval(ctx, seed) -> CheckResult:
    p = ModelParams(-0.2, -0.8, 1.0)
    rep = sampler.is_estimate(sampler.obs_one, p, n=ctx.n(100_000), n_steps=1024, base_drift=0.8, seed=seed, normalized=False)
    return _sigma_check("mc_norm_interval", rep.value, analytic.norm_Z(p), rep.std_err, details={"ess": rep.ess})


def check_mcmc_onepoint_ks(ctx, seed) -> CheckResult:
    p = ModelParams(-0.5, -0.5, 1.0)
    res = sampler.mcmc_chain(p, n_samples=ctx.n(100_000), n_steps=512, seed=seed)
    y = res.traces["endpoint"]
    grid = np.linspace(float(y.min()) - 0.5, float(y.max()) + 0.5, 4001)
    pdf = analytic.pdf_Y(p, grid)
    cdf_grid = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
    cdf_grid /= cdf_grid[-1]
    rep = stats.ks_one_sample(y, lambda s: np.interp(s, grid, cdf_grid), threshold=ctx.ks_threshold(0.02))
    return CheckResult("mcmc_onepoint_ks", rep.passed, rep.statistic, rep.threshold, {"acceptance": res.acceptance_rate, "iat": res.iat})


def check_mc_mean_var_line(ctx, seed) -> CheckResult:
    p = ModelParams(-0.2, -0.8, 1.0)
    res = sampler.mcmc_chain(p, n_samples=ctx.n(100_000), n_steps=512, seed=seed)
    y = res.traces["endpoint"]
    vals, errs = stats.weighted_moments(y, None, orders=(1, 2))
    mean_t = analytic.cumulant_Y(p, 1)
    var_t = analytic.cumulant_Y(p, 2)
    s1 = abs(vals[0] - mean_t) / errs[0]
    var_mc = vals[1] - vals[0] ** 2
    var_err = math.hypot(errs[1], 2 * abs(vals[0]) * errs[0])
    s2 = abs(var_mc - var_t) / var_err
    stat = max(s1, s2)
    return CheckResult(
        "mc_mean_var_line", stat < 3.0, stat, 3.0,
        {"mean": [vals[0], mean_t, errs[0]], "var": [var_mc, var_t, var_err]},
    )


def check_mc_mean_profile(ctx, seed) -> CheckResult:
    p = ModelParams(-0.5, -0.5, 1.0)
    res = sampler.mcmc_chain(
        p, n_samples=ctx.n(100_000), n_steps=512, seed=seed,
        observables={"mid": sampler.obs_point(0.5)},
    )
    vals, errs = stats.weighted_moments(res.traces["mid"], None, orders=(1,))
    return _sigma_check("mc_mean_profile", vals[0], analytic.mean_profile(p, 0.5), errs[0])


def check_laplace_finite_vs_mc(ctx, seed) -> CheckResult:
    p = ModelParams(1.0, 1.0, 1.0)
    c = 0.5
    target = analytic.laplace_finite(p, c)
    rep = sampler.is_estimate(lambda b: np.exp(-c * b.values[:, -1]), p, n=ctx.n(200_000), n_steps=512, seed=seed)
    return _sigma_check("laplace_finite_vs_mc", rep.value, target, rep.std_err, details={"ess": rep.ess})


def check_laplace_j_vs_mc(ctx, seed) -> CheckResult:
    p = ModelParams(1.0, 1.0, 1.0)
    target = quadrature.laplace_J(LaplaceQuery([0.5], [0.4], p))
    obs = lambda b: np.exp(-0.4 * b.values[:, b.values.shape[1] // 2])
    rep = sampler.is_estimate(obs, p, n=ctx.n(200_000), n_steps=512, seed=seed)
    return _sigma_check("laplace_j_vs_mc", rep.value, target, rep.std_err, details={"ess": rep.ess})


def check_laplace_j_fp_vs_mc(ctx, seed) -> CheckResult:
    r = RescaledParams(1.0, 1.0)
    target = quadrature.laplace_J_fp(LaplaceQuery([0.5], [0.5], r))
    obs = lambda b: np.exp(-0.5 * b.values[:, b.values.shape[1] // 2])
    rep = sampler.fp_is_estimate(obs, r, n=ctx.n(200_000), n_steps=512, seed=seed)
    return _sigma_check("laplace_j_fp_vs_mc", rep.value, target, rep.std_err, details={"ess": rep.ess})


def check_laplace_j_monotone_mc(ctx, seed) -> CheckResult:
    """Ordering of the one-point transform across s agrees between routes."""
    p = ModelParams(1.0, 1.0, 1.0)
    svals = (0.2, 0.6, 1.2)
    quads = [quadrature.laplace_J(LaplaceQuery([0.5], [s], p)) for s in svals]
    mcs, errs = [], []
    for i, s in enumerate(svals):
        obs = lambda b, ss=s: np.exp(-ss * b.values[:, b.values.shape[1] // 2])
        rep = sampler.is_estimate(obs, p, n=ctx.n(100_000), n_steps=512, seed=seed + i)
        mcs.append(rep.value)
        errs.append(rep.std_err)
    order_match = (np.argsort(quads) == np.argsort(mcs)).all()
    worst_sigma = max(abs(q - m) / e for q, m, e in zip(quads, mcs, errs))
    return CheckResult(
        "laplace_j_monotone_mc", bool(order_match and worst_sigma < 3.0), worst_sigma, 3.0,
        {"s": list(svals), "quad": quads, "mc": mcs},
    )


def check_fp_norm_mc(ctx, seed) -> CheckResult:
    r = RescaledParams(1.0, 0.0)
    rep = sampler.fp_is_estimate(sampler.obs_one, r, n=ctx.n(100_000), n_steps=512, seed=seed, normalized=False)
    return _sigma_check("fp_norm_mc", rep.value, analytic.fp_norm(r), rep.std_err, details={"ess": rep.ess})


def _fp_weighted_draws(r, n, n_steps, seed):
    """(endpoints, minima, normalized weights) under the rescaled measure."""
    ends, mins, lws = [], [], []
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / 10_000)))
    remaining = n
    for rng in rngs:
        count = min(10_000, remaining)
        remaining -= count
        vals = pth.brownian_batch(1.0, n_steps, count, 0.0, 0.5, rng)
        minima = pth.refined_min(vals, 1.0, 0.5, rng)
        lws.append(pth.fp_log_weight(vals, r.u_t, r.v_t, minima=minima))
        ends.append(vals[:, -1])
        mins.append(minima)
        if remaining <= 0:
            break
    lw = np.concatenate(lws)
    return np.concatenate(ends), np.concatenate(mins), np.exp(lw - lw.max())


def check_fp_endpoint_ks(ctx, seed) -> CheckResult:
    r = RescaledParams(1.0, 1.0)
    ends, _, w = _fp_weighted_draws(r, ctx.n(100_000), 512, seed)
    grid = np.linspace(float(ends.min()) - 0.5, float(ends.max()) + 0.5, 4001)
    pdf = analytic.fp_pdf_Y(r, grid)
    cdf_grid = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
    cdf_grid /= cdf_grid[-1]
    rep = stats.ks_one_sample(ends, lambda s: np.interp(s, grid, cdf_grid), weights=w, threshold=ctx.ks_threshold(0.02))
    return CheckResult("fp_endpoint_ks", rep.passed, rep.statistic, rep.threshold, {"n_eff": rep.n_effective})


def check_fp_minend_chi2(ctx, seed) -> CheckResult:
    r = RescaledParams(1.0, 1.0)
    ends, mins, w = _fp_weighted_draws(r, ctx.n(100_000), 512, seed)
    y_edges = np.linspace(-1.6, 0.0, 7)
    e_edges = np.linspace(-1.2, 1.6, 8)
    obs = np.zeros((y_edges.size - 1, e_edges.size - 1))
    iy = np.digitize(mins, y_edges) - 1
    ie = np.digitize(ends, e_edges) - 1
    ok = (iy >= 0) & (iy < obs.shape[0]) & (ie >= 0) & (ie < obs.shape[1])
    np.add.at(obs, (iy[ok], ie[ok]), w[ok])
    obs /= np.sum(w)
    # expected masses by per-cell Gauss rule on the closed form
    gx, gw = np.polynomial.legendre.leggauss(6)
    exp_mass = np.zeros_like(obs)
    for i in range(obs.shape[0]):
        ya, yb = y_edges[i], y_edges[i + 1]
        ys = 0.5 * (ya + yb) + 0.5 * (yb - ya) * gx
        wy = 0.5 * (yb - ya) * gw
        for j in range(obs.shape[1]):
            ea, eb = e_edges[j], e_edges[j + 1]
            es = 0.5 * (ea + eb) + 0.5 * (eb - ea) * gx
            we = 0.5 * (eb - ea) * gw
            vals = analytic.fp_min_end_pdf(r, ys[:, None], es[None, :])
            exp_mass[i, j] = float(wy @ vals @ we)
    keep = exp_mass.ravel() > 2e-3
    n_eff = float(np.sum(w) ** 2 / np.sum(w * w))
    rep = stats.chi2_vs_expected(obs.ravel()[keep], exp_mass.ravel()[keep], n_eff)
    return CheckResult("fp_minend_chi2", rep.passed, rep.statistic, rep.threshold, {"n_eff": n_eff, "cells": int(keep.sum())})


def check_fp_twopoint_chi2(ctx, seed) -> CheckResult:
    """Two-point joint density against the killed-propagator chain formula."""
    r = RescaledParams(1.0, 1.0)
    n = ctx.n(100_000)
    x1 = 0.4
    ends, mids, lws = [], [], []
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / 10_000)))
    remaining = n
    n_steps = 512
    for rng in rngs:
        count = min(10_000, remaining)
        remaining -= count
        vals = pth.brownian_batch(1.0, n_steps, count, 0.0, 0.5, rng)
        minima = pth.refined_min(vals, 1.0, 0.5, rng)
        lws.append(pth.fp_log_weight(vals, r.u_t, r.v_t, minima=minima))
        mids.append(vals[:, int(x1 * n_steps)])
        ends.append(vals[:, -1])
        if remaining <= 0:
            break
    lw = np.concatenate(lws)
    w = np.exp(lw - lw.max())
    mids, ends = np.concatenate(mids), np.concatenate(ends)
    m_edges = np.linspace(-0.8, 1.2, 6)
    e_edges = np.linspace(-1.0, 1.5, 6)
    obs = np.zeros((m_edges.size - 1, e_edges.size - 1))
    im = np.digitize(mids, m_edges) - 1
    ie = np.digitize(ends, e_edges) - 1
    ok = (im >= 0) & (im < obs.shape[0]) & (ie >= 0) & (ie < obs.shape[1])
    np.add.at(obs, (im[ok], ie[ok]), w[ok])
    obs /= np.sum(w)
    gx, gw = np.polynomial.legendre.leggauss(4)
    exp_mass = np.zeros_like(obs)
    for i in range(obs.shape[0]):
        xs = 0.5 * (m_edges[i] + m_edges[i + 1]) + 0.5 * (m_edges[i + 1] - m_edges[i]) * gx
        wx = 0.5 * (m_edges[i + 1] - m_edges[i]) * gw
        for j in range(obs.shape[1]):
            ys = 0.5 * (e_edges[j] + e_edges[j + 1]) + 0.5 * (e_edges[j + 1] - e_edges[j]) * gx
            wy = 0.5 * (e_edges[j + 1] - e_edges[j]) * gw
            dens = np.array([[analytic.fp_multipoint_pdf(r, [x1, 1.0], [a, b]) for b in ys] for a in xs])
            exp_mass[i, j] = float(wx @ dens @ wy)
    keep = exp_mass.ravel() > 2e-3
    n_eff = float(np.sum(w) ** 2 / np.sum(w * w))
    rep = stats.chi2_vs_expected(obs.ravel()[keep], exp_mass.ravel()[keep], n_eff)
    return CheckResult("fp_twopoint_chi2", rep.passed, rep.statistic, rep.threshold, {"n_eff": n_eff, "cells": int(keep.sum())})


def check_invgamma_brownian(ctx, seed) -> CheckResult:
    n = ctx.n(100_000)
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / 10_000)))
    vals = []
    remaining = n
    for rng in rngs:
        count = min(10_000, remaining)
        remaining -= count
        w = pth.brownian_batch(20.0, 2048, count, 1.0, 0.5, rng)
        vals.append(1.0 / pth.exp_functional(w, L=20.0))
        if remaining <= 0:
            break
    vi = np.concatenate(vals)
    rep = stats.ks_one_sample(vi, lambda s: gammainc(2.0, s), threshold=ctx.ks_threshold(0.02))
    return CheckResult("invgamma_brownian", rep.passed, rep.statistic, rep.threshold, {"n": n})


def check_invgamma_stationary(ctx, seed) -> CheckResult:
    u, v, L = 0.5, -1.0, 20.0
    n = ctx.n(100_000)
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / 10_000)))
    lws, invs = [], []
    remaining = n
    for rng in rngs:
        count = min(10_000, remaining)
        remaining -= count
        w = pth.brownian_batch(L, 2048, count, -v, 0.5, rng)
        z = pth.exp_functional(w, L=L)
        lws.append(-(u + v) * np.log(z))
        invs.append(1.0 / z)
        if remaining <= 0:
            break
    lw = np.concatenate(lws)
    vi = np.concatenate(invs)
    wts = np.exp(lw - lw.max())
    rep = stats.ks_one_sample(vi, lambda s: gammainc(u - v, s), weights=wts, threshold=ctx.ks_threshold(0.02))
    return CheckResult("invgamma_stationary", rep.passed, rep.statistic, rep.threshold, {"n_eff": rep.n_effective})


def check_hy_drift_slope(ctx, seed) -> CheckResult:
    u, v, x_max = 0.5, -1.0, 20.0
    n = ctx.n(40_000)
    n_steps = 1280
    rngs = specfun.spawn_rngs(seed, max(1, math.ceil(n / 10_000)))
    acc = np.zeros(n_steps + 1)
    acc2 = np.zeros(n_steps + 1)
    tot = 0
    remaining = n
    for rng in rngs:
        count = min(10_000, remaining)
        remaining -= count
        h = pth.hy_high_density_batch(u, v, x_max, n_steps, count, rng)
        acc += h.sum(axis=0)
        acc2 += (h * h).sum(axis=0)
        tot += count
        if remaining <= 0:
            break
    mean = acc / tot
    se_end = math.sqrt(max(acc2[-1] / tot - mean[-1] ** 2, 0.0) / tot)
    x = np.linspace(0.0, x_max, n_steps + 1)
    sel = x >= 10.0
    a_mat = np.vstack([x[sel], np.ones(int(sel.sum()))]).T
    coef, *_ = np.linalg.lstsq(a_mat, mean[sel], rcond=None)
    slope_err = math.sqrt(2.0) * se_end / 10.0
    return _sigma_check("hy_drift_slope", float(coef[0]), -v, slope_err)


def check_hy_reduction_ks(ctx, seed) -> CheckResult:
    u0 = 0.5
    rng = specfun.make_rng(seed)
    h = pth.hy_high_density_batch(u0, -u0, 1.0, 256, ctx.n(100_000), rng)
    rep = stats.ks_one_sample(h[:, -1], lambda s: ndtr(s - u0), threshold=ctx.ks_threshold(0.02))
    return CheckResult("hy_reduction_ks", rep.passed, rep.statistic, rep.threshold, {})


def check_hy_small_x_variance(ctx, seed) -> CheckResult:
    rng = specfun.make_rng(seed)
    x_small = 0.05
    h = pth.hy_max_current_batch(1.0, x_small, 16, ctx.n(200_000), rng)
    end = h[:, -1]
    var = float(np.var(end))
    se = var * math.sqrt(2.0 / (end.size - 1))
    return _sigma_check("hy_small_x_variance", var, x_small, max(se, 0.02 * x_small), details={"x": x_small})


def check_fp_halfline(ctx, seed) -> CheckResult:
    n = ctx.n(100_000)
    rng = specfun.make_rng(seed)
    details = {}
    lo = pth.fp_halfline_batch(-0.5, 0.3, "low_density", 1.0, 256, n, rng)
    rep1 = stats.ks_one_sample(lo[:, -1], lambda s: ndtr(s + 0.5), threshold=ctx.ks_threshold(0.02))
    details["low_density_ks"] = rep1.statistic
    hd = pth.fp_halfline_batch(0.7, -0.7, "high_density", 1.0, 256, n, rng)
    rep2 = stats.ks_one_sample(hd[:, -1], lambda s: ndtr(s - 0.7), threshold=ctx.ks_threshold(0.02))
    details["antidiagonal_ks"] = rep2.statistic
    # max-current: the boundary term is nonnegative, so H >= B1 + B2 pathwise;
    # at large u_t the second summand stays positive (three-dimensional-Bessel behavior)
    b2 = pth.brownian_batch(1.0, 128, 4000, 0.0, 0.5, rng)
    runmin = np.minimum.accumulate(b2, axis=1)
    details["pitman_positive"] = bool(np.all(b2 - 2.0 * runmin >= 0.0))
    passed = rep1.passed and rep2.passed and details["pitman_positive"]
    return CheckResult("fp_halfline", passed, max(rep1.statistic, rep2.statistic), rep1.threshold, details)


def check_idelaw(ctx, seed) -> CheckResult:
    out = sampler.verify_idelaw(-1.0, t=1.0, n=ctx.n(100_000), n_steps=512, seed=seed)
    thr = ctx.ks_threshold(0.02)
    s1, s2 = out["ks_process"].statistic, out["ks_scalar"].statistic
    passed = s1 < thr and s2 < thr and not out["truncation_warning"]
    return CheckResult("idelaw", passed, max(s1, s2), thr, {"process": s1, "scalar": s2})


def _delta_case(name, params, ctx, seed):
    rep = sampler.verify_delta_limit(1.0, 1.0, params, [5.0, 10.0, 20.0], x=0.5, n=ctx.n(150_000), seed=seed)
    # quick runs cannot resolve the smallest systematic gaps; require strict
    # monotonicity only at full scale, net decrease otherwise
    passed = rep.monotone_decreasing if ctx.scale >= 1.0 else rep.abs_errors[-1] < rep.abs_errors[0]
    return CheckResult(
        name,
        passed,
        rep.abs_errors[-1],
        rep.abs_errors[0],
        {"limit": rep.limit_value, "abs_errors": rep.abs_errors, "mc_errors": rep.mc_errors,
         "monotone": rep.monotone_decreasing, "region": rep.region},
    )


def check_delta_limit_r1(ctx, seed) -> CheckResult:
    return _delta_case("delta_limit_r1", ModelParams(0.4, 0.1, 1.0), ctx, seed)


def check_delta_limit_r2(ctx, seed) -> CheckResult:
    return _delta_case("delta_limit_r2", ModelParams(-0.3, 0.1, 1.0), ctx, seed)


def check_delta_limit_r3(ctx, seed) -> CheckResult:
    return _delta_case("delta_limit_r3", ModelParams(0.5, -0.2, 1.0), ctx, seed)


def check_ttransform(ctx, seed) -> CheckResult:
    """Exact zero-parameter identity plus measured convergence orders.

    The trapezoid pairing cancels the first-order error, so the observed
    orders sit near two; the check asserts the identity residuals shrink
    with a fitted order above 0.8 (see the acceptance suite for the
    stricter literal window).
    """
    rng = specfun.make_rng(seed)
    p0 = pth.sample_brownian(1.0, 256, 0.0, 0.5, rng)
    t0_exact = np.array_equal(pth.t_transform(p0, 0.0).values, p0.values)
    ns = (256, 512, 1024, 2048, 4096, 8192)
    n_rep = max(4, int(24 * ctx.scale))
    res = {nm: [] for nm in ("reciprocal", "inverse", "semigroup")}
    for n in ns:
        recs, invs, semis = [], [], []
        for _ in range(n_rep):
            p = pth.sample_brownian(1.0, n, 0.0, 0.5, rng)
            tp = pth.t_transform(p, 1.0)
            i1 = pth.running_exp_integral(tp.values, 1.0, sign=2.0)[0, -1]
            i0 = pth.running_exp_integral(p.values, 1.0, sign=2.0)[0, -1]
            recs.append(abs(1.0 / i1 - 1.0 / i0 - 1.0))
            invs.append(float(np.max(np.abs(pth.t_transform(tp, -1.0).values - p.values))))
            semis.append(float(np.max(np.abs(pth.t_transform(pth.t_transform(p, 0.6), 0.4).values - tp.values))))
        res["reciprocal"].append(float(np.mean(recs)))
        res["inverse"].append(float(np.mean(invs)))
        res["semigroup"].append(float(np.mean(semis)))
    deltas = [1.0 / n for n in ns]
    slopes = {nm: stats.convergence_order(deltas, errs)[0] for nm, errs in res.items()}
    ok = t0_exact and all(s > 0.8 for s in slopes.values())
    return CheckResult(
        "ttransform", ok, min(slopes.values()), 0.8,
        {"t0_exact": t0_exact, "slopes": slopes, "residuals": res},
    )


def check_ew_profile(ctx, seed) -> CheckResult:
    L = 0.01
    p = ModelParams(10.0, 10.0, L)
    r = RescaledParams(1.0, 1.0)
    worst = 0.0
    details = {}
    for frac in (0.25, 0.5, 0.75):
        rep = sampler.is_estimate(sampler.obs_point(frac * L), p, n=ctx.n(40_000), n_steps=512, base_drift=-10.0, seed=seed)
        target = analytic.ew_mean_profile(r, frac) * math.sqrt(L)
        sig = abs(rep.value - target) / rep.std_err
        details[f"x{frac}"] = [rep.value / math.sqrt(L), target / math.sqrt(L), rep.std_err / math.sqrt(L)]
        worst = max(worst, sig)
    return CheckResult("ew_profile", worst < 3.0, worst, 3.0, details)


def check_ew_sampler(ctx, seed) -> CheckResult:
    rng = specfun.make_rng(seed)
    n = ctx.n(100_000)
    vals = pth.ew_limit_batch(1.0, 1.0, 64, n, rng)
    mid = vals[:, 32]
    val = float(np.mean(mid))
    err = float(np.std(mid, ddof=1) / math.sqrt(n))
    target = analytic.ew_mean_profile(RescaledParams(1.0, 1.0), 0.5)
    return _sigma_check("ew_sampler", val, target, err)


def check_dp_endpoint_flatness(ctx, seed) -> CheckResult:
    p = ModelParams(-0.5, -0.5, 8.0)
    res = sampler.mcmc_chain(p, n_samples=ctx.n(60_000), n_steps=1024, seed=seed)
    y = res.traces["endpoint"]
    interior = p.L / 2.0 - math.sqrt(p.L)
    sel = np.abs(y) <= interior
    edges = np.linspace(-interior, interior, 7)
    counts, _ = np.histogram(y[sel], bins=edges)
    p_obs = counts / max(1, int(sel.sum()))
    n_eff = float(sel.sum()) / max(1.0, res.iat)
    rep = stats.chi2_flatness(p_obs, n_eff)
    # argmin-location histogram: reported, not asserted (conjectured uniform)
    kept = res.ensemble.values
    argmin_frac = np.argmin(kept, axis=1) / (kept.shape[1] - 1.0)
    hist, _ = np.histogram(argmin_frac, bins=np.linspace(0, 1, 6))
    return CheckResult(
        "dp_endpoint_flatness", rep.passed, rep.statistic, rep.threshold,
        {"n_eff": n_eff, "interior_halfwidth": interior, "argmin_histogram": hist.tolist()},
    )


def check_endpoint_ratio(ctx, seed) -> CheckResult:
    """Log endpoint-weight ratio on the pure-drift line is exactly Gaussian."""
    u, v, L = 0.4, -0.4, 4.0
    p = ModelParams(u, v, L)
    samples = sampler.endpoint_ratio_samples(p, ctx.n(60_000), seed=seed, n_steps=256)
    rep = stats.ks_one_sample(samples, lambda s: ndtr((s - u * L) / math.sqrt(L)), threshold=ctx.ks_threshold(0.02))
    var = float(np.var(samples))
    var_ok = var >= L / 2.0
    return CheckResult(
        "endpoint_ratio", rep.passed and var_ok, rep.statistic, rep.threshold,
        {"variance": var, "variance_floor": L / 2.0},
    )


def check_is_mcmc_agreement(ctx, seed) -> CheckResult:
    worst = 0.0
    details = {}
    for (u, v, L) in ((-0.2, -0.8, 1.0), (1.0, 1.0, 1.0), (-0.5, -0.5, 2.0)):
        p = ModelParams(u, v, L)
        rep_is = sampler.is_estimate(sampler.obs_endpoint, p, n=ctx.n(100_000), n_steps=256, base_drift=-v, seed=seed)
        res = sampler.mcmc_chain(p, n_samples=ctx.n(60_000), n_steps=256, seed=seed + 1)
        vals, errs = stats.weighted_moments(res.traces["endpoint"], None, orders=(1,))
        joint = math.hypot(rep_is.std_err, errs[0])
        sig = abs(rep_is.value - vals[0]) / joint
        details[f"({u},{v},{L})"] = [rep_is.value, vals[0], joint]
        worst = max(worst, sig)
    return CheckResult("is_mcmc_agreement", worst < 3.0, worst, 3.0, details)


def check_cameron_martin(ctx, seed) -> CheckResult:
    p = ModelParams(-0.2, -0.8, 1.0)
    rep0 = sampler.is_estimate(sampler.obs_endpoint, p, n=ctx.n(150_000), n_steps=256, base_drift=0.0, seed=seed)
    rep1 = sampler.is_estimate(sampler.obs_endpoint, p, n=ctx.n(150_000), n_steps=256, base_drift=-p.v, seed=seed + 1)
    joint = math.hypot(rep0.std_err, rep1.std_err)
    return _sigma_check("cameron_martin", rep0.value, rep1.value, joint, details={"ess0": rep0.ess, "ess1": rep1.ess})


def check_moment_z_mc(ctx, seed) -> CheckResult:
    p = ModelParams(-0.2, -0.8, 1.0)
    target = analytic.moment_Z(p, 1.0)
    obs = lambda b: pth.exp_functional(b.values, L=p.L)
    rep = sampler.is_estimate(obs, p, n=ctx.n(150_000), n_steps=512, base_drift=-p.v, seed=seed)
    return _sigma_check("moment_z_mc", rep.value, target, rep.std_err)


def check_drift_collapse(ctx, seed) -> CheckResult:
    """On u + v = 0 a drift-matched base makes every weight identical."""
    p = ModelParams(0.3, -0.3, 1.0)
    rep = sampler.is_estimate(sampler.obs_endpoint, p, n=ctx.n(10_000), n_steps=128, base_drift=-p.v, seed=seed)
    return CheckResult("drift_collapse", abs(rep.ess - rep.n_total) < 1e-6, abs(rep.ess - rep.n_total), 1e-6, {"ess": rep.ess})


def check_variates(ctx, seed) -> CheckResult:
    rng = specfun.make_rng(seed)
    n = ctx.n(100_000)
    details = {}
    worst_ratio = 0.0
    cases = [
        ("gaussian", specfun.sample_variate("gaussian", rng, n), lambda s: ndtr(s)),
        ("gamma", specfun.sample_variate("gamma", rng, n, shape=1.7), lambda s: gammainc(1.7, s)),
        ("exponential", specfun.sample_variate("exponential", rng, n, rate=2.0), lambda s: 1.0 - np.exp(-2.0 * s)),
        ("inverse_gamma", specfun.sample_variate("inverse_gamma", rng, n, shape=2.0), lambda s: 1.0 - gammainc(2.0, 1.0 / np.maximum(s, 1e-300))),
    ]
    # KS level ~0.001 corresponds to c = 1.95 in c / sqrt(n)
    thr = 1.95 / math.sqrt(n)
    for name, draws, cdf in cases:
        rep = stats.ks_one_sample(draws, cdf, threshold=thr)
        details[name] = rep.statistic
        worst_ratio = max(worst_ratio, rep.statistic / thr)
    # Gamma moment identity E[g^a] = Gamma(u+a)/Gamma(u)
    g = specfun.sample_variate("gamma", rng, n, shape=0.9)
    a = 0.7
    target = math.exp(specfun.log_gamma(0.9 + a) - specfun.log_gamma(0.9))
    mean = float(np.mean(g**a))
    se = float(np.std(g**a, ddof=1) / math.sqrt(n))
    details["gamma_moment_sigma"] = abs(mean - target) / se
    ok = worst_ratio < 1.0 and details["gamma_moment_sigma"] < 3.0
    return CheckResult("variates", ok, worst_ratio, 1.0, details)


def check_meander_rayleigh(ctx, seed) -> CheckResult:
    rng = specfun.make_rng(seed)
    m = pth.meander_batch(128, ctx.n(100_000), rng)
    rep = stats.ks_one_sample(m[:, -1], lambda s: 1.0 - np.exp(-np.maximum(s, 0.0) ** 2 / 2.0), threshold=ctx.ks_threshold(0.02))
    positive = bool(np.all(m[:, 1:] > 0.0))
    return CheckResult("meander_rayleigh", rep.passed and positive, rep.statistic, rep.threshold, {"interior_positive": positive})


def check_bridge_covariance(ctx, seed) -> CheckResult:
    rng = specfun.make_rng(seed)
    L, n_steps = 2.0, 64
    b = pth.bridge_batch(L, n_steps, ctx.n(200_000), 0.0, rng)
    worst = 0.0
    for (i, j) in ((16, 32), (16, 48), (32, 48)):
        s, t = i * L / n_steps, j * L / n_steps
        cov = float(np.mean(b[:, i] * b[:, j]))
        target = min(s, t) - s * t / L
        se = float(np.std(b[:, i] * b[:, j], ddof=1) / math.sqrt(b.shape[0]))
        worst = max(worst, abs(cov - target) / se)
    return CheckResult("bridge_covariance", worst < 3.0, worst, 3.0, {})


_REGISTRY: list[tuple[str, object]] = [
    ("quad_gaussian", check_quad_gaussian),
    ("quad_closed_forms", check_quad_closed_forms),
    ("specfun_identities", check_specfun_identities),
    ("bessel_cos_cosh", check_bessel_integral),
    ("lqm_id1", check_lqm_id1),
    ("lqm_matrix_element", check_lqm_matrix_element),
    ("norm_lqm_exact", check_norm_lqm_exact),
    ("cumulant_fd_consistency", check_cumulant_fd),
    ("fp_triangle", check_fp_triangle),
    ("fp_norm_symmetry", check_fp_norm_symmetry),
    ("fp_multipoint_m0", check_fp_multipoint_m0),
    ("laplace_finite_largeL", check_laplace_finite_largeL),
    ("laplace_j_zero", check_laplace_j_zero),
    ("laplace_j_determinism", check_laplace_j_determinism),
    ("laplace_j_to_fp", check_laplace_j_to_fp),
    ("variates", check_variates),
    ("meander_rayleigh", check_meander_rayleigh),
    ("bridge_covariance", check_bridge_covariance),
    ("mc_norm_interval", check_mc_norm_interval),
    ("mcmc_onepoint_ks", check_mcmc_onepoint_ks),
    ("mc_mean_var_line", check_mc_mean_var_line),
    ("mc_mean_profile", check_mc_mean_profile),
    ("laplace_finite_vs_mc", check_laplace_finite_vs_mc),
    ("laplace_j_vs_mc", check_laplace_j_vs_mc),
    ("laplace_j_fp_vs_mc", check_laplace_j_fp_vs_mc),
    ("laplace_j_monotone_mc", check_laplace_j_monotone_mc),
    ("fp_norm_mc", check_fp_norm_mc),
    ("fp_endpoint_ks", check_fp_endpoint_ks),
    ("fp_minend_chi2", check_fp_minend_chi2),
    ("fp_twopoint_chi2", check_fp_twopoint_chi2),
    ("invgamma_brownian", check_invgamma_brownian),
    ("invgamma_stationary", check_invgamma_stationary),
    ("hy_drift_slope", check_hy_drift_slope),
    ("hy_reduction_ks", check_hy_reduction_ks),
    ("hy_small_x_variance", check_hy_small_x_variance),
    ("fp_halfline", check_fp_halfline),
    ("idelaw", check_idelaw),
    ("delta_limit_r1", check_delta_limit_r1),
    ("delta_limit_r2", check_delta_limit_r2),
    ("delta_limit_r3", check_delta_limit_r3),
    ("ttransform", check_ttransform),
    ("ew_profile", check_ew_profile),
    ("ew_sampler", check_ew_sampler),
    ("dp_endpoint_flatness", check_dp_endpoint_flatness),
    ("endpoint_ratio", check_endpoint_ratio),
    ("is_mcmc_agreement", check_is_mcmc_agreement),
    ("cameron_martin", check_cameron_martin),
    ("moment_z_mc", check_moment_z_mc),
    ("drift_collapse", check_drift_collapse),
]

CHECK_NAMES = [name for name, _ in _REGISTRY]


def run_check(name: str, ctx: VerifyContext) -> CheckResult:
    for idx, (nm, fn) in enumerate(_REGISTRY):
        if nm == name:
            return fn(ctx, ctx.check_seed(idx))
    raise KeyError(f"unknown check {name!r}; known: {', '.join(CHECK_NAMES)}")


def run_checks(ctx: VerifyContext, only: list[str] | None = None, threads: int = 1) -> list[CheckResult]:
    selected = [(i, nm, fn) for i, (nm, fn) in enumerate(_REGISTRY) if only is None or nm in set(only)]
    if only:
        unknown = set(only) - set(CHECK_NAMES)
        if unknown:
            raise KeyError(f"unknown checks: {sorted(unknown)}")
    if threads > 1 and len(selected) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            futures = [ex.submit(fn, ctx, ctx.check_seed(i)) for i, nm, fn in selected]
            return [f.result() for f in futures]  # registry order: deterministic merge
    return [fn(ctx, ctx.check_seed(i)) for i, nm, fn in selected]
