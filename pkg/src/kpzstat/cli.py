"""Command-line surface: analytic tables, sampling runs, Laplace grids, verify.

Every command is deterministic given its configuration and seed; CSV and
JSON payloads are byte-identical across reruns.  Wall-clock timings are
never written into the payload: pass --meta-out to get a sidecar JSON with
runtime_ms.  Exit codes: 0 ok, 2 invalid or unsupported parameters,
3 statistical degeneracy (weight collapse), 4 quadrature non-convergence.

Config files are plain key=value lines ('#' comments allowed); explicit
command-line flags override file entries.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__, analytic, quadrature, sampler, specfun, stats, verify
from . import paths as pth
from .analytic import ModelParams, RescaledParams
from .errors import (
    DegenerateWeightsError,
    NoClosedFormError,
    ParameterRegionError,
    QuadratureError,
)

EXIT_OK = 0
EXIT_BAD_PARAMS = 2
EXIT_DEGENERATE = 3
EXIT_QUADRATURE = 4


def _config_hash(args: dict) -> str:
    blob = json.dumps({k: v for k, v in sorted(args.items()) if k not in ("out", "report_out", "ensemble_out", "meta_out", "config", "func")}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _csv_header(args: dict, schema: str) -> str:
    return f"# kpzstat v{__version__} schema={schema} config_sha256={_config_hash(args)}\n"


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _write_rows(fh, header_line: str, columns: list[str], rows) -> None:
    fh.write(header_line)
    fh.write(",".join(columns) + "\n")
    for row in rows:
        fh.write(",".join(repr(c) if isinstance(c, float) else str(c) for c in row) + "\n")


def _parse_grid(spec: str) -> np.ndarray:
    """start:stop:count (inclusive endpoints)."""
    try:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    except Exception as exc:
        raise ParameterRegionError(f"bad grid spec {spec!r}, want start:stop:count") from exc


def _load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterRegionError(f"bad config line: {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    file_values = _load_config(args.config)
    specified = {a.lstrip("-").replace("-", "_") for a in sys.argv if a.startswith("--")}
    for key, raw in file_values.items():
        if key in specified or not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif isinstance(current, int) and current is not None:
            setattr(args, key, int(raw))
        elif isinstance(current, float) and current is not None:
            setattr(args, key, float(raw))
        else:
            setattr(args, key, raw)
    return args


def _model_params(args) -> ModelParams:
    if args.u is None or args.v is None or args.L is None:
        raise ParameterRegionError("this command needs --u, --v and --L")
    return ModelParams(args.u, args.v, args.L)


def _rescaled_params(args) -> RescaledParams:
    if args.u_tilde is None or args.v_tilde is None:
        raise ParameterRegionError("this command needs --u-tilde and --v-tilde")
    return RescaledParams(args.u_tilde, args.v_tilde)


# ---------------------------------------------------------------------------
# analytic
# ---------------------------------------------------------------------------

_SCALAR_FORMULAS = {"norm_Z", "cumulant_Y", "moment_Z", "fp_norm", "laplace_finite", "laplace_limit", "fp_laplace"}
_GRID_FORMULAS = {"pdf_Y", "mean_profile", "scaling_profile", "fp_pdf_Y", "ew_mean_profile", "fp_min_end_pdf"}


def cmd_analytic(args) -> int:
    formula = args.formula
    vals: list[tuple] = []
    columns: list[str]
    if formula in ("norm_Z", "cumulant_Y", "moment_Z", "laplace_finite", "laplace_limit"):
        p = _model_params(args)
        if formula == "norm_Z":
            columns, vals = ["norm_Z"], [(analytic.norm_Z(p),)]
        elif formula == "cumulant_Y":
            columns, vals = ["order", "cumulant"], [(args.order, analytic.cumulant_Y(p, args.order))]
        elif formula == "moment_Z":
            columns, vals = ["k", "moment"], [(args.k, analytic.moment_Z(p, args.k))]
        elif formula == "laplace_finite":
            grid = _parse_grid(args.grid) if args.grid else np.array([args.c])
            columns = ["c", "laplace"]
            vals = [(float(c), analytic.laplace_finite(p, float(c))) for c in grid]
        else:
            grid = _parse_grid(args.grid) if args.grid else np.array([args.c])
            columns = ["c", "laplace"]
            vals = [(float(c), analytic.laplace_limit(p.u, p.v, float(c))) for c in grid]
    elif formula in ("fp_norm", "fp_laplace"):
        r = _rescaled_params(args)
        if formula == "fp_norm":
            columns, vals = ["fp_norm"], [(analytic.fp_norm(r),)]
        else:
            grid = _parse_grid(args.grid) if args.grid else np.array([args.c])
            columns = ["c", "laplace"]
            vals = [(float(c), analytic.fp_laplace(r, float(c))) for c in grid]
    elif formula in ("pdf_Y", "mean_profile"):
        p = _model_params(args)
        grid = _parse_grid(args.grid)
        if formula == "pdf_Y":
            dens = np.atleast_1d(analytic.pdf_Y(p, grid))
            columns = ["Y", "pdf"]
            vals = [(float(y), float(d)) for y, d in zip(grid, dens)]
        else:
            columns = ["x", "mean"]
            vals = [(float(x), analytic.mean_profile(p, float(x))) for x in grid]
    elif formula == "scaling_profile":
        grid = _parse_grid(args.grid)
        columns = ["x_tilde", "mean_per_L"]
        vals = [(float(x), analytic.scaling_profile(args.v_tilde, float(x))) for x in grid]
    elif formula in ("fp_pdf_Y", "ew_mean_profile"):
        r = _rescaled_params(args)
        grid = _parse_grid(args.grid)
        fn = analytic.fp_pdf_Y if formula == "fp_pdf_Y" else analytic.ew_mean_profile
        dens = np.atleast_1d(fn(r, grid))
        columns = ["x", formula]
        vals = [(float(y), float(d)) for y, d in zip(grid, dens)]
    elif formula == "fp_min_end_pdf":
        r = _rescaled_params(args)
        ygrid = _parse_grid(args.grid)
        endg = _parse_grid(args.grid2) if args.grid2 else ygrid
        columns = ["min", "endpoint", "pdf"]
        vals = [
            (float(y), float(e), float(analytic.fp_min_end_pdf(r, y, e)))
            for y in ygrid
            for e in endg
            if e >= y and y <= 0
        ]
    else:
        raise NoClosedFormError(
            f"unknown formula {formula!r}; closed-form families: "
            + ", ".join(sorted(_SCALAR_FORMULAS | _GRID_FORMULAS))
        )
    fh, close = _open_out(args.out)
    try:
        _write_rows(fh, _csv_header(vars(args), f"analytic.{formula}.v1"), columns, vals)
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def _observable(name: str):
    if name == "endpoint":
        return sampler.obs_endpoint
    if name == "one":
        return sampler.obs_one
    if name == "min":
        return sampler.obs_min
    if name.startswith("point:"):
        return sampler.obs_point(float(name.split(":", 1)[1]))
    raise ParameterRegionError(f"unknown observable {name!r} (endpoint, one, min, point:<x>)")


def _write_report(args, report: sampler.EstimateReport, extra: dict | None = None, runtime_ms: float | None = None):
    payload = report.to_json_dict()
    if extra:
        payload.update(extra)
    fh, close = _open_out(args.report_out)
    try:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    if args.meta_out and runtime_ms is not None:
        with open(args.meta_out, "w") as mfh:
            json.dump({"runtime_ms": runtime_ms, "written_at": time.strftime("%Y-%m-%dT%H:%M:%S")}, mfh, indent=2)
            mfh.write("\n")


def _write_histogram(args, samples, weights=None):
    lo, hi = (float(s) for s in args.range.split(":")) if args.range else (float(np.min(samples)), float(np.max(samples)))
    edges = np.linspace(lo, hi, args.bins + 1)
    edges_out, dens, err = stats.weighted_histogram(samples, edges, weights=weights)
    fh, close = _open_out(args.out)
    try:
        rows = [
            (float(edges_out[i]), float(edges_out[i + 1]), float(dens[i]), float(err[i]))
            for i in range(len(dens))
        ]
        _write_rows(fh, _csv_header(vars(args), "histogram.v1"), ["bin_left", "bin_right", "density", "stderr"], rows)
    finally:
        if close:
            fh.close()


def cmd_sample(args) -> int:
    if args.seed is None:
        raise ParameterRegionError("--seed is required for sampling commands")
    t0 = time.monotonic()
    measure = args.measure
    extra: dict = {"measure": measure}
    report = None
    hist_samples = None
    hist_weights = None
    ensemble = None

    if measure == "interval":
        p = _model_params(args)
        obs = _observable(args.observable)
        if args.method == "mcmc":
            res = sampler.mcmc_chain(p, args.n, args.n_steps, beta=args.beta, seed=args.seed, observables={"obs": obs})
            trace = res.traces["obs"]
            vals, errs = stats.weighted_moments(trace, None, orders=(1,))
            ess = trace.size / max(1.0, res.iat)
            report = sampler.EstimateReport(
                value=float(vals[0]), std_err=float(errs[0]), ess=float(min(ess, trace.size)),
                n_total=trace.size, method="mcmc", seed=args.seed,
                params={"u": p.u, "v": p.v, "L": p.L, "n_steps": args.n_steps},
            )
            extra.update({"acceptance_rate": res.acceptance_rate, "iat": res.iat, "burn_in": res.burn_in, "beta": res.beta})
            hist_samples = trace
            ensemble = res.ensemble
        else:
            base = args.base_drift if args.base_drift is not None else 0.0
            report = sampler.is_estimate(obs, p, args.n, args.n_steps, base_drift=base, seed=args.seed, normalized=not args.unnormalized)
    elif measure == "fixed-point":
        r = _rescaled_params(args)
        obs = _observable(args.observable)
        report = sampler.fp_is_estimate(obs, r, args.n, args.n_steps, seed=args.seed, normalized=not args.unnormalized)
        if args.histogram:
            ends, mins, w = verify._fp_weighted_draws(r, args.n, args.n_steps, args.seed)
            hist_samples = ends if args.histogram == "endpoint" else mins
            hist_weights = w
    elif measure in ("hy-max-current", "hy-high-density"):
        rng = specfun.make_rng(args.seed)
        if measure == "hy-max-current":
            vals = pth.hy_max_current_batch(args.u, args.x_max, args.n_steps, args.n, rng)
        else:
            vals = pth.hy_high_density_batch(args.u, args.v, args.x_max, args.n_steps, args.n, rng)
        ensemble = pth.WeightedEnsemble(args.x_max, vals[: args.keep_paths], np.zeros(min(args.n, args.keep_paths)))
        x = np.linspace(0.0, args.x_max, args.n_steps + 1)
        sel = x >= args.x_max / 2.0
        mean = vals.mean(axis=0)
        a_mat = np.vstack([x[sel], np.ones(int(sel.sum()))]).T
        coef, *_ = np.linalg.lstsq(a_mat, mean[sel], rcond=None)
        se = float(np.std(vals[:, -1], ddof=1) / math.sqrt(args.n)) * math.sqrt(2.0) / (args.x_max / 2.0)
        report = sampler.EstimateReport(
            value=float(coef[0]), std_err=se, ess=float(args.n), n_total=args.n, method="is", seed=args.seed,
            params={"u": args.u, "v": args.v, "x_max": args.x_max, "n_steps": args.n_steps},
            notes="slope of the mean height over the outer half of the domain",
        )
        hist_samples = vals[:, -1]
    elif measure.startswith("fp-halfline-"):
        region = measure.removeprefix("fp-halfline-").replace("-", "_")
        rng = specfun.make_rng(args.seed)
        r = _rescaled_params(args)
        vals = pth.fp_halfline_batch(r.u_t, r.v_t, region, args.x_max, args.n_steps, args.n, rng)
        ensemble = pth.WeightedEnsemble(args.x_max, vals[: args.keep_paths], np.zeros(min(args.n, args.keep_paths)))
        end = vals[:, -1]
        report = sampler.EstimateReport(
            value=float(end.mean()), std_err=float(end.std(ddof=1) / math.sqrt(args.n)), ess=float(args.n),
            n_total=args.n, method="is", seed=args.seed,
            params={"u_t": r.u_t, "v_t": r.v_t, "x_max": args.x_max, "region": region},
            notes="mean terminal height",
        )
        hist_samples = end
    elif measure in ("ew", "brownian", "bridge", "excursion", "meander"):
        rng = specfun.make_rng(args.seed)
        if measure == "ew":
            r = _rescaled_params(args)
            vals = pth.ew_limit_batch(r.u_t, r.v_t, args.n_steps, args.n, rng)
            length = 1.0
        elif measure == "brownian":
            vals = pth.brownian_batch(args.L or 1.0, args.n_steps, args.n, args.base_drift or 0.0, args.diffusion, rng)
            length = args.L or 1.0
        elif measure == "bridge":
            vals = pth.bridge_batch(args.L or 1.0, args.n_steps, args.n, args.endpoint, rng)
            length = args.L or 1.0
        elif measure == "excursion":
            vals = pth.excursion_batch(args.n_steps, args.n, rng)
            length = 1.0
        else:
            vals = pth.meander_batch(args.n_steps, args.n, rng)
            length = 1.0
        ensemble = pth.WeightedEnsemble(length, vals[: args.keep_paths], np.zeros(min(args.n, args.keep_paths)))
        end = vals[:, -1]
        report = sampler.EstimateReport(
            value=float(end.mean()), std_err=float(end.std(ddof=1) / math.sqrt(max(2, args.n))), ess=float(args.n),
            n_total=args.n, method="is", seed=args.seed, params={"measure": measure}, notes="mean terminal value",
        )
        hist_samples = end
    else:
        raise ParameterRegionError(f"unknown measure {measure!r}")

    runtime_ms = (time.monotonic() - t0) * 1000.0
    if report is not None and report.degenerate:
        _write_report(args, report, extra, runtime_ms)
        raise DegenerateWeightsError(f"effective sample size collapsed: {report.ess:.1f} of {report.n_total}")
    if report is not None:
        _write_report(args, report, extra, runtime_ms)
    if args.histogram and hist_samples is not None:
        _write_histogram(args, hist_samples, hist_weights)
    if args.ensemble_out and ensemble is not None:
        with open(args.ensemble_out, "wb") as fh:
            pth.write_ensemble(ensemble, fh, seed=args.seed)
    return EXIT_OK


# ---------------------------------------------------------------------------
# laplace
# ---------------------------------------------------------------------------


def cmd_laplace(args) -> int:
    kind = args.kind
    rows = []
    if kind in ("J", "J-fp"):
        points = [float(x) for x in args.points.split(",")]
        svals = [float(s) for s in args.s.split(",")] if args.s else None
        s_grid = _parse_grid(args.grid) if args.grid else None
        if svals is None and s_grid is None:
            raise ParameterRegionError("need --s or --grid for the leading parameter")
        params = _model_params(args) if kind == "J" else _rescaled_params(args)
        fn = quadrature.laplace_J if kind == "J" else quadrature.laplace_J_fp
        if s_grid is not None:
            remainder = svals[1:] if svals else []
            queries = [[float(s1)] + remainder for s1 in s_grid]
        else:
            queries = [svals]
        columns = [f"s{i+1}" for i in range(len(points))] + ["ratio", "rel_err_estimate"]
        for q in queries:
            value = fn(quadrature.LaplaceQuery(points, q, params))
            rows.append(tuple(q) + (value, 1e-9))
    elif kind == "finite":
        p = _model_params(args)
        grid = _parse_grid(args.grid) if args.grid else np.array([args.c])
        columns = ["c", "laplace", "rel_err_estimate"]
        rows = [(float(c), analytic.laplace_finite(p, float(c)), 1e-9) for c in grid]
    elif kind == "limit":
        p = _model_params(args)
        grid = _parse_grid(args.grid) if args.grid else np.array([args.c])
        columns = ["c", "laplace", "rel_err_estimate"]
        rows = [(float(c), analytic.laplace_limit(p.u, p.v, float(c)), 1e-15) for c in grid]
    elif kind == "fp":
        r = _rescaled_params(args)
        grid = _parse_grid(args.grid) if args.grid else np.array([args.c])
        columns = ["c", "laplace", "rel_err_estimate"]
        rows = [(float(c), analytic.fp_laplace(r, float(c)), 1e-14) for c in grid]
    else:
        raise ParameterRegionError(f"unknown laplace kind {kind!r}")
    fh, close = _open_out(args.out)
    try:
        _write_rows(fh, _csv_header(vars(args), f"laplace.{kind}.v1"), columns, rows)
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    ctx = verify.VerifyContext(seed=args.seed, scale=0.1 if args.quick else 1.0)
    only = args.only if args.only else None
    results = verify.run_checks(ctx, only=only, threads=args.threads)
    payload = {
        "version": __version__,
        "seed": args.seed,
        "quick": bool(args.quick),
        "all_passed": all(r.passed for r in results),
        "checks": [r.to_json_dict() for r in results],
    }
    fh, close = _open_out(args.out)
    try:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: statistic={r.statistic:.6g} threshold={r.threshold:.6g}", file=sys.stderr)
    return EXIT_OK if payload["all_passed"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpzstat", description=__doc__)
    parser.add_argument("--version", action="version", version=f"kpzstat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file; flags override")
        sp.add_argument("--out", default="-", help="output CSV/JSON path (default stdout)")
        sp.add_argument("--threads", type=int, default=int(os.environ.get("KPZSTAT_THREADS", "1")))
        sp.add_argument("--u", type=float, default=None)
        sp.add_argument("--v", type=float, default=None)
        sp.add_argument("--L", type=float, default=None)
        sp.add_argument("--u-tilde", dest="u_tilde", type=float, default=None)
        sp.add_argument("--v-tilde", dest="v_tilde", type=float, default=None)

    sp = sub.add_parser("analytic", help="tabulate closed-form observables")
    common(sp)
    sp.add_argument("--formula", required=True)
    sp.add_argument("--grid", help="start:stop:count")
    sp.add_argument("--grid2", help="second grid for 2D tables")
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--k", type=float, default=0.0)
    sp.add_argument("--order", type=int, default=1)
    sp.set_defaults(func=cmd_analytic)

    sp = sub.add_parser("sample", help="Monte Carlo runs: reports, histograms, ensembles")
    common(sp)
    sp.add_argument("--measure", required=True)
    sp.add_argument("--method", choices=("is", "mcmc"), default="is")
    sp.add_argument("--observable", default="endpoint")
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--n-steps", dest="n_steps", type=int, default=256)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--base-drift", dest="base_drift", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--diffusion", type=float, default=0.5)
    sp.add_argument("--endpoint", type=float, default=0.0)
    sp.add_argument("--x-max", dest="x_max", type=float, default=20.0)
    sp.add_argument("--unnormalized", action="store_true", help="report the raw weighted mean (normalization estimates)")
    sp.add_argument("--histogram", default=None, help="write a histogram of this quantity (endpoint, min)")
    sp.add_argument("--bins", type=int, default=60)
    sp.add_argument("--range", default=None, help="histogram range lo:hi")
    sp.add_argument("--keep-paths", dest="keep_paths", type=int, default=1024)
    sp.add_argument("--ensemble-out", dest="ensemble_out", default=None)
    sp.add_argument("--report-out", dest="report_out", default="-")
    sp.add_argument("--meta-out", dest="meta_out", default=None, help="sidecar JSON with runtime_ms")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("laplace", help="evaluate Laplace transforms on grids")
    common(sp)
    sp.add_argument("--kind", required=True, choices=("J", "J-fp", "finite", "limit", "fp"))
    sp.add_argument("--points", default="0.5", help="comma-separated interior points")
    sp.add_argument("--s", default=None, help="comma-separated decreasing s values")
    sp.add_argument("--grid", default=None, help="grid over s1 or c: start:stop:count")
    sp.add_argument("--c", type=float, default=0.0)
    sp.set_defaults(func=cmd_laplace)

    sp = sub.add_parser("verify", help="run the cross-validation battery")
    common(sp)
    sp.add_argument("--quick", action="store_true", help="10x fewer samples, loosened KS thresholds")
    sp.add_argument("--only", action="append", default=None, help="run only the named check (repeatable)")
    sp.add_argument("--seed", type=int, default=20_240_001)
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(parser, args)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except (NoClosedFormError, ParameterRegionError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except DegenerateWeightsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE


if __name__ == "__main__":
    sys.exit(main())
