"""Adaptive quadrature and the spectral Laplace-transform evaluators.

Two engines live here: a panel-adaptive Gauss rule for generic 1D work
(finite or semi-infinite domains) and a level-doubling tanh-sinh rule for
integrands with endpoint singularities.  On top of them sit the nested
wavenumber integrals giving the multipoint Laplace transforms of the
interval stationary measure, both at finite size (Gamma-function chain)
and in the hard-wall scaling limit (rational chain), plus the two spectral
identities used to cross-check the special-function layer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, roots_legendre

from . import specfun
from .errors import ParameterRegionError, QuadratureError, UnsupportedDepthError

__all__ = [
    "QuadResult",
    "LaplaceQuery",
    "integrate_adaptive",
    "tanh_sinh",
    "laplace_J",
    "laplace_J_fp",
    "log_norm_lqm",
    "verify_matrix_element",
    "verify_id1",
]

LOG_4PI = math.log(4.0 * math.pi)


@dataclass
class QuadResult:
    """Value, error estimate and cost of one quadrature call."""

    value: float
    abs_err_estimate: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if self.abs_err_estimate < 0:
            raise ValueError("abs_err_estimate must be >= 0")


@dataclass
class LaplaceQuery:
    """Ordered interior points and decreasing Laplace parameters.

    points are 0 < x_1 < ... < x_m < L (interval case) or inside (0, 1)
    (rescaled case); s holds s_1 > ... > s_m >= 0 with s_{m+1} = 0 implicit.
    params carries the boundary parameters: an object with attributes
    (u, v, L) for the finite interval or (u_t, v_t) for the rescaled limit.
    """

    points: Sequence[float]
    s: Sequence[float]
    params: object = field(default=None)

    def __post_init__(self):
        pts = [float(p) for p in self.points]
        svals = [float(si) for si in self.s]
        if len(pts) != len(svals):
            raise ParameterRegionError("points and s must have equal length")
        if len(pts) < 1:
            raise ParameterRegionError("need at least one point (m >= 1)")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ParameterRegionError("points must be strictly increasing")
        if any(b >= a for a, b in zip(svals, svals[1:])):
            raise ParameterRegionError("s must be strictly decreasing")
        if svals[-1] < 0:
            raise ParameterRegionError("s_m must be >= 0 (s_{m+1} = 0 implicit)")
        self.points = pts
        self.s = svals

    @property
    def m(self) -> int:
        return len(self.points)


# ---------------------------------------------------------------------------
# Generic adaptive Gauss quadrature
# ---------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        x, w = roots_legendre(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


def _panel_eval(f: Callable, a: float, b: float, vectorized: bool):
    """Gauss 10/21 pair on one panel; returns (I21, err, n_evals)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x10, w10 = _gl(10)
    x21, w21 = _gl(21)
    if vectorized:
        f10 = np.asarray(f(mid + half * x10), dtype=float)
        f21 = np.asarray(f(mid + half * x21), dtype=float)
    else:
        f10 = np.array([f(mid + half * xi) for xi in x10], dtype=float)
        f21 = np.array([f(mid + half * xi) for xi in x21], dtype=float)
    i10 = half * float(w10 @ f10)
    i21 = half * float(w21 @ f21)
    return i21, abs(i21 - i10), 31


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    vectorized: bool = True,
    max_panels: int = 4000,
    initial_panels: int = 8,
) -> QuadResult:
    """Adaptive integration of f over [a, b]; b may be np.inf.

    Semi-infinite domains are mapped onto (0, 1) with x = a + t/(1-t).
    The error estimate is the summed Gauss 10-vs-21 discrepancy; panels
    with the largest discrepancy are bisected first.  Deterministic:
    identical inputs produce bit-identical results.  If the budget of
    max_panels is exhausted the partial result is returned with
    converged=False.
    """
    if not tol > 0:
        raise ParameterRegionError("tol must be positive")
    if math.isinf(b):
        g = f

        def f_mapped(t):
            t = np.asarray(t)
            x = a + t / (1.0 - t)
            jac = 1.0 / (1.0 - t) ** 2
            return np.asarray(g(x)) * jac

        return integrate_adaptive(
            f_mapped, 0.0, 1.0, tol, vectorized=vectorized, max_panels=max_panels, initial_panels=initial_panels
        )

    if b <= a:
        raise ParameterRegionError("need a < b")

    edges = np.linspace(a, b, initial_panels + 1)
    panels: list[tuple[float, float, float, float]] = []  # (err, left, right, value)
    evals = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err, n = _panel_eval(f, lo, hi, vectorized)
        evals += n
        panels.append((err, lo, hi, val))

    while len(panels) < max_panels:
        total_err = sum(p[0] for p in panels)
        total_val = sum(abs(p[3]) for p in panels)
        if total_err <= max(tol, tol * total_val):
            break
        # split the worst panel (ties broken by position for determinism)
        worst = max(range(len(panels)), key=lambda i: (panels[i][0], -panels[i][1]))
        err, lo, hi, _ = panels.pop(worst)
        mid = 0.5 * (lo + hi)
        for seg in ((lo, mid), (mid, hi)):
            val, perr, n = _panel_eval(f, seg[0], seg[1], vectorized)
            evals += n
            panels.append((perr, seg[0], seg[1], val))

    panels.sort(key=lambda p: p[1])
    value = sum(p[3] for p in panels)
    err = sum(p[0] for p in panels)
    converged = err <= max(tol, tol * abs(value))
    return QuadResult(value=value, abs_err_estimate=err, evaluations=evals, converged=converged)


def tanh_sinh(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-12,
    *,
    vectorized: bool = True,
    max_level: int = 12,
) -> QuadResult:
    """Tanh-sinh rule on [a, b]; robust to integrable endpoint singularities.

    Node density doubles per level until two successive levels agree to tol
    (relative).  f is never evaluated exactly at a or b.
    """
    if b <= a:
        raise ParameterRegionError("need a < b")
    span = b - a
    prev = None
    value = 0.0
    evals = 0
    err = math.inf
    for level in range(4, max_level + 1):
        left, w = specfun._tanh_sinh_nodes(level)
        # approach each endpoint from its own side to keep precision
        x = np.where(left <= 0.5, a + span * left, b - span * left[::-1])
        inside = (x > a) & (x < b)
        x, wl = x[inside], w[inside]
        if vectorized:
            fx = np.asarray(f(x), dtype=float)
        else:
            fx = np.array([f(xi) for xi in x], dtype=float)
        evals += x.size
        value = span * float(wl @ fx)
        if prev is not None:
            err = abs(value - prev)
            if err <= tol * max(abs(value), 1.0e-300):
                return QuadResult(value=value, abs_err_estimate=err, evaluations=evals)
        prev = value
    return QuadResult(value=value, abs_err_estimate=err, evaluations=evals, converged=False)


# ---------------------------------------------------------------------------
# Chain-contracted spectral integrals
# ---------------------------------------------------------------------------


def _composite_gl_nodes(kmax: float, panels: int, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on (0, kmax), denser near the origin.

    The panel edges follow a quadratic stretch: the spectral weight kills
    the integrand like k^2 at 0 while large-L Gaussian factors concentrate
    it near the origin, so resolution is biased there.
    """
    t = np.linspace(0.0, 1.0, panels + 1)
    edges = kmax * t**2
    x, w = _gl(order)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + halfs[:, None] * x[None, :]).ravel()
    weights = (halfs[:, None] * w[None, :]).ravel()
    return nodes, weights


def _k_cutoff(dx: float, extra_decay: float) -> float:
    """Wavenumber beyond which exp(-k^2 dx / 4 - extra_decay * k) < 1e-18."""
    target = math.log(1e-18)
    # solve -k^2 dx/4 - extra_decay k = target
    if dx > 0:
        disc = extra_decay**2 - dx * target  # target < 0
        return (-extra_decay + math.sqrt(disc)) / (0.5 * dx)
    return -target / max(extra_decay, 1e-3)


def _log_chain_value(
    log_axis: list[Callable[[np.ndarray], np.ndarray]],
    log_pair: list[Callable[[np.ndarray, np.ndarray], np.ndarray]],
    kmaxes: list[float],
    panels: int,
) -> float:
    """log of the chain integral  prod_j int dk_j a_j(k_j) prod_j M_j(k_j, k_{j+1}).

    The chain couples only neighbours, so the tensor contraction reduces to
    matrix-vector products: cost O(m n^2) instead of n^(m+1).
    """
    n_dims = len(log_axis)
    nodes, weights = zip(*(_composite_gl_nodes(km, panels) for km in kmaxes))

    log_vec = log_axis[0](nodes[0])
    shift = float(np.max(log_vec))
    vec = weights[0] * np.exp(log_vec - shift)
    for j in range(n_dims - 1):
        m_log = log_pair[j](nodes[j][:, None], nodes[j + 1][None, :])
        m_shift = float(np.max(m_log))
        vec = vec @ np.exp(m_log - m_shift)
        shift += m_shift
        log_ax = log_axis[j + 1](nodes[j + 1])
        ax_shift = float(np.max(log_ax))
        vec = vec * (weights[j + 1] * np.exp(log_ax - ax_shift))
        shift += ax_shift
    total = float(np.sum(vec))
    if total <= 0:
        raise QuadratureError("chain integral produced a non-positive value")
    return shift + math.log(total)


def _log_chain_converged(log_axis, log_pair, kmaxes, rel_tol: float = 1e-9) -> float:
    prev = None
    for panels in (8, 16, 32, 64):
        val = _log_chain_value(log_axis, log_pair, kmaxes, panels)
        if prev is not None and abs(val - prev) <= rel_tol:
            return val
        prev = val
    raise QuadratureError("nested Laplace quadrature did not converge")


def _require_interval_params(params):
    for attr in ("u", "v", "L"):
        if not hasattr(params, attr):
            raise ParameterRegionError("finite-interval query needs params with u, v, L")
    return float(params.u), float(params.v), float(params.L)


def _require_rescaled_params(params):
    for attr in ("u_t", "v_t"):
        if not hasattr(params, attr):
            raise ParameterRegionError("rescaled query needs params with u_t, v_t")
    return float(params.u_t), float(params.v_t)


def _log_J_finite(u: float, v: float, L: float, points: list[float], s: list[float]) -> float:
    """log of the unnormalized spectral integral J~ for the finite interval.

    m = 0 gives the single-wavenumber integral whose value, times
    2/Gamma(u+v), is the measure normalization; m = 1, 2 append the
    Gamma-product chain factors with the implicit s_{m+1} = 0.
    """
    m = len(points)
    xs = [0.0] + list(points) + [L]
    dxs = [xs[j + 1] - xs[j] for j in range(m + 1)]
    ss = list(s) + [0.0]

    def axis_factory(j):
        dx = dxs[j]

        def log_axis(k):
            out = specfun.log_inv_abs_gamma_ik_sq(k) - LOG_4PI - k * k * dx / 4.0
            if j == 0:
                out = out + specfun.log_abs_gamma_sq(u - ss[0] / 2.0, k / 2.0)
            if j == m:
                out = out + specfun.log_abs_gamma_sq(v, k / 2.0)
            return out

        return log_axis

    def pair_factory(j):
        ds = ss[j] - ss[j + 1]
        lg_ds = gammaln(ds)

        def log_pair(k1, k2):
            return specfun.log_gamma4(ds / 2.0, k1 / 2.0, k2 / 2.0) - lg_ds

        return log_pair

    log_axis = [axis_factory(j) for j in range(m + 1)]
    log_pair = [pair_factory(j) for j in range(m)]
    # Gamma factors supply e^{-pi k / 2} style decay on the ends; rely mostly
    # on the Gaussian factors and pad the cutoffs.
    kmaxes = [max(_k_cutoff(dx, 0.0), 8.0) for dx in dxs]
    return math.log(0.5) + _log_chain_converged(log_axis, log_pair, kmaxes)


def log_norm_lqm(u: float, v: float, L: float) -> float:
    """log of the normalization constant computed from the spectral formula.

    Valid for u + v > 0 (and u, v > 0 for the endpoint factors); equals the
    log of the closed forms where those exist.  Used as an independent route
    against Monte Carlo and the explicit normalization formulas.
    """
    if u <= 0 or v <= 0 or u + v <= 0:
        raise ParameterRegionError("spectral normalization requires u, v > 0")
    return math.log(2.0) - gammaln(u + v) + _log_J_finite(u, v, L, [], [])


def laplace_J(q: LaplaceQuery) -> float:
    """Finite-interval multipoint Laplace ratio J(s) / J(0).

    This equals the expectation of exp(-sum_j s_j (X(x_j) - X(x_{j-1})))
    under the stationary X-process (no white-noise Gaussian prefactor).
    Supported depth m <= 2; requires u, v > 0 and s_1 < 2u.
    """
    u, v, L = _require_interval_params(q.params)
    if q.m > 2:
        raise UnsupportedDepthError("laplace_J supports m <= 2")
    if u <= 0 or v <= 0:
        raise ParameterRegionError("laplace_J requires u, v > 0")
    if any(p <= 0 or p >= L for p in q.points):
        raise ParameterRegionError("points must lie inside (0, L)")
    if q.s[0] >= 2 * u:
        raise ParameterRegionError("need s_1 < 2u")
    if all(si == 0.0 for si in q.s):
        return 1.0
    log_num = _log_J_finite(u, v, L, q.points, q.s)
    log_den = _log_J_finite(u, v, L, [], [])
    return math.exp(log_num - log_den)


def _log_J_fp(u_t: float, v_t: float, points: list[float], s: list[float]) -> float:
    """log of the hard-wall chain integral (rational factors).

    Constants are kept consistent across depths m, so the ratio of an m-point
    chain to the m = 0 integral is exactly the Laplace transform: per axis
    (2/pi) dk with the exponential-weight overlaps k/(a^2 + k^2) at the ends,
    and sine-product overlaps 2 ds k k' / ((ds^2 + (k-k')^2)(ds^2 + (k+k')^2))
    between neighbours.  (A formula quoted only up to a global constant per
    depth cannot be ratioed across depths.)
    """
    m = len(points)
    xs = [0.0] + list(points) + [1.0]
    dxs = [xs[j + 1] - xs[j] for j in range(m + 1)]
    ss = list(s) + [0.0]
    log_2_over_pi = math.log(2.0 / math.pi)

    def axis_factory(j):
        dx = dxs[j]

        def log_axis(k):
            out = log_2_over_pi - k * k * dx / 4.0
            if j == 0:
                out = out + np.log(k) - np.log((2.0 * u_t - ss[0]) ** 2 + k * k)
            if j == m:
                out = out + np.log(k) - np.log(4.0 * v_t * v_t + k * k)
            return out

        return log_axis

    def pair_factory(j):
        ds = ss[j] - ss[j + 1]

        def log_pair(k1, k2):
            return (
                math.log(2.0 * ds)
                + np.log(k1)
                + np.log(k2)
                - np.log(ds * ds + (k1 + k2) ** 2)
                - np.log(ds * ds + (k1 - k2) ** 2)
            )

        return log_pair

    log_axis = [axis_factory(j) for j in range(m + 1)]
    log_pair = [pair_factory(j) for j in range(m)]
    kmaxes = [max(_k_cutoff(dx, 0.0), 8.0) for dx in dxs]
    return _log_chain_converged(log_axis, log_pair, kmaxes)


def laplace_J_fp(q: LaplaceQuery) -> float:
    """Hard-wall (rescaled) multipoint Laplace ratio J^(s~) / J^(0).

    Same contract as laplace_J with points inside (0, 1) and parameters
    (u_t, v_t); requires v_t != 0 for the endpoint factor to be integrable
    and 2 u_t > s_1.
    """
    u_t, v_t = _require_rescaled_params(q.params)
    if q.m > 2:
        raise UnsupportedDepthError("laplace_J_fp supports m <= 2")
    if any(p <= 0 or p >= 1 for p in q.points):
        raise ParameterRegionError("rescaled points must lie inside (0, 1)")
    if u_t <= 0 or v_t <= 0:
        raise ParameterRegionError("laplace_J_fp requires u_t, v_t > 0")
    if q.s[0] >= 2 * u_t:
        raise ParameterRegionError("need s_1 < 2 u_t")
    if all(si == 0.0 for si in q.s):
        return 1.0
    log_num = _log_J_fp(u_t, v_t, q.points, q.s)
    log_den = _log_J_fp(u_t, v_t, [], [])
    return math.exp(log_num - log_den)


# ---------------------------------------------------------------------------
# Spectral identities
# ---------------------------------------------------------------------------


def verify_id1(w: float, k: float, tol: float = 1e-10) -> tuple[float, float]:
    """Exponential-weight overlap of one eigenfunction, both routes.

    lhs integrates N_k exp(-2 w U) K_{ik}(2 e^{-U}) over the line; rhs is
    the closed form (N_k / 4) |Gamma(w + i k / 2)|^2.  Requires w > 0.
    """
    if w <= 0:
        raise ParameterRegionError("verify_id1 requires w > 0")
    n_k = specfun.lqm_norm_const(k)
    u_hi = (-math.log(1e-22)) / (2.0 * w) + 4.0

    def f(u_nodes):
        u_nodes = np.asarray(u_nodes, dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            kk = specfun.bessel_k_imag(k, 2.0 * np.exp(-u_nodes))
        return np.exp(-2.0 * w * u_nodes) * kk

    res = integrate_adaptive(f, -4.0, u_hi, tol=tol)
    if not res.converged:
        raise QuadratureError("verify_id1 quadrature did not converge")
    lhs = n_k * res.value
    rhs = n_k / 4.0 * specfun.abs_gamma_sq(w, k / 2.0)
    return lhs, rhs


def verify_matrix_element(alpha: float, k: float, kp: float, tol: float = 1e-10) -> tuple[float, float]:
    """Power-weight overlap of two eigenfunctions, both routes.

    lhs integrates N_k N_k' r^{2 alpha - 1} K_{ik}(2r) K_{ik'}(2r) over
    r > 0 (evaluated in the variable U = -log r); rhs is the four-Gamma
    product N_k N_k' Gamma4(alpha +- ik/2 +- ik'/2) / (8 Gamma(2 alpha)).
    """
    if alpha <= 0:
        raise ParameterRegionError("verify_matrix_element requires alpha > 0")
    n_kk = specfun.lqm_norm_const(k) * specfun.lqm_norm_const(kp)
    u_hi = (-math.log(1e-22)) / (2.0 * alpha) + 4.0

    def f(u_nodes):
        u_nodes = np.asarray(u_nodes, dtype=float)
        r = np.exp(-u_nodes)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            prod = specfun.bessel_k_imag(k, 2.0 * r) * specfun.bessel_k_imag(kp, 2.0 * r)
        return np.exp(-2.0 * alpha * u_nodes) * prod

    res = integrate_adaptive(f, -4.0, u_hi, tol=tol)
    if not res.converged:
        raise QuadratureError("verify_matrix_element quadrature did not converge")
    lhs = n_kk * res.value
    rhs = n_kk * math.exp(
        specfun.log_gamma4(alpha, k / 2.0, kp / 2.0) - math.log(8.0) - gammaln(2.0 * alpha)
    )
    return lhs, rhs
