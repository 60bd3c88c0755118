"""Closed-form observables of the interval stationary measure.

The stationary height splits into an independent white-noise Brownian part
and a process X weighted by exponential functionals; everything here is an
exact formula (or a one-dimensional quadrature of one) for X: measure
normalizations, endpoint laws, cumulants on the solvable line, mean
profiles, Laplace transforms, and the whole rescaled (large-size limit)
family including the joint law of the minimum.

Parameter families with closed forms are gated explicitly; outside them a
NoClosedFormError tells the caller to fall back to Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf, erfc, erfcx, gammaln

from . import quadrature
from .errors import NoClosedFormError, ParameterRegionError

__all__ = [
    "ModelParams",
    "RescaledParams",
    "N_MAX",
    "norm_Z",
    "pdf_Y",
    "pdf_Y_quadrature",
    "cumulant_Y",
    "mean_profile",
    "scaling_profile",
    "moment_Z",
    "laplace_finite",
    "laplace_limit",
    "fp_norm",
    "fp_pdf_Y",
    "fp_laplace",
    "fp_joint_min_pdf",
    "fp_min_end_pdf",
    "fp_multipoint_pdf",
    "ew_mean_profile",
]

N_MAX = 6  # largest n in the u+v = -n family before the alternating sum degrades

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Boundary parameters and interval length for the finite-size measure."""

    u: float
    v: float
    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise ParameterRegionError("L must be positive")

    @property
    def region(self) -> str:
        u, v = self.u, self.v
        if u > 0 and v > 0:
            return "maximal-current"
        if v < 0 and u > v:
            return "high-density"
        if u < 0 and u < v:
            return "low-density"
        if u == v and v < 0:
            return "boundary u=v<0"
        if u == 0:
            return "boundary u=0"
        return "boundary v=0"


@dataclass(frozen=True)
class RescaledParams:
    """Rescaled boundary parameters of the large-size (fixed point) measure."""

    u_t: float
    v_t: float


def _is_near(x: float, target: float, tol: float = 1e-9) -> bool:
    return abs(x - target) <= tol


def _minus_integer_sum(u: float, v: float) -> int | None:
    """n >= 1 with u + v = -n (within tolerance), else None."""
    s = u + v
    n = round(-s)
    if n >= 1 and abs(s + n) <= 1e-9:
        return int(n)
    return None


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def _norm_line1(v, L):
    """Normalization on u + v = -1: e^{v^2 L} (e^{(1+2v)L} - 1) / (1+2v).

    expm1 keeps full precision through the removable point 1 + 2v = 0.
    """
    a = 1.0 + 2.0 * v
    bracket = L if a == 0.0 else np.expm1(a * L) / a
    return np.exp(v * v * L) * bracket


def _norm_line_n(n: int, v: float, L: float) -> float:
    """Alternating-sum normalization on u + v = -n.

    Individual terms carry Gamma(k + 2v) poles that cancel in the sum;
    since the sum itself is entire in v, it is evaluated a small step into
    the complex plane whenever 2v sits at or near an integer constellation,
    and the real part taken (error O(step^2)).
    """
    from scipy.special import loggamma

    def eval_sum(vv) -> complex:
        total = 0.0 + 0.0j
        for k in range(n + 1):
            z = k + 2.0 * vv
            log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            lg = loggamma(complex(z)) - loggamma(complex(n + 1 + z))
            term = (2.0 * k + 2.0 * vv) * np.exp(L * k * (k + 2.0 * vv) + log_binom + lg)
            total += (-1.0) ** (n - k) * term
        return np.exp(vv * vv * L) * total

    near_pole = any(
        (k + 2.0 * v) <= 0.5 and abs((k + 2.0 * v) - round(k + 2.0 * v)) < 1e-4
        for k in range(n + 1)
    )
    vv = v + 1e-5j if near_pole else v + 0.0j
    return float(np.real(eval_sum(vv)))


def norm_Z(p: ModelParams) -> float:
    """Measure normalization for the supported closed-form families.

    Supported: u + v = 0 (pure drift case), (u, v) = (1/2, 0), and
    u + v = -n for integer 1 <= n <= N_MAX.  Elsewhere raises
    NoClosedFormError (Monte Carlo is the fallback).
    """
    u, v, L = p.u, p.v, p.L
    if _is_near(u + v, 0.0):
        return math.exp(v * v * L)
    if _is_near(u, 0.5) and _is_near(v, 0.0):
        return L**-0.5
    n = _minus_integer_sum(u, v)
    if n is not None and n <= N_MAX:
        if n == 1:
            return float(_norm_line1(v, L))
        return _norm_line_n(n, v, L)
    raise NoClosedFormError(
        f"no closed-form normalization at (u, v) = ({u}, {v}); "
        f"supported: u+v=0, (1/2, 0), u+v=-n for n <= {N_MAX}"
    )


def moment_Z(p: ModelParams, k: float) -> float:
    """E[Z^k] under the stationary measure, as a ratio of normalizations."""
    if k == 0:
        return 1.0
    num = norm_Z(ModelParams(p.u - k, p.v, p.L))
    den = norm_Z(p)
    return num / den


# ---------------------------------------------------------------------------
# One-point law of the free endpoint
# ---------------------------------------------------------------------------


def _pdf_line1(u, v, L, Y):
    """Endpoint density on u + v = -1 (erf pair form)."""
    z = norm_Z(ModelParams(u, v, L))
    sq = 2.0 * math.sqrt(L)
    bracket = erf((L - 2.0 * Y) / sq) + erf((L + 2.0 * Y) / sq)
    return np.exp(-(1.0 + 2.0 * v) * Y + L / 4.0) * bracket / (2.0 * z)


def _pdf_line2(u, v, L, Y):
    """Endpoint density on u + v = -2 (explicit two-erf-pair form)."""
    a = 2.0 * v
    num = (
        a + 3.0
        - 4.0 * (v + 1.0) * np.exp(2.0 * L * v + L)
        + (a + 1.0) * np.exp(4.0 * L * (v + 1.0))
    )
    den = 2.0 * (v + 1.0) * (a + 1.0) * (a + 3.0)
    if abs(den) < 1e-8:
        # removable pole constellation: evaluate complex and take real part
        vv = v + 1e-5j
        numc = (
            2.0 * vv + 3.0
            - 4.0 * (vv + 1.0) * np.exp(2.0 * L * vv + L)
            + (2.0 * vv + 1.0) * np.exp(4.0 * L * (vv + 1.0))
        )
        denc = 2.0 * (vv + 1.0) * (2.0 * vv + 1.0) * (2.0 * vv + 3.0)
        z = float(np.real(np.exp(vv * vv * L) * numc / denc))
    else:
        z = math.exp(v * v * L) * num / den
    sq = math.sqrt(L)
    big = erf((L - Y) / sq) + erf((L + Y) / sq)
    small = erf((L - 2.0 * Y) / (2.0 * sq)) + erf((L + 2.0 * Y) / (2.0 * sq))
    return (
        np.exp(L / 4.0 - 2.0 * (v + 1.0) * Y)
        / (2.0 * z)
        * (np.exp(3.0 * L / 4.0) * big - 2.0 * np.cosh(Y) * small)
    )


def pdf_Y_quadrature(p: ModelParams, Y, n: int | None = None) -> np.ndarray | float:
    """Endpoint density on u + v = -n via the single radial quadrature.

    Valid for any integer n >= 1; used as the generic route for n >= 3 and
    as the cross-representation oracle for the n = 1, 2 closed forms.
    """
    u, v, L = p.u, p.v, p.L
    if n is None:
        n = _minus_integer_sum(u, v)
    if n is None or n < 1:
        raise NoClosedFormError("radial-quadrature density requires u + v = -n, n >= 1")
    z = norm_Z(p)
    y_arr = np.atleast_1d(np.asarray(Y, dtype=float))
    out = np.empty_like(y_arr)
    pref = 2.0 ** (n + 1) / (math.factorial(n) * math.sqrt(math.pi * L**3))
    for i, y in enumerate(y_arr):
        ay = abs(y)
        # integrand r e^{-r^2/L} (cosh r - cosh y)^n dies past r* = nL/2 + spread
        r_hi = n * L / 2.0 + math.sqrt(L * 46.0) + ay + 5.0
        cosh_y = math.cosh(y)

        def f(r):
            r = np.asarray(r, dtype=float)
            diff = np.maximum(np.cosh(r) - cosh_y, 0.0)
            return r * np.exp(-r * r / L) * diff**n

        res = quadrature.integrate_adaptive(f, ay, r_hi, tol=1e-12)
        out[i] = pref * math.exp(-(n + 2.0 * v) * y) * res.value / z
    if np.ndim(Y) == 0:
        return float(out[0])
    return out


def _sinh_ratio(y):
    """y / sinh(y), series-bridged through the origin."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    safe = np.where(small, 1.0, y)
    return np.where(small, 1.0 - y * y / 6.0, safe / np.sinh(safe))


def _pdf_plus1_unnorm(v, L, y):
    y = np.asarray(y, dtype=float)
    return np.exp(-y * y / L - 2.0 * v * y + y) * _sinh_ratio(y) / (L * math.sqrt(math.pi * L))


@lru_cache(maxsize=128)
def _norm_plus1(v: float, L: float) -> float:
    """Normalization of the u + v = +1 endpoint density, fixed numerically."""
    half_width = math.sqrt(46.0 * L) + (abs(v) + 1.0) * L + 5.0
    res = quadrature.integrate_adaptive(lambda y: _pdf_plus1_unnorm(v, L, y), -half_width, half_width, tol=1e-12)
    return res.value


def pdf_Y(p: ModelParams, Y) -> np.ndarray | float:
    """One-point density of the free endpoint X(L).

    Closed forms on u + v = -1 and -2, the radial quadrature on
    u + v = -n for 3 <= n <= N_MAX, and the hyperbolic-sine form on
    u + v = +1 (normalized numerically).  Vectorized in Y.
    """
    u, v, L = p.u, p.v, p.L
    n = _minus_integer_sum(u, v)
    y_arr = np.asarray(Y, dtype=float)
    if n == 1:
        out = _pdf_line1(u, v, L, y_arr)
    elif n == 2:
        out = _pdf_line2(u, v, L, y_arr)
    elif n is not None and n <= N_MAX:
        out = pdf_Y_quadrature(p, Y, n)
        return out
    elif _is_near(u + v, 1.0):
        out = _pdf_plus1_unnorm(v, L, y_arr) / _norm_plus1(v, L)
    else:
        raise NoClosedFormError(
            f"pdf_Y supports u+v in {{-1, ..., -{N_MAX}, +1}}, got u+v = {u + v}"
        )
    if np.ndim(Y) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Cumulants and profiles on the u + v = -1 line
# ---------------------------------------------------------------------------


def _require_line1(p: ModelParams):
    if _minus_integer_sum(p.u, p.v) != 1:
        raise ParameterRegionError("this observable lives on the line u + v = -1")


def cumulant_Y(p: ModelParams, order: int) -> float:
    """Cumulants of the endpoint on u + v = -1.

    Orders 1 and 2 are closed forms (series-bridged at the symmetric
    point); higher orders differentiate log of the normalization
    numerically with Richardson extrapolation.
    """
    _require_line1(p)
    if order < 1:
        raise ParameterRegionError("order must be >= 1")
    v, L = p.v, p.L
    a = 2.0 * v + 1.0
    if order == 1:
        if abs(a * L) < 1e-5:
            return -a * L * (L + 6.0) / 12.0
        return L * (1.0 / (1.0 - math.exp(a * L)) - v - 1.0) + 1.0 / a
    if order == 2:
        if abs(a * L) < 1e-4:
            return L * (L + 6.0) / 12.0 - a * a * L**4 / 240.0
        return L * L / (2.0 - 2.0 * math.cosh(a * L)) + L / 2.0 + 1.0 / (a * a)

    # (-1/2 d/dv)^order log Z at fixed u+v: central differences + Richardson
    def g(vv: float) -> float:
        return math.log(float(_norm_line1(vv, L)))

    def fd(h: float) -> float:
        if order == 3:
            stencil = [(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)]
        elif order == 4:
            stencil = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)]
        else:
            raise ParameterRegionError("cumulant orders above 4 are not supported")
        return sum(c * g(v + k * h) for k, c in stencil) / h**order

    h0 = 1e-2
    d1, d2 = fd(h0), fd(h0 / 2.0)
    richardson = (4.0 * d2 - d1) / 3.0
    return (-0.5) ** order * richardson


def mean_profile(p: ModelParams, x: float) -> float:
    """Mean of X(x) on u + v = -1; parabolic at the symmetric point."""
    _require_line1(p)
    if not 0.0 <= x <= p.L:
        raise ParameterRegionError("x must lie in [0, L]")
    v, L = p.v, p.L
    a = 2.0 * v + 1.0
    if abs(a * L) < 1e-5:
        # series through the symmetric point; the O(a) slope matches the
        # endpoint cumulant expansion at x = L
        return (x * x - x * L) / (2.0 * L) + a * (x**3 / (6.0 * L) - x / 2.0 - x * x / 4.0)
    num = v * a * x + math.exp(a * x) - 1.0 - (v + 1.0) * a * x * math.exp(a * L)
    den = a * math.expm1(a * L)
    return num / den


def scaling_profile(v_t: float, x_t: float) -> float:
    """Critical-regime mean profile per unit length.

    Large-size limit of mean_profile / L at x = x_t L with the rescaled
    distance-to-symmetric-point v_t = L (v + 1/2).
    """
    if not 0.0 <= x_t <= 1.0:
        raise ParameterRegionError("x_t must lie in [0, 1]")
    if abs(v_t) < 1e-5:
        return -x_t * (1.0 - x_t) / 2.0 + v_t * (x_t**3 / 3.0 - x_t * x_t / 2.0)
    coth = 1.0 / math.tanh(v_t)
    return 0.25 * (math.expm1(2.0 * v_t * x_t) * (coth - 1.0) / v_t - 2.0 * x_t * coth)


# ---------------------------------------------------------------------------
# Laplace transforms (finite size)
# ---------------------------------------------------------------------------


def laplace_finite(p: ModelParams, c: float) -> float:
    """E[exp(-c X(L))] for u, v > 0 via the spectral wavenumber quadrature.

    Equivalently the ratio of normalizations at shifted parameters
    (u - c/2, v + c/2); requires -2v < c < 2u.
    """
    u, v, L = p.u, p.v, p.L
    if u <= 0 or v <= 0:
        raise ParameterRegionError("laplace_finite requires u, v > 0")
    if not (-2.0 * v < c < 2.0 * u):
        raise ParameterRegionError("need -2v < c < 2u")
    if c == 0:
        return 1.0
    log_num = quadrature.log_norm_lqm(u - c / 2.0, v + c / 2.0, L)
    log_den = quadrature.log_norm_lqm(u, v, L)
    # the Gamma(u+v) prefactors coincide and cancel
    return math.exp(log_num - log_den)


def laplace_limit(u: float, v: float, c: float) -> float:
    """Large-size limit of E[exp(-c X(L))] for fixed u, v > 0.

    Matches the law of a difference of log-Gamma pairs: two independent
    Gamma(u) against two independent Gamma(v) variables.
    """
    if u <= 0 or v <= 0:
        raise ParameterRegionError("laplace_limit requires u, v > 0")
    if not (-2.0 * v < c < 2.0 * u):
        raise ParameterRegionError("need -2v < c < 2u")
    return math.exp(
        2.0 * (gammaln(v + c / 2.0) - gammaln(v)) + 2.0 * (gammaln(u - c / 2.0) - gammaln(u))
    )


# ---------------------------------------------------------------------------
# Rescaled (fixed point) family
# ---------------------------------------------------------------------------


def _f_erfcx(t):
    """t e^{t^2} erfc(t), evaluated without overflow."""
    return t * erfcx(t) if np.ndim(t) == 0 else np.asarray(t) * erfcx(t)


def fp_norm(r: RescaledParams) -> float:
    """Normalization of the rescaled measure; symmetric in (u_t, v_t).

    Divided-difference of t erfcx(t); the u_t -> v_t limit is the
    derivative (1 + 2 t^2) erfcx(t) - 2 t / sqrt(pi).
    """
    ut, vt = r.u_t, r.v_t
    if abs(ut - vt) < 1e-7:
        t = 0.5 * (ut + vt)
        return (1.0 + 2.0 * t * t) * float(erfcx(t)) - 2.0 * t / _SQRT_PI
    return (float(_f_erfcx(ut)) - float(_f_erfcx(vt))) / (ut - vt)


def fp_pdf_Y(r: RescaledParams, Y) -> np.ndarray | float:
    """Endpoint density of the rescaled process, valid for all (u_t, v_t).

    Stable form: a shared Gaussian envelope times
    (1/sqrt(pi) - (w/2) erfcx(w/2 + |Y|)) with w = u_t + v_t, so the
    w -> 0 limit is manifestly the centered Gaussian.
    """
    ut, vt = r.u_t, r.v_t
    w = ut + vt
    y = np.asarray(Y, dtype=float)
    env = np.where(y >= 0, np.exp(-y * y - 2.0 * vt * y), np.exp(-y * y + 2.0 * ut * y))
    core = 1.0 / _SQRT_PI - 0.5 * w * erfcx(0.5 * w + np.abs(y))
    out = env * core / fp_norm(r)
    if np.ndim(Y) == 0:
        return float(out)
    return out


def fp_laplace(r: RescaledParams, c: float) -> float:
    """E[exp(-c X~(1))] for the rescaled measure.

    Exactly the normalization ratio at shifted parameters
    (u_t - c/2, v_t + c/2); the derivation region is -2 v_t < c < 2 u_t
    when both parameters are positive, enforced here.
    """
    ut, vt = r.u_t, r.v_t
    if ut > 0 and vt > 0 and not (-2.0 * vt < c < 2.0 * ut):
        raise ParameterRegionError("need -2 v_t < c < 2 u_t")
    if c == 0:
        return 1.0
    return fp_norm(RescaledParams(ut - c / 2.0, vt + c / 2.0)) / fp_norm(r)


def fp_joint_min_pdf(r: RescaledParams, y: float, x: float, Y: float) -> float:
    """Joint density of (minimum value y, minimum location x, endpoint Y)."""
    if y > 0 or Y < y:
        raise ParameterRegionError("support: y <= 0 and Y >= y")
    if not (0.0 < x < 1.0):
        raise ParameterRegionError("support: 0 < x < 1")
    ut, vt = r.u_t, r.v_t
    w = ut + vt
    pref = 4.0 * abs(y) * (Y - y) / (math.pi * x**1.5 * (1.0 - x) ** 1.5)
    expo = -y * y / x - (y - Y) ** 2 / (1.0 - x) + 2.0 * w * y - 2.0 * vt * Y
    return pref * math.exp(expo) / fp_norm(r)


def fp_min_end_pdf(r: RescaledParams, y, Y) -> np.ndarray | float:
    """Joint density of (minimum value y, endpoint Y), location integrated out."""
    ut, vt = r.u_t, r.v_t
    w = ut + vt
    y_arr = np.asarray(y, dtype=float)
    yy_arr = np.asarray(Y, dtype=float)
    expo = -((yy_arr - 2.0 * y_arr) ** 2) + 2.0 * w * y_arr - 2.0 * vt * yy_arr
    val = 4.0 * (yy_arr - 2.0 * y_arr) / _SQRT_PI * np.exp(expo) / fp_norm(r)
    val = np.where((y_arr <= 0) & (yy_arr >= y_arr), val, 0.0)
    if np.ndim(y) == 0 and np.ndim(Y) == 0:
        return float(val)
    return val


def _free_kernel(a, b, dx):
    return np.exp(-((a - b) ** 2) / dx) / np.sqrt(math.pi * dx)


def _absorbed_kernel(a, b, l, dx):
    """Transition density (diffusion 1/2, time dx) killed below level l."""
    direct = np.exp(-((a - b) ** 2) / dx)
    image = np.exp(-((a + b - 2.0 * l) ** 2) / dx)
    out = (direct - image) / np.sqrt(math.pi * dx)
    return np.where((a > l) & (b > l), out, 0.0)


def fp_multipoint_pdf(r: RescaledParams, points, values) -> float:
    """Joint density of the rescaled process at interior points plus the endpoint.

    points must be increasing in (0, 1] with points[-1] == 1; values are the
    corresponding process values.  Uses the killed-propagator chain with the
    level integral done by parts for u_t + v_t > 0 and through the level
    derivative otherwise; the two agree on the overlap.
    """
    pts = [float(q) for q in points]
    vals = [float(w) for w in values]
    if len(pts) != len(vals) or not pts:
        raise ParameterRegionError("points and values must be equal-length, nonempty")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ParameterRegionError("points must be strictly increasing")
    if not (0.0 < pts[0] and abs(pts[-1] - 1.0) < 1e-12):
        raise ParameterRegionError("points must lie in (0, 1] and end at 1")
    ut, vt = r.u_t, r.v_t
    w = ut + vt

    nodes = [0.0] + vals
    times = [0.0] + pts
    dxs = np.diff(times)
    b_max = min(0.0, min(nodes))
    span = max(nodes) - min(nodes)
    dmax = float(np.max(dxs))
    reach = span + 7.0 * math.sqrt(dmax) + 2.0
    if w > 0:
        reach += 40.0 / (2.0 * w)
    else:
        reach += 7.0 * math.sqrt(dmax) + abs(w) * dmax + 10.0
    b_lo = b_max - reach

    def chain(bb):
        bb = np.asarray(bb, dtype=float)
        prod = np.ones_like(bb)
        for j in range(len(dxs)):
            prod = prod * _absorbed_kernel(nodes[j + 1], nodes[j], bb, dxs[j])
        return prod

    def chain_db(bb):
        """-d/db of the kernel product (analytic, product rule)."""
        bb = np.asarray(bb, dtype=float)
        kernels = []
        dkernels = []
        for j in range(len(dxs)):
            a_val, b_val, dx = nodes[j + 1], nodes[j], dxs[j]
            kernels.append(_absorbed_kernel(np.asarray(a_val), np.asarray(b_val), bb, dx))
            q = a_val + b_val - 2.0 * bb
            dk = (4.0 * q / dx) * np.exp(-(q**2) / dx) / np.sqrt(math.pi * dx)
            dk = np.where((a_val > bb) & (b_val > bb), dk, 0.0)
            dkernels.append(dk)
        total = np.zeros_like(bb)
        for j in range(len(dxs)):
            term = dkernels[j]
            for l in range(len(dxs)):
                if l != j:
                    term = term * kernels[l]
            total = total + term
        return total

    endpoint_weight = math.exp(-2.0 * vt * vals[-1])
    if w > 0:
        f = lambda bb: 2.0 * w * np.exp(2.0 * w * np.asarray(bb)) * chain(bb)
    else:
        f = lambda bb: np.exp(2.0 * w * np.asarray(bb)) * chain_db(bb)
    res = quadrature.integrate_adaptive(f, b_lo, b_max, tol=1e-12)
    return endpoint_weight * res.value / fp_norm(r)


def ew_mean_profile(r: RescaledParams, x_t) -> np.ndarray | float:
    """Small-size limit mean profile: u_t x - (u_t + v_t) x^2 / 2 on [0, 1]."""
    x = np.asarray(x_t, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ParameterRegionError("x_t must lie in [0, 1]")
    out = r.u_t * x - 0.5 * (r.u_t + r.v_t) * x * x
    if np.ndim(x_t) == 0:
        return float(out)
    return out
