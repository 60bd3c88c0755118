"""Discretized paths: generators, functionals, limit processes, serialization.

All processes live on a uniform grid x_i = i L / n with values[0] = 0.
Generators are exact in law at the grid points (Gaussian increments,
bridge/excursion/meander constructions, half-line limit processes); the
only discretization enters through trapezoid rules for the exponential
functionals and through grid minima, for which an exact-in-law bridge
refinement is provided.

Public single-path functions wrap vectorized batch kernels (suffix
``_batch``) that operate on value matrices of shape (count, n + 1).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ParameterRegionError

__all__ = [
    "Path",
    "WeightedEnsemble",
    "sample_brownian",
    "sample_bridge",
    "sample_excursion",
    "sample_meander",
    "exp_functional",
    "log_exp_functional",
    "energy",
    "energy_symmetric",
    "fp_log_weight",
    "fp_log_weight_symmetric",
    "t_transform",
    "refined_min",
    "refined_running_min",
    "sample_hy_max_current",
    "sample_hy_high_density",
    "sample_fp_halfline",
    "sample_ew_limit",
    "path_to_csv",
    "path_from_csv",
    "write_ensemble",
    "read_ensemble",
]

ENSEMBLE_MAGIC = b"KPZE"
ENSEMBLE_VERSION = 1


@dataclass
class Path:
    """One discretized path on the uniform grid over [0, length_L]."""

    length_L: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 3:
            raise ParameterRegionError("a path needs at least 3 grid values (n_steps >= 2)")
        if self.values[0] != 0.0:
            raise ParameterRegionError("paths start at 0")
        if not self.length_L > 0:
            raise ParameterRegionError("length_L must be positive")

    @property
    def n_steps(self) -> int:
        return self.values.size - 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.length_L, self.values.size)


@dataclass
class WeightedEnsemble:
    """A batch of paths with log-weights (importance sampling output)."""

    length_L: float
    values: np.ndarray  # (count, n + 1)
    log_weights: np.ndarray
    params: object = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.log_weights.size:
            raise ParameterRegionError("values and log_weights must have matching count")
        if not np.all(np.isfinite(self.log_weights)):
            raise ParameterRegionError("log_weights must be finite")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def paths(self) -> list[Path]:
        return [Path(self.length_L, row) for row in self.values]

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.length_L, self.values.shape[1])


# ---------------------------------------------------------------------------
# Gaussian-process generators
# ---------------------------------------------------------------------------


def brownian_batch(L: float, n: int, count: int, drift: float, diffusion: float, rng) -> np.ndarray:
    if n < 2:
        raise ParameterRegionError("n_steps must be >= 2")
    if diffusion <= 0:
        raise ParameterRegionError("diffusion must be positive")
    dt = L / n
    incs = rng.normal(loc=drift * dt, scale=np.sqrt(diffusion * dt), size=(count, n))
    out = np.empty((count, n + 1))
    out[:, 0] = 0.0
    np.cumsum(incs, axis=1, out=out[:, 1:])
    return out


def sample_brownian(L: float, n: int, drift: float, diffusion: float, rng) -> Path:
    """Brownian path, independent N(drift dt, diffusion dt) increments."""
    return Path(L, brownian_batch(L, n, 1, drift, diffusion, rng)[0])


def bridge_batch(L: float, n: int, count: int, endpoint: float, rng) -> np.ndarray:
    w = brownian_batch(L, n, count, 0.0, 1.0, rng)
    x = np.linspace(0.0, L, n + 1)
    return w - (x / L) * w[:, -1:] + (x / L) * endpoint


def sample_bridge(L: float, n: int, endpoint: float, rng) -> Path:
    """Standard Brownian bridge pinned to the given endpoint."""
    return Path(L, bridge_batch(L, n, 1, endpoint, rng)[0])


def excursion_batch(n: int, count: int, rng) -> np.ndarray:
    """Standard Brownian excursions on [0, 1] via the cyclic shift at the argmin."""
    b = bridge_batch(1.0, n, count, 0.0, rng)
    interior = b[:, :-1]  # row-periodic representative (value at 1 equals value at 0)
    k = np.argmin(interior, axis=1)
    idx = (np.arange(n)[None, :] + k[:, None]) % n
    shifted = np.take_along_axis(interior, idx, axis=1)
    out = np.empty((count, n + 1))
    out[:, :-1] = shifted - interior[np.arange(count), k][:, None]
    out[:, -1] = 0.0
    return out


def sample_excursion(n: int, rng) -> Path:
    """Standard Brownian excursion on [0, 1]: bridge conditioned positive."""
    return Path(1.0, excursion_batch(n, 1, rng)[0])


def meander_batch(n: int, count: int, rng) -> np.ndarray:
    """Standard Brownian meanders on [0, 1].

    Drawn as a three-dimensional Bessel bridge from 0 to a Rayleigh endpoint:
    the meander conditioned on its endpoint r is the norm of a 3D Brownian
    bridge from the origin to (r, 0, 0), and the endpoint itself has the
    Rayleigh law P(M(1) > a) = exp(-a^2 / 2).  Exact in law at every grid
    point, no interpolation.
    """
    r = rng.rayleigh(1.0, size=(count, 1))
    x = np.linspace(0.0, 1.0, n + 1)
    b1 = bridge_batch(1.0, n, count, 0.0, rng) + r * x
    b2 = bridge_batch(1.0, n, count, 0.0, rng)
    b3 = bridge_batch(1.0, n, count, 0.0, rng)
    return np.sqrt(b1**2 + b2**2 + b3**2)


def sample_meander(n: int, rng) -> Path:
    """Standard Brownian meander on [0, 1]: positive up to time 1."""
    return Path(1.0, meander_batch(n, 1, rng)[0])


# ---------------------------------------------------------------------------
# Path functionals
# ---------------------------------------------------------------------------


def _trap_weights(L: float, m: int) -> np.ndarray:
    dt = L / (m - 1)
    w = np.full(m, dt)
    w[0] = w[-1] = dt / 2.0
    return w


def log_exp_functional(values: np.ndarray, L: float, drift_shift: float = 0.0) -> np.ndarray | float:
    """log of Z = int_0^L exp(-2 X(x) - 2 drift_shift x) dx by trapezoid.

    Evaluated with a log-sum-exp so it never overflows; exp of the result
    recovers the plain trapezoid value exactly when that value is finite.
    """
    vals = np.asarray(values, dtype=float)
    squeeze = vals.ndim == 1
    vals = np.atleast_2d(vals)
    m = vals.shape[1]
    x = np.linspace(0.0, L, m)
    logw = np.log(_trap_weights(L, m))
    expo = -2.0 * vals - 2.0 * drift_shift * x[None, :] + logw[None, :]
    out = logsumexp(expo, axis=1)
    return float(out[0]) if squeeze else out


def exp_functional(p: Path | np.ndarray, drift_shift: float = 0.0, L: float | None = None):
    """Z = int_0^L exp(-2 X - 2 drift_shift x) dx (trapezoid; overflow-guarded)."""
    if isinstance(p, Path):
        vals, length = p.values, p.length_L
    else:
        if L is None:
            raise ParameterRegionError("raw arrays need an explicit L")
        vals, length = np.asarray(p, dtype=float), L
    peak = np.max(-2.0 * vals)
    if peak > 300.0:
        return np.exp(log_exp_functional(vals, length, drift_shift))
    squeeze = vals.ndim == 1
    v2 = np.atleast_2d(vals)
    m = v2.shape[1]
    x = np.linspace(0.0, length, m)
    z = np.exp(-2.0 * v2 - 2.0 * drift_shift * x[None, :]) @ _trap_weights(length, m)
    return float(z[0]) if squeeze else z


def energy(p: Path, u: float, v: float) -> float:
    """Boundary-weight exponent: (u + v) log Z + 2 v X(L)."""
    return (u + v) * log_exp_functional(p.values, p.length_L) + 2.0 * v * p.values[-1]


def energy_symmetric(p: Path, u: float, v: float) -> float:
    """Same exponent in its space-reversal-symmetric two-logarithm form."""
    log_z = log_exp_functional(p.values, p.length_L)
    log_z_rev = log_exp_functional(p.values - p.values[-1], p.length_L)
    return u * log_z + v * log_z_rev


def fp_log_weight(values: np.ndarray, u_t: float, v_t: float, minima: np.ndarray | None = None):
    """Rescaled-measure log-weight 2 (u_t + v_t) min X - 2 v_t X(1).

    minima can carry bridge-refined continuum minima; defaults to the grid
    minimum of each row.
    """
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    mins = np.min(vals, axis=1) if minima is None else np.asarray(minima, dtype=float)
    out = 2.0 * (u_t + v_t) * mins - 2.0 * v_t * vals[:, -1]
    return float(out[0]) if np.asarray(values).ndim == 1 else out


def fp_log_weight_symmetric(values: np.ndarray, u_t: float, v_t: float, minima=None):
    """Equivalent form 2 u_t min X + 2 v_t (min X - X(1))."""
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    mins = np.min(vals, axis=1) if minima is None else np.asarray(minima, dtype=float)
    out = 2.0 * u_t * mins + 2.0 * v_t * (mins - vals[:, -1])
    return float(out[0]) if np.asarray(values).ndim == 1 else out


def t_transform(p: Path, z: float) -> Path:
    """Path map X -> X - log(1 + z int_0^t exp(2 X)); a one-parameter group.

    z = 0 returns the input values unchanged.  Raises when the logarithm
    argument crosses zero (possible for z < 0).
    """
    if z == 0.0:
        return Path(p.length_L, p.values.copy())
    vals = p.values
    dt = p.length_L / p.n_steps
    e2x = np.exp(2.0 * vals)
    running = np.concatenate([[0.0], np.cumsum(0.5 * dt * (e2x[:-1] + e2x[1:]))])
    arg = 1.0 + z * running
    if np.any(arg <= 0.0):
        raise ParameterRegionError("t_transform: 1 + z * integral crossed zero")
    return Path(p.length_L, vals - np.log(arg))


def running_exp_integral(values: np.ndarray, L: float, sign: float = -2.0, drift_shift: float = 0.0) -> np.ndarray:
    """Cumulative trapezoid of exp(sign * X - 2 drift_shift x) along the grid."""
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    m = vals.shape[1]
    dt = L / (m - 1)
    x = np.linspace(0.0, L, m)
    g = np.exp(sign * vals - 2.0 * drift_shift * x[None, :])
    steps = 0.5 * dt * (g[:, :-1] + g[:, 1:])
    out = np.zeros_like(vals)
    np.cumsum(steps, axis=1, out=out[:, 1:])
    return out


# ---------------------------------------------------------------------------
# Exact-in-law minima given the grid skeleton
# ---------------------------------------------------------------------------


def _step_minima(values: np.ndarray, L: float, diffusion: float, rng) -> np.ndarray:
    """Per-step continuum minima of the conditional bridges between grid values.

    For a Brownian bridge from a to b over time dt with infinitesimal
    variance ``diffusion``, the minimum has the law
    min = (a + b - sqrt((a - b)^2 - 2 diffusion dt log U)) / 2 with U
    uniform.  Jointly with the skeleton this reproduces the continuum
    minimum law exactly.
    """
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    count, m = vals.shape
    dt = L / (m - 1)
    a, b = vals[:, :-1], vals[:, 1:]
    u = rng.uniform(size=(count, m - 1))
    return 0.5 * (a + b - np.sqrt((a - b) ** 2 - 2.0 * diffusion * dt * np.log(u)))


def refined_min(values: np.ndarray, L: float, diffusion: float, rng) -> np.ndarray:
    """Continuum path minimum, exact in law given the grid skeleton."""
    return np.min(_step_minima(values, L, diffusion, rng), axis=1)


def refined_running_min(values: np.ndarray, L: float, diffusion: float, rng) -> np.ndarray:
    """Continuum running minimum at every grid point (column 0 is 0)."""
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    step_min = _step_minima(vals, L, diffusion, rng)
    out = np.empty_like(vals)
    out[:, 0] = vals[:, 0]
    np.minimum.accumulate(step_min, axis=1, out=step_min)
    out[:, 1:] = step_min
    return out


# ---------------------------------------------------------------------------
# Half-line and limit processes
# ---------------------------------------------------------------------------


def hy_max_current_batch(u: float, x_max: float, n: int, count: int, rng) -> np.ndarray:
    if u <= 0:
        raise ParameterRegionError("max-current region requires u > 0")
    b1 = brownian_batch(x_max, n, count, 0.0, 0.5, rng)
    b2 = brownian_batch(x_max, n, count, 0.0, 0.5, rng)
    gam = rng.gamma(u, size=(count, 1))
    return b1 + b2 + np.log1p(gam * running_exp_integral(b2, x_max))


def sample_hy_max_current(u: float, x_max: float, n: int, rng) -> Path:
    """Half-line stationary height in the repulsive-boundary region (u > 0)."""
    return Path(x_max, hy_max_current_batch(u, x_max, n, 1, rng)[0])


def hy_high_density_batch(u: float, v: float, x_max: float, n: int, count: int, rng) -> np.ndarray:
    if not (v <= 0 and u > v):
        raise ParameterRegionError("high-density region requires v <= 0 and u > v")
    x = np.linspace(0.0, x_max, n + 1)
    b1 = brownian_batch(x_max, n, count, 0.0, 0.5, rng)
    b2 = brownian_batch(x_max, n, count, 0.0, 0.5, rng)
    gam = rng.gamma(u - v, size=(count, 1))
    return b1 + b2 + v * x[None, :] + np.log1p(gam * running_exp_integral(b2, x_max, drift_shift=v))


def sample_hy_high_density(u: float, v: float, x_max: float, n: int, rng) -> Path:
    """Half-line stationary height with drift -v at infinity (v <= 0, u > v)."""
    return Path(x_max, hy_high_density_batch(u, v, x_max, n, 1, rng)[0])


def fp_halfline_batch(u_t: float, v_t: float, region: str, y_max: float, n: int, count: int, rng) -> np.ndarray:
    x = np.linspace(0.0, y_max, n + 1)
    if region == "low_density":
        if not (u_t <= 0 and u_t <= v_t):
            raise ParameterRegionError("low-density region requires u_t <= 0 and u_t <= v_t")
        return brownian_batch(y_max, n, count, u_t, 1.0, rng)
    b1 = brownian_batch(y_max, n, count, 0.0, 0.5, rng)
    b2 = brownian_batch(y_max, n, count, 0.0, 0.5, rng)
    # bridge-refined running minima keep the grid law exact (no O(sqrt(dt)) bias)
    if region == "max_current":
        if not (u_t > 0 and v_t > 0):
            raise ParameterRegionError("max-current region requires u_t, v_t > 0")
        expo = rng.exponential(1.0 / u_t, size=(count, 1))
        runmin = refined_running_min(b2, y_max, 0.5, rng)
        return b1 + b2 + np.maximum(0.0, -expo - 2.0 * runmin)
    if region == "high_density":
        if not (v_t < 0 and u_t > v_t):
            raise ParameterRegionError("high-density region requires v_t < 0 and u_t > v_t")
        expo = rng.exponential(1.0 / (u_t - v_t), size=(count, 1))
        drifted = b2 + v_t * x[None, :]
        runmin = refined_running_min(drifted, y_max, 0.5, rng)
        return b1 + drifted + np.maximum(0.0, -expo - 2.0 * runmin)
    raise ParameterRegionError(f"unknown region {region!r}")


def sample_fp_halfline(u_t: float, v_t: float, region: str, y_max: float, n: int, rng) -> Path:
    """Large-scale half-line limit process in the named region."""
    return Path(y_max, fp_halfline_batch(u_t, v_t, region, y_max, n, 1, rng)[0])


def ew_limit_batch(u_t: float, v_t: float, n: int, count: int, rng, height: bool = False) -> np.ndarray:
    x = np.linspace(0.0, 1.0, n + 1)
    parabola = u_t * x - 0.5 * (u_t + v_t) * x * x
    diffusion = 1.0 if height else 0.5
    noise = brownian_batch(1.0, n, count, 0.0, diffusion, rng)
    return parabola[None, :] + noise


def sample_ew_limit(u_t: float, v_t: float, n: int, rng, height: bool = False) -> Path:
    """Small-size limit: parabola plus Brownian noise on [0, 1].

    height=False gives the X-field (diffusion 1/2); height=True the full
    height field (diffusion 1).
    """
    return Path(1.0, ew_limit_batch(u_t, v_t, n, 1, rng, height=height)[0])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def path_to_csv(p: Path, fh) -> None:
    """Write (x, value) rows; plain two-column CSV with a header line."""
    fh.write("x,value\n")
    for x, val in zip(p.grid, p.values):
        fh.write(f"{x!r},{val!r}\n")


def path_from_csv(fh) -> Path:
    rows = [line.strip().split(",") for line in fh if line.strip()]
    if rows and rows[0][0] == "x":
        rows = rows[1:]
    x = np.array([float(r[0]) for r in rows])
    vals = np.array([float(r[1]) for r in rows])
    return Path(float(x[-1]), vals)


def write_ensemble(ens: WeightedEnsemble, fh, seed: int = 0) -> None:
    """Compact binary ensemble format, little-endian.

    Layout: magic "KPZE" (4 bytes), version uint16, pad uint16, L float64,
    n_steps uint32, count uint64, seed uint64, then count * (n_steps + 1)
    float64 path values in row-major order.  Log-weights are not stored;
    they belong to the JSON report that accompanies a run.
    """
    count, m = ens.values.shape
    header = struct.pack(
        "<4sHHdIQQ", ENSEMBLE_MAGIC, ENSEMBLE_VERSION, 0, float(ens.length_L), m - 1, count, seed
    )
    fh.write(header)
    fh.write(np.ascontiguousarray(ens.values, dtype="<f8").tobytes())


def read_ensemble(fh) -> tuple[WeightedEnsemble, int]:
    """Inverse of write_ensemble; returns (ensemble, seed). Weights are unit."""
    header = fh.read(struct.calcsize("<4sHHdIQQ"))
    magic, version, _pad, length, n_steps, count, seed = struct.unpack("<4sHHdIQQ", header)
    if magic != ENSEMBLE_MAGIC:
        raise ParameterRegionError("not an ensemble file (bad magic)")
    if version != ENSEMBLE_VERSION:
        raise ParameterRegionError(f"unsupported ensemble version {version}")
    data = np.frombuffer(fh.read(count * (n_steps + 1) * 8), dtype="<f8")
    values = data.reshape(count, n_steps + 1).astype(float)
    ens = WeightedEnsemble(length, values, np.zeros(count), params=None)
    return ens, seed
