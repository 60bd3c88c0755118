"""Exception types shared across the package.

The CLI maps these onto exit codes: parameter/region problems exit with 2,
statistical degeneracy with 3, quadrature non-convergence with 4.
"""


class KpzstatError(Exception):
    """Base class for package errors."""


class ParameterRegionError(KpzstatError, ValueError):
    """Parameters outside the validity region of a formula or sampler."""


class NoClosedFormError(ParameterRegionError):
    """No closed form is available for the requested parameters.

    Callers are expected to fall back to Monte Carlo.
    """


class UnsupportedDepthError(ParameterRegionError):
    """Requested multipoint depth m exceeds the supported maximum."""


class DegenerateWeightsError(KpzstatError, RuntimeError):
    """Importance weights collapsed (effective sample size too small)."""


class QuadratureError(KpzstatError, RuntimeError):
    """Quadrature failed to converge within its evaluation budget."""
