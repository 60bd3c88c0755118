"""Stationary measure of the KPZ equation on an interval.

A library and CLI for the exactly solvable stationary state on [0, L]:
closed-form observables of the Brownian-plus-weighted-path description,
importance-sampling and path-space Markov chain samplers, spectral
Laplace-transform quadrature, and a cross-validation battery tying the
analytic and Monte Carlo routes together.
"""

from .analytic import ModelParams, RescaledParams
from .quadrature import LaplaceQuery, QuadResult
from .paths import Path, WeightedEnsemble
from .sampler import EstimateReport

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "RescaledParams",
    "LaplaceQuery",
    "QuadResult",
    "Path",
    "WeightedEnsemble",
    "EstimateReport",
    "__version__",
]
