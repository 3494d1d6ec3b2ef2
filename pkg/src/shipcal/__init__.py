"""Calibrated predictive distributions for integer-day delivery deviations."""

from .core import (DiscreteDistribution, EmpiricalPredictiveCDF,
                   MixtureDistribution, ProbabilityInterval, cdf_eval,
                   central_interval, quantile)
from .errors import DataFormatError, DomainError

__version__ = "0.1.0"

__all__ = [
    "DiscreteDistribution",
    "EmpiricalPredictiveCDF",
    "MixtureDistribution",
    "ProbabilityInterval",
    "cdf_eval",
    "central_interval",
    "quantile",
    "DataFormatError",
    "DomainError",
    "__version__",
]
