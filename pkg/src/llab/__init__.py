"""Numerical laboratory for exponential sums over general point sequences,
generalized number systems, and zeta-function growth experiments."""

__version__ = "0.1.0"

from .core import (
    DeviationGrid,
    ExpSumResult,
    LinearMean,
    LogIntegralMean,
    MeanModel,
    Norm,
    PointSequence,
    ShiftedLogIntegralMean,
    TabulatedStepMean,
    deviation,
    exp_sum,
    log_integral,
    scan,
)

__all__ = [
    "DeviationGrid",
    "ExpSumResult",
    "LinearMean",
    "LogIntegralMean",
    "MeanModel",
    "Norm",
    "PointSequence",
    "ShiftedLogIntegralMean",
    "TabulatedStepMean",
    "deviation",
    "exp_sum",
    "log_integral",
    "scan",
    "__version__",
]
