"""Prediction intervals from past forecast errors, with cross-horizon coherence
and proper-scoring-rule evaluation."""

from intervalcast.domain import (
    G7,
    VARIABLES,
    Horizon,
    ReleaseDate,
    Season,
    TargetId,
    horizon_of,
)
from intervalcast.quantile import QuantileMethod, empirical_quantile
from intervalcast.errorsets import ErrorMethod, ErrorSet, build_error_set, forecast_error
from intervalcast.intervals import (
    IntervalGrid,
    IntervalOffsets,
    PredictionInterval,
    enforce_horizon_monotonicity,
    interval_absolute,
    interval_directional,
)
from intervalcast.scoring import (
    ScoreDecomposition,
    WisWeights,
    coverage_rate,
    interval_score,
    weighted_interval_score,
)

__all__ = [
    "G7",
    "VARIABLES",
    "Horizon",
    "ReleaseDate",
    "Season",
    "TargetId",
    "horizon_of",
    "QuantileMethod",
    "empirical_quantile",
    "ErrorMethod",
    "ErrorSet",
    "build_error_set",
    "forecast_error",
    "IntervalGrid",
    "IntervalOffsets",
    "PredictionInterval",
    "enforce_horizon_monotonicity",
    "interval_absolute",
    "interval_directional",
    "ScoreDecomposition",
    "WisWeights",
    "coverage_rate",
    "interval_score",
    "weighted_interval_score",
]
