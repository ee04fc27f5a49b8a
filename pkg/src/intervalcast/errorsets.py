"""Rolling-window sets of past forecast errors.

An error set collects the R most recent forecast errors at one horizon,
strictly before an anchor target year, using only realizations observable at
the forecast origin. When the directly preceding year is not yet complete, the
window shifts back so the set always holds exactly R errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from intervalcast.domain import Horizon, ReleaseDate, TargetId

# Realization selector: value of (target, year) observable at the given
# release date, or None if no admissible vintage exists yet.
TruthSelector = Callable[[TargetId, int, ReleaseDate], Optional[float]]

# Forecast lookup: point forecast for (target, origin, target-year), or None.
ForecastLookup = Callable[[TargetId, ReleaseDate, int], Optional[float]]


class InsufficientHistoryError(ValueError):
    """Fewer eligible past years than the requested window length."""

    def __init__(self, message: str, found: int, required: int):
        super().__init__(message)
        self.found = found
        self.required = required


class ErrorMethod(Enum):
    ABSOLUTE = "absolute"
    DIRECTIONAL = "directional"

    @classmethod
    def parse(cls, token: str) -> "ErrorMethod":
        token = token.strip().lower()
        for m in cls:
            if token == m.value:
                return m
        raise ValueError(f"unknown error method {token!r}")


def forecast_error(realized: float, forecast: float, method: ErrorMethod) -> float:
    """Forecast error: |realized - forecast| or the signed difference."""
    if not (math.isfinite(realized) and math.isfinite(forecast)):
        raise ValueError("invalid observation: realized and forecast must be finite")
    diff = realized - forecast
    return abs(diff) if method is ErrorMethod.ABSOLUTE else diff


@dataclass(frozen=True)
class ErrorSet:
    """The R past errors for one (target, horizon, anchor-year) cell.

    ``source_years`` lists the target years contributing each error, newest
    first; ``skipped_years`` records otherwise-eligible years that lacked a
    forecast or realization and were substituted by older years.
    """

    target: TargetId
    horizon: Horizon
    anchor_year: int
    method: ErrorMethod
    errors: tuple[float, ...]
    source_years: tuple[int, ...]
    skipped_years: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.errors) != len(self.source_years):
            raise ValueError("errors and source_years lengths differ")
        if len(set(self.source_years)) != len(self.source_years):
            raise ValueError("source_years must be pairwise distinct")
        if any(y >= self.anchor_year for y in self.source_years):
            raise ValueError("source years must precede the anchor year")
        if self.method is ErrorMethod.ABSOLUTE and any(e < 0 for e in self.errors):
            raise ValueError("absolute error sets must be nonnegative")

    def __len__(self) -> int:
        return len(self.errors)


def build_error_set(
    forecasts: ForecastLookup,
    truths: TruthSelector,
    target: TargetId,
    horizon: Horizon,
    anchor_year: int,
    origin: ReleaseDate,
    window: int,
    method: ErrorMethod = ErrorMethod.ABSOLUTE,
    max_lookback: int = 200,
) -> ErrorSet:
    """Collect the ``window`` most recent eligible errors before ``anchor_year``.

    A year is eligible when a forecast at ``horizon`` exists for it and its
    realization is observable at ``origin``. Ineligible years inside the
    window are substituted by the next older eligible year and recorded in
    ``skipped_years``.
    """
    if window < 1:
        raise ValueError("window length must be positive")
    errors: list[float] = []
    source_years: list[int] = []
    skipped: list[int] = []
    year = min(anchor_year, origin.year + 1) - 1
    floor = year - max_lookback
    while len(errors) < window and year > floor:
        realized = truths(target, year, origin)
        forecast = None
        if realized is not None:
            forecast = forecasts(target, horizon.origin_for(year), year)
        if realized is None or forecast is None:
            # Only count as a substitution once the window has plausibly
            # started, i.e. the year is a genuine gap rather than pre-history.
            skipped.append(year)
        else:
            errors.append(forecast_error(realized, forecast, method))
            source_years.append(year)
        year -= 1
    if len(errors) < window:
        raise InsufficientHistoryError(
            f"insufficient history for {target} {horizon.label} anchor {anchor_year}: "
            f"found {len(errors)} of {window} eligible years",
            found=len(errors),
            required=window,
        )
    oldest = source_years[-1]
    return ErrorSet(
        target=target,
        horizon=horizon,
        anchor_year=anchor_year,
        method=method,
        errors=tuple(errors),
        source_years=tuple(source_years),
        skipped_years=tuple(y for y in skipped if y > oldest),
    )
