"""Prediction intervals from error quantiles, and the cross-horizon
pool-adjacent-violators correction.

Interval endpoints are the point forecast plus level-dependent offsets taken
from the empirical distribution of past errors. Across the four horizons the
offsets must widen (weakly) with time to target; adjacent horizons violating
that order are pooled and averaged, jointly at every confidence level, so no
quantile crossing is introduced.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional

from intervalcast.domain import HORIZONS, Horizon, ReleaseDate, TargetId
from intervalcast.errorsets import ErrorMethod, ErrorSet
from intervalcast.quantile import QuantileMethod, empirical_quantile


class ErrorMethodMismatch(ValueError):
    pass


@dataclass(frozen=True)
class IntervalOffsets:
    """Signed offsets added to the point forecast for one confidence level."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError(f"lower offset {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class PredictionInterval:
    level: float
    lower: float
    upper: float
    center: float
    degenerate: bool = False
    excludes_center: bool = False

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError(f"inverted interval [{self.lower}, {self.upper}]")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, outcome: float) -> bool:
        return self.lower <= outcome <= self.upper


def offsets_absolute(
    errs: ErrorSet, tau: float, method: QuantileMethod = QuantileMethod.LINEAR
) -> IntervalOffsets:
    """Symmetric offsets +-q_tau of the absolute errors."""
    if errs.method is not ErrorMethod.ABSOLUTE:
        raise ErrorMethodMismatch("error-method mismatch: absolute error set required")
    q = empirical_quantile(errs.errors, tau, method)
    return IntervalOffsets(lower=-q, upper=q)


def offsets_directional(
    errs: ErrorSet, tau: float, method: QuantileMethod = QuantileMethod.LINEAR
) -> IntervalOffsets:
    """Asymmetric offsets from the (1-tau)/2 and (1+tau)/2 error quantiles."""
    if errs.method is not ErrorMethod.DIRECTIONAL:
        raise ErrorMethodMismatch("error-method mismatch: directional error set required")
    lo = empirical_quantile(errs.errors, (1.0 - tau) / 2.0, method)
    up = empirical_quantile(errs.errors, (1.0 + tau) / 2.0, method)
    return IntervalOffsets(lower=lo, upper=up)


def offsets_for(
    errs: ErrorSet, tau: float, method: QuantileMethod = QuantileMethod.LINEAR
) -> IntervalOffsets:
    if errs.method is ErrorMethod.ABSOLUTE:
        return offsets_absolute(errs, tau, method)
    return offsets_directional(errs, tau, method)


def interval_from_offsets(point: float, tau: float, offs: IntervalOffsets) -> PredictionInterval:
    lower = point + offs.lower
    upper = point + offs.upper
    return PredictionInterval(
        level=tau,
        lower=lower,
        upper=upper,
        center=point,
        degenerate=lower == upper,
        excludes_center=not (lower <= point <= upper),
    )


def interval_absolute(
    point: float,
    errs: ErrorSet,
    tau: float,
    method: QuantileMethod = QuantileMethod.LINEAR,
) -> PredictionInterval:
    """Symmetric interval point -+ q_tau(|errors|)."""
    return interval_from_offsets(point, tau, offsets_absolute(errs, tau, method))


def interval_directional(
    point: float,
    errs: ErrorSet,
    tau: float,
    method: QuantileMethod = QuantileMethod.LINEAR,
) -> PredictionInterval:
    """Asymmetric interval from signed-error quantiles; may exclude the point
    forecast, in which case ``excludes_center`` is set."""
    return interval_from_offsets(point, tau, offsets_directional(errs, tau, method))


@dataclass(frozen=True)
class GridCell:
    """One horizon of an interval grid: the point forecast and its offsets."""

    point: float
    target_year: int
    forecast_origin: ReleaseDate
    offsets: Mapping[float, IntervalOffsets]
    source_years: tuple[int, ...] = ()
    skipped_years: tuple[int, ...] = ()

    def interval(self, tau: float) -> PredictionInterval:
        return interval_from_offsets(self.point, tau, self.offsets[tau])


@dataclass(frozen=True)
class IntervalGrid:
    """Interval offsets for (a subset of) the four horizons at one origin.

    ``blocks`` records the pooled-block sizes after the monotonicity
    correction (None before correction).
    """

    target: TargetId
    origin: ReleaseDate
    cells: Mapping[Horizon, GridCell]
    blocks: Optional[tuple[int, ...]] = None

    @property
    def horizons(self) -> tuple[Horizon, ...]:
        return tuple(h for h in HORIZONS if h in self.cells)

    @property
    def levels(self) -> tuple[float, ...]:
        first = self.cells[self.horizons[0]]
        return tuple(sorted(first.offsets))


def _is_symmetric(columns: dict[float, tuple[list[float], list[float]]]) -> bool:
    return all(
        lo == -up
        for lows, ups in columns.values()
        for lo, up in zip(lows, ups)
    )


def _violates(
    columns: dict[float, tuple[list[float], list[float]]],
    blocks: list[list[int]],
    r: int,
    symmetric: bool,
) -> bool:
    """Whether adjacent blocks r, r+1 break the horizon ordering at any level."""

    def block_mean(vals: list[float], members: list[int]) -> float:
        return sum(vals[i] for i in members) / len(members)

    for lows, ups in columns.values():
        if block_mean(ups, blocks[r]) > block_mean(ups, blocks[r + 1]):
            return True
        if not symmetric and block_mean(lows, blocks[r]) < block_mean(lows, blocks[r + 1]):
            return True
    return False


def _apply_blocks(
    columns: dict[float, tuple[list[float], list[float]]], blocks: list[list[int]]
) -> dict[float, tuple[list[float], list[float]]]:
    out: dict[float, tuple[list[float], list[float]]] = {}
    for tau, (lows, ups) in columns.items():
        new_lo = list(lows)
        new_up = list(ups)
        for members in blocks:
            mlo = sum(lows[i] for i in members) / len(members)
            mup = sum(ups[i] for i in members) / len(members)
            for i in members:
                new_lo[i] = mlo
                new_up[i] = mup
        out[tau] = (new_lo, new_up)
    return out


def pool_adjacent_horizons(
    columns: Mapping[float, tuple[list[float], list[float]]],
) -> tuple[dict[float, tuple[list[float], list[float]]], tuple[int, ...]]:
    """Pool-adjacent-violators over horizon positions, jointly at all levels.

    ``columns`` maps each confidence level to (lower offsets, upper offsets)
    listed in horizon order. A violation at any level merges the two adjacent
    blocks at every level and on both sides; merged blocks take their
    size-weighted mean. Scanning restarts from the front after each merge.
    Returns the corrected columns and the final block sizes.
    """
    cols = {tau: (list(lo), list(up)) for tau, (lo, up) in columns.items()}
    n = len(next(iter(cols.values()))[0])
    for lows, ups in cols.values():
        if len(lows) != n or len(ups) != n:
            raise ValueError("all levels must cover the same horizons")
    symmetric = _is_symmetric(cols)
    blocks: list[list[int]] = [[i] for i in range(n)]
    merged = True
    while merged:
        merged = False
        for r in range(len(blocks) - 1):
            if _violates(cols, blocks, r, symmetric):
                blocks[r] = blocks[r] + blocks[r + 1]
                del blocks[r + 1]
                merged = True
                break
    corrected = _apply_blocks(cols, blocks)
    return corrected, tuple(len(b) for b in blocks)


def pool_adjacent_horizons_stack(
    columns: Mapping[float, tuple[list[float], list[float]]],
) -> tuple[dict[float, tuple[list[float], list[float]]], tuple[int, ...]]:
    """Stack formulation of the same correction; used to cross-check the
    rescanning form (both reach the same fixpoint)."""
    cols = {tau: (list(lo), list(up)) for tau, (lo, up) in columns.items()}
    n = len(next(iter(cols.values()))[0])
    symmetric = _is_symmetric(cols)
    stack: list[list[int]] = []
    for i in range(n):
        stack.append([i])
        while len(stack) >= 2:
            blocks = stack[-2:]
            if _violates(cols, blocks, 0, symmetric):
                top = stack.pop()
                stack[-1] = stack[-1] + top
            else:
                break
    corrected = _apply_blocks(cols, stack)
    return corrected, tuple(len(b) for b in stack)


def enforce_horizon_monotonicity(grid: IntervalGrid) -> IntervalGrid:
    """Correct an interval grid so offsets widen weakly with the horizon.

    Point forecasts are untouched; only the offsets move. Idempotent, and a
    no-op on already-monotone grids.
    """
    horizons = grid.horizons
    if len(horizons) <= 1:
        return replace(grid, blocks=tuple([1] * len(horizons)))
    levels = grid.levels
    columns = {
        tau: (
            [grid.cells[h].offsets[tau].lower for h in horizons],
            [grid.cells[h].offsets[tau].upper for h in horizons],
        )
        for tau in levels
    }
    corrected, blocks = pool_adjacent_horizons(columns)
    new_cells = {}
    for idx, h in enumerate(horizons):
        cell = grid.cells[h]
        new_offsets = {
            tau: IntervalOffsets(corrected[tau][0][idx], corrected[tau][1][idx])
            for tau in levels
        }
        new_cells[h] = replace(cell, offsets=new_offsets)
    return IntervalGrid(target=grid.target, origin=grid.origin, cells=new_cells, blocks=blocks)
