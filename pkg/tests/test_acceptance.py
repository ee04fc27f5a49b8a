"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v tests/test_acceptance.py -s`` to see the per-criterion
lines. Criterion 7 (reproduction of published point values) needs the real
historical forecast panel and is skipped unless the environment variable
``WEO_PANEL_CSV`` points at it.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from intervalcast.benchmark import aggregate_annual, fit_ar1
from intervalcast.domain import HORIZONS, ReleaseDate, Season, TargetId
from intervalcast.errorsets import ErrorMethod
from intervalcast.intervals import pool_adjacent_horizons
from intervalcast.pipeline import RunConfig, run_backtest, run_tuning, write_backtest_outputs
from intervalcast.quantile import QuantileMethod, empirical_quantile
from intervalcast.scoring import interval_score

import conftest
from conftest import make_panel
from test_benchmark import ar1_values, series_from_values
from test_quantile import ecdf_inverse_oracle


def _emit(line):
    # Printed immediately (visible with -s) and replayed in the terminal
    # summary after capture ends, so the lines always reach the report.
    print(line, flush=True)
    conftest.acceptance_lines.append(line)


def _report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    _emit(f"{status} criterion {number}: {name}{suffix}")
    assert ok, f"criterion {number} ({name}) failed{suffix}"


def test_criterion_1_quantile_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    taus = [0.05 * k for k in range(1, 20)]
    ok = True
    for n in range(1, 21):
        for _ in range(5):
            samples = list(rng.normal(size=n))
            xs = sorted(samples)
            for tau in taus:
                got = empirical_quantile(samples, tau, QuantileMethod.INVERSE_ECDF)
                if got != ecdf_inverse_oracle(samples, tau):
                    ok = False
                # Hand fractional-rank interpolation for the linear method.
                h = 1 + (n - 1) * tau
                k = min(int(math.floor(h)), n)
                frac = h - k
                expected = xs[k - 1] if k == n else xs[k - 1] + frac * (xs[k] - xs[k - 1])
                got7 = empirical_quantile(samples, tau, QuantileMethod.LINEAR)
                if abs(got7 - expected) > 1e-12:
                    ok = False
    elapsed = time.perf_counter() - start
    _report(1, "quantile oracle equivalence", ok and elapsed < 1.0, f"{elapsed:.2f}s")


def test_criterion_2_pava_property_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    levels = (0.5, 0.8)
    failures = []
    for trial in range(10_000):
        symmetric = trial % 2 == 0
        cols = {tau: ([], []) for tau in levels}
        for _ in range(4):
            if symmetric:
                qs = np.sort(np.abs(rng.normal(size=2)))
                for tau, q in zip(levels, qs):
                    cols[tau][0].append(-float(q))
                    cols[tau][1].append(float(q))
            else:
                cuts = np.sort(rng.normal(size=4))
                cols[0.5][0].append(float(cuts[1]))
                cols[0.5][1].append(float(cuts[2]))
                cols[0.8][0].append(float(cuts[0]))
                cols[0.8][1].append(float(cuts[3]))
        corrected, blocks = pool_adjacent_horizons(cols)
        for tau in levels:
            lo, up = corrected[tau]
            # Nondecreasing width in horizon, at every level.
            if any(a > b + 1e-12 for a, b in zip(up, up[1:])):
                failures.append((trial, "upper not monotone"))
            if any(a < b - 1e-12 for a, b in zip(lo, lo[1:])):
                failures.append((trial, "lower not monotone"))
        # No quantile crossing introduced.
        for i in range(4):
            if corrected[0.5][1][i] > corrected[0.8][1][i] + 1e-12:
                failures.append((trial, "upper crossing"))
            if corrected[0.5][0][i] < corrected[0.8][0][i] - 1e-12:
                failures.append((trial, "lower crossing"))
        # Block means preserved.
        startidx = 0
        for size in blocks:
            idx = slice(startidx, startidx + size)
            for tau in levels:
                for side in (0, 1):
                    if abs(
                        float(np.mean(cols[tau][side][idx]))
                        - float(np.mean(corrected[tau][side][idx]))
                    ) > 1e-9:
                        failures.append((trial, "block mean"))
            startidx += size
        # Symmetric inputs stay symmetric.
        if symmetric:
            for tau in levels:
                lo, up = corrected[tau]
                if any(abs(a + b) > 1e-12 for a, b in zip(lo, up)):
                    failures.append((trial, "symmetry broken"))
        # Idempotence.
        again, _ = pool_adjacent_horizons(corrected)
        for tau in levels:
            for side in (0, 1):
                if any(
                    abs(a - b) > 1e-12
                    for a, b in zip(again[tau][side], corrected[tau][side])
                ):
                    failures.append((trial, "not idempotent"))
    elapsed = time.perf_counter() - start
    _report(
        2, "PAVA property suite",
        not failures and elapsed < 5.0,
        f"{elapsed:.2f}s" + (f", first failure {failures[0]}" if failures else ""),
    )


def _exact_score_oracle(lower, upper, outcome, tau):
    """Eq.-style interval score evaluated in exact rational arithmetic on the
    floating-point inputs, rounded once at the end."""
    l, u, y, t = (Fraction(v) for v in (lower, upper, outcome, tau))
    total = u - l
    if y < l:
        total += 2 / (1 - t) * (l - y)
    if y > u:
        total += 2 / (1 - t) * (y - u)
    return float(total)


def test_criterion_3_interval_score_identities():
    rng = np.random.default_rng(303)
    ok = True
    # Hand examples: 12.0 and 8.0 up to one rounding of 2/(1 - tau); the
    # rational oracle pins down the exact floating-point value.
    hand1 = interval_score(1.0, 3.0, 0.0, 0.8).total
    hand2 = interval_score(1.0, 3.0, 4.5, 0.5).total
    if hand1 != _exact_score_oracle(1.0, 3.0, 0.0, 0.8) or abs(hand1 - 12.0) > 1e-12:
        ok = False
    if hand2 != _exact_score_oracle(1.0, 3.0, 4.5, 0.5) or hand2 != 8.0:
        ok = False
    for _ in range(10_000):
        l, u = sorted(rng.normal(scale=2, size=2))
        y = float(rng.normal(scale=3))
        tau = float(rng.uniform(0.05, 0.95))
        sc = interval_score(l, u, y, tau)
        if sc.total != sc.dispersion + sc.overprediction + sc.underprediction:
            ok = False
        c = float(rng.normal(scale=5))
        s = float(rng.uniform(0.1, 10))
        if abs(interval_score(l + c, u + c, y + c, tau).total - sc.total) > 1e-12 * max(
            1.0, abs(sc.total)
        ):
            ok = False
        if abs(interval_score(s * l, s * u, s * y, tau).total - s * sc.total) > 1e-12 * max(
            1.0, abs(s * sc.total)
        ):
            ok = False
    _report(3, "interval-score identities", ok, f"hand examples {hand1}, {hand2}")


def test_criterion_4_propriety_sanity():
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    outcomes = rng.standard_normal(100_000)
    tau = 0.8
    q = 1.2815515655446004  # standard-normal 0.9 quantile
    penalty = 2.0 / (1.0 - tau)

    def mean_scores(lower, upper):
        width = upper - lower
        over = penalty * np.clip(lower - outcomes, 0.0, None)
        under = penalty * np.clip(outcomes - upper, 0.0, None)
        return width + over + under

    truth_scores = mean_scores(-q, q)
    candidates = [(-q + c, q + c) for c in np.linspace(-1.0, 1.0, 21) if c != 0.0]
    candidates += [(-q * s, q * s) for s in np.linspace(0.5, 1.5, 21) if s != 1.0]
    candidates.append((-q * 1.1 + 0.2, q * 1.1 + 0.2))
    assert len(candidates) == 41
    worst_margin = np.inf
    ok = True
    for lower, upper in candidates:
        diff = mean_scores(lower, upper) - truth_scores  # paired comparison
        margin = float(np.mean(diff) + 2.0 * np.std(diff) / math.sqrt(len(diff)))
        worst_margin = min(worst_margin, margin)
        if margin < 0.0:
            ok = False
    elapsed = time.perf_counter() - start
    _report(
        4, "propriety sanity", ok and elapsed < 10.0,
        f"worst margin {worst_margin:.4g}, {elapsed:.2f}s",
    )


def test_criterion_5_synthetic_calibration():
    start = time.perf_counter()
    countries = tuple(chr(ord("A") + i) * 3 for i in range(7))
    panel = make_panel(
        countries=countries, variables=("gdp", "cpi"),
        first_year=1940, last_year=2023, seed=55,
    )
    config = RunConfig(window=49, train_span=(1940, 1994), holdout_span=(1995, 2023))
    result = run_backtest(config, panel)
    per_level = {tau: [] for tau in config.levels}
    contains_point = True
    for sf in result.scored:
        for tau in config.levels:
            per_level[tau].append(sf.intervals[tau].contains(sf.outcome))
            if not sf.intervals[tau].contains(sf.intervals[tau].center):
                contains_point = False
    counts = {tau: len(v) for tau, v in per_level.items()}
    coverage = {tau: float(np.mean(v)) for tau, v in per_level.items()}
    lengths_ok = all(
        all(
            grid.cells[a].interval(tau).length <= grid.cells[b].interval(tau).length + 1e-12
            for a, b in zip(grid.horizons, grid.horizons[1:])
            for tau in config.levels
        )
        for grid in result.grids
    )
    elapsed = time.perf_counter() - start
    ok = (
        all(n >= 1000 for n in counts.values())
        and abs(coverage[0.5] - 0.5) < 0.05
        and abs(coverage[0.8] - 0.8) < 0.05
        and contains_point
        and lengths_ok
        and elapsed < 30.0
    )
    _report(
        5, "synthetic calibration",
        ok,
        f"n={counts[0.5]}, coverage 0.5: {coverage[0.5]:.3f}, "
        f"0.8: {coverage[0.8]:.3f}, {elapsed:.1f}s",
    )


def test_criterion_6_ar_benchmark():
    start = time.perf_counter()
    series = series_from_values(ar1_values(0.7, 0.6, 5.0, 60))
    fit = fit_ar1(series, (2014, 4))
    exact_fit = abs(fit.intercept - 0.7) < 1e-9 and abs(fit.slope - 0.6) < 1e-9
    constant_identity = all(
        aggregate_annual([g] * 7) == 4.0 * g for g in (0.25, 1.0, 2.0)
    )
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(500):
        quarterly_pct = rng.uniform(-2.0, 2.0, size=12)
        levels = [100.0]
        for g in quarterly_pct:
            levels.append(levels[-1] * math.exp(g / 100.0))
        # Exact oracle in the same (log-growth) units as the quarterly data:
        # annual growth as the log ratio of annual average levels.
        exact = 100.0 * math.log((sum(levels[4:8]) / 4) / (sum(levels[0:4]) / 4))
        log_growth = [
            100.0 * math.log(levels[i + 1] / levels[i]) for i in range(7)
        ]
        worst = max(worst, abs(aggregate_annual(log_growth) - exact))
    elapsed = time.perf_counter() - start
    ok = exact_fit and constant_identity and worst < 0.05 and elapsed < 5.0
    _report(
        6, "AR benchmark",
        ok, f"worst aggregation error {worst:.4f}pp, {elapsed:.2f}s",
    )


def test_criterion_7_published_value_reproduction():
    path = os.environ.get("WEO_PANEL_CSV")
    if not path:
        _emit(
            "SKIP criterion 7: published-value reproduction "
            "(set WEO_PANEL_CSV to the historical panel to enable)"
        )
        pytest.skip("real historical panel not available in this environment")
    from intervalcast.ingest import parse_forecast_panel

    with open(path, encoding="utf-8", newline="") as fh:
        panel = parse_forecast_panel(fh, source=path)
    config = RunConfig(train_span=(1990, 2012), holdout_span=(2013, 2023))
    report = run_tuning(
        config, panel,
        [
            (11, ErrorMethod.ABSOLUTE, QuantileMethod.LINEAR),
            (11, ErrorMethod.DIRECTIONAL, QuantileMethod.LINEAR),
        ],
    )
    expected = {
        "absolute": (0.23, {0.5: 0.49, 0.8: 0.76}),
        "directional": (0.24, {0.5: 0.43, 0.8: 0.65}),
    }
    ok = True
    details = []
    for method, (wis, coverages) in expected.items():
        row = report.cell(11, method, "type7", "gdp", "fall-current")
        if row is None or row.mean_wis is None:
            ok = False
            continue
        if abs(row.mean_wis - wis) > 0.01:
            ok = False
        for tau, cvg in coverages.items():
            if abs(row.coverage[tau] - cvg) > 0.02:
                ok = False
        details.append(f"{method}: wis {row.mean_wis:.3f}, coverage {row.coverage}")
    _report(7, "published-value reproduction", ok, "; ".join(details))


def test_criterion_8_determinism(tmp_path):
    panel = make_panel(countries=("AAA", "BBB", "CCC"), seed=8)
    config = RunConfig()
    paths_a = write_backtest_outputs(run_backtest(config, panel), str(tmp_path / "a"))
    paths_b = write_backtest_outputs(run_backtest(config, panel), str(tmp_path / "b"))
    ok = True
    for pa, pb in zip(paths_a, paths_b):
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            if fa.read() != fb.read():
                ok = False
    _report(8, "determinism", ok, f"{len(paths_a)} report files byte-compared")
