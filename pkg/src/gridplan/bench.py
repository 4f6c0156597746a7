"""Benchmark harness: single- and multi-target comparisons between the
plain and region-aided planners, CSV emission, and search-footprint dumps.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .actions import DEFAULT_SPEED_PROFILE, ActionSet, SpeedProfile
from .datagen import ScenarioSpec, build_scenario_full, inflate
from .grid import RegionMask, write_raster
from .multi import MultiPlanReport, TargetSamplerConfig, plan_all
from .region import NullSource, OracleSource, RegionSource
from .search import PlanResult, SearchConfig

BENCH_CSV = "bench.csv"
RATIO_CSV = "bench_ratio.csv"
BENCH_HEADER = ["targets", "source", "plan_ms", "predict_ms", "expanded", "success", "reps"]
RATIO_HEADER = ["targets", "plan_ms_null", "plan_ms_oracle", "ratio"]

DEFAULT_TARGET_COUNTS = (1, 3, 7, 10, 15, 20, 30, 40, 50)


class BenchError(RuntimeError):
    """Suite aborted; .rows carries the rows completed before the failure."""

    def __init__(self, message: str, rows: list["BenchRow"]):
        super().__init__(message)
        self.rows = rows


@dataclass(frozen=True)
class BenchSuite:
    scenarios: tuple[ScenarioSpec, ...]
    target_counts: tuple[int, ...] = DEFAULT_TARGET_COUNTS
    repetitions: int = 1
    sources: tuple[str, ...] = ("null", "oracle")

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        counts = tuple(self.target_counts)
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError("target_counts must be strictly increasing")
        for s in self.sources:
            if s != "null" and s != "oracle":
                raise ValueError(f"unknown source kind {s!r}")


@dataclass(frozen=True)
class BenchRow:
    targets: int
    source: str
    plan_ms: float  # mean over repetitions of the per-run total
    predict_ms: float
    expanded: float  # mean over repetitions of the per-run total
    success: int  # summed over repetitions
    reps: int


@dataclass(frozen=True)
class RatioRow:
    targets: int
    plan_ms_null: float
    plan_ms_oracle: float
    ratio: float


def _report_expanded(report: MultiPlanReport) -> int:
    return sum(o.result.stats.expanded for o in report.per_target if o.result is not None)


def _make_source(kind: str, scfg: SearchConfig, oracle_radius: int) -> RegionSource:
    if kind == "null":
        return NullSource()
    return OracleSource(radius=oracle_radius, cfg=scfg)


def run_suite(
    suite: BenchSuite,
    *,
    scfg: Optional[SearchConfig] = None,
    tcfg: Optional[TargetSamplerConfig] = None,
    speed: float = 0.0,
    vehicle_radius: int = 5,
    oracle_radius: int = 5,
    actions: Optional[ActionSet] = None,
    profile: SpeedProfile = DEFAULT_SPEED_PROFILE,
    out_dir=None,
    throughput_workers: int = 0,
) -> tuple[list[BenchRow], list[RatioRow]]:
    """Run every (scenario, target count, source) combination.

    Rows are appended scenario-major.  A scenario construction failure
    aborts the suite after flushing the completed rows (BenchError.rows).
    Timed runs are sequential; throughput_workers > 0 adds extra rows with
    the oracle source planned concurrently, tagged oracle+w{N}.
    """
    scfg = scfg if scfg is not None else SearchConfig()
    tcfg = tcfg if tcfg is not None else TargetSamplerConfig()
    rows: list[BenchRow] = []
    ratios: list[RatioRow] = []

    for spec in suite.scenarios:
        try:
            scenario = build_scenario_full(spec)
            grid = inflate(scenario.grid, vehicle_radius)
        except Exception as exc:
            if out_dir is not None:
                _write_csvs(out_dir, rows, ratios)
            raise BenchError(
                f"scenario seed={spec.seed} failed to build after "
                f"{len(rows)} rows: {exc}",
                rows,
            ) from exc
        for count in suite.target_counts:
            tcfg_n = replace(tcfg, max_targets=count)
            by_source: dict[str, BenchRow] = {}
            for kind in suite.sources:
                source = _make_source(kind, scfg, oracle_radius)
                plan_ms = []
                predict_ms = []
                expanded = []
                success = 0
                for _ in range(suite.repetitions):
                    report = plan_all(
                        grid,
                        scenario.refpath,
                        scenario.start,
                        speed,
                        source,
                        scfg,
                        tcfg_n,
                        actions=actions,
                        profile=profile,
                    )
                    plan_ms.append(report.totals.plan_ms)
                    predict_ms.append(report.totals.predict_ms)
                    expanded.append(_report_expanded(report))
                    success += report.totals.successes
                row = BenchRow(
                    targets=count,
                    source=kind,
                    plan_ms=statistics.fmean(plan_ms),
                    predict_ms=statistics.fmean(predict_ms),
                    expanded=statistics.fmean(expanded),
                    success=success,
                    reps=suite.repetitions,
                )
                rows.append(row)
                by_source[kind] = row
            if throughput_workers > 0 and "oracle" in suite.sources:
                source = _make_source("oracle", scfg, oracle_radius)
                report = plan_all(
                    grid,
                    scenario.refpath,
                    scenario.start,
                    speed,
                    source,
                    scfg,
                    tcfg_n,
                    actions=actions,
                    profile=profile,
                    workers=throughput_workers,
                )
                rows.append(
                    BenchRow(
                        targets=count,
                        source=f"oracle+w{throughput_workers}",
                        plan_ms=report.totals.plan_ms,
                        predict_ms=report.totals.predict_ms,
                        expanded=float(_report_expanded(report)),
                        success=report.totals.successes,
                        reps=1,
                    )
                )
            if "null" in by_source and "oracle" in by_source:
                null_ms = by_source["null"].plan_ms
                oracle_ms = by_source["oracle"].plan_ms
                ratios.append(
                    RatioRow(
                        targets=count,
                        plan_ms_null=null_ms,
                        plan_ms_oracle=oracle_ms,
                        ratio=null_ms / oracle_ms if oracle_ms > 0 else float("inf"),
                    )
                )

    if out_dir is not None:
        _write_csvs(out_dir, rows, ratios)
    return rows, ratios


def _write_csvs(out_dir, rows: list[BenchRow], ratios: list[RatioRow]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / BENCH_CSV, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for r in rows:
            writer.writerow(
                [r.targets, r.source, f"{r.plan_ms:.3f}", f"{r.predict_ms:.3f}",
                 f"{r.expanded:.1f}", r.success, r.reps]
            )
    with open(out / RATIO_CSV, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RATIO_HEADER)
        for r in ratios:
            writer.writerow(
                [r.targets, f"{r.plan_ms_null:.3f}", f"{r.plan_ms_oracle:.3f}", f"{r.ratio:.3f}"]
            )


def dump_search_space(result: PlanResult, out=None) -> RegionMask:
    """Project the recorded pop trace over theta onto a (col, row) mask and
    optionally write it as PGM."""
    if result.trace is None:
        raise ValueError("plan was run without expansion tracing")
    width, height = result.grid_size
    bits = np.zeros((height, width), dtype=bool)
    if len(result.trace) > 0:
        bits[result.trace[:, 1], result.trace[:, 0]] = True
    mask = RegionMask.from_bits(bits)
    if out is not None:
        write_raster(mask, out)
    return mask
