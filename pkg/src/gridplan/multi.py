"""Multi-target batch planning: sample targets along the reference path,
fetch one region mask per target in a single batch, then plan per target.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .actions import DEFAULT_SPEED_PROFILE, ActionSet, SpeedProfile
from .grid import OccupancyGrid, ReferencePath, RegionMask
from .region import RegionSource
from .search import PlanError, PlanResult, SearchConfig, plan


@dataclass(frozen=True)
class TargetSamplerConfig:
    """Station spacing along the refpath and lateral fan at each station."""

    longitudinal_step: int = 25
    lateral_offsets: tuple[int, ...] = (-10, -5, 0, 5, 10)
    max_targets: int = 10

    def __post_init__(self):
        if self.longitudinal_step < 1:
            raise ValueError("longitudinal_step must be >= 1")
        if self.max_targets < 1:
            raise ValueError("max_targets must be >= 1")
        offs = tuple(self.lateral_offsets)
        if len(set(offs)) != len(offs) or list(offs) != sorted(offs):
            raise ValueError("lateral_offsets must be sorted and unique")
        object.__setattr__(self, "lateral_offsets", offs)


def sample_targets(
    grid: OccupancyGrid, refpath: ReferencePath, cfg: TargetSamplerConfig
) -> list[tuple[int, int]]:
    """Candidate target cells: stations every longitudinal_step of arclength
    along the refpath (the first one step in), each fanned by the lateral
    offsets rotated to the local heading.  Out-of-bounds and occupied cells
    are dropped; order is station-major, offset-minor."""
    pts = refpath.points
    # cumulative arclength over the polyline
    seg_len = []
    total = 0.0
    for (c0, r0, _), (c1, r1, _) in zip(pts, pts[1:]):
        d = math.hypot(c1 - c0, r1 - r0)
        seg_len.append(d)
        total += d

    targets: list[tuple[int, int]] = []
    station = float(cfg.longitudinal_step)
    seg = 0
    walked = 0.0
    while station <= total and len(targets) < cfg.max_targets:
        while seg < len(seg_len) and walked + seg_len[seg] < station:
            walked += seg_len[seg]
            seg += 1
        if seg >= len(seg_len):
            break
        c0, r0, _ = pts[seg]
        c1, r1, _ = pts[seg + 1]
        frac = (station - walked) / seg_len[seg]
        sc = c0 + frac * (c1 - c0)
        sr = r0 + frac * (r1 - r0)
        heading = math.atan2(-(r1 - r0), c1 - c0)
        for off in cfg.lateral_offsets:
            col = int(round(sc - off * math.sin(heading)))
            row = int(round(sr - off * math.cos(heading)))
            if grid.is_free(col, row):
                targets.append((col, row))
                if len(targets) >= cfg.max_targets:
                    break
        station += cfg.longitudinal_step
    return targets


@dataclass(frozen=True)
class TargetOutcome:
    target: tuple[int, int]
    result: Optional[PlanResult]
    error: Optional[str]
    predict_ms: float  # per-target share of the batch prediction time
    plan_ms: float


@dataclass(frozen=True)
class ReportTotals:
    targets: int
    successes: int
    plan_ms: float
    predict_ms: float


@dataclass(frozen=True)
class MultiPlanReport:
    source_kind: str
    per_target: tuple[TargetOutcome, ...]
    totals: ReportTotals


def plan_all(
    grid: OccupancyGrid,
    refpath: ReferencePath,
    start: tuple[int, int, float],
    speed: float,
    source: RegionSource,
    scfg: Optional[SearchConfig] = None,
    tcfg: Optional[TargetSamplerConfig] = None,
    *,
    actions: Optional[ActionSet] = None,
    profile: SpeedProfile = DEFAULT_SPEED_PROFILE,
    workers: int = 0,
    record_trace: bool = False,
) -> MultiPlanReport:
    """Sample targets, predict all masks as one batch, then plan per target.

    Per-target planning failures are recorded in the report, never raised.
    workers > 0 plans targets concurrently; results are identical to the
    sequential run apart from timing fields.
    """
    scfg = scfg if scfg is not None else SearchConfig()
    tcfg = tcfg if tcfg is not None else TargetSamplerConfig()

    targets = sample_targets(grid, refpath, tcfg)
    if not targets:
        return MultiPlanReport(
            source_kind=source.kind,
            per_target=(),
            totals=ReportTotals(targets=0, successes=0, plan_ms=0.0, predict_ms=0.0),
        )

    t0 = time.perf_counter()
    masks = source.predict_batch(
        grid, start, speed, targets, actions=actions, profile=profile
    )
    predict_total_ms = (time.perf_counter() - t0) * 1000.0
    predict_share = predict_total_ms / len(targets)

    def run_one(pair: tuple[tuple[int, int], Optional[RegionMask]]) -> TargetOutcome:
        target, mask = pair
        t1 = time.perf_counter()
        try:
            result = plan(
                grid,
                start,
                target,
                speed,
                mask,
                scfg,
                actions,
                profile=profile,
                record_trace=record_trace,
            )
        except PlanError as exc:
            return TargetOutcome(
                target=target,
                result=None,
                error=str(exc),
                predict_ms=predict_share,
                plan_ms=(time.perf_counter() - t1) * 1000.0,
            )
        return TargetOutcome(
            target=target,
            result=result,
            error=None,
            predict_ms=predict_share,
            plan_ms=(time.perf_counter() - t1) * 1000.0,
        )

    pairs = list(zip(targets, masks))
    if workers > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = tuple(pool.map(run_one, pairs))
    else:
        outcomes = tuple(run_one(p) for p in pairs)

    successes = sum(1 for o in outcomes if o.result is not None and o.result.reached)
    totals = ReportTotals(
        targets=len(targets),
        successes=successes,
        plan_ms=sum(o.plan_ms for o in outcomes),
        predict_ms=predict_total_ms,
    )
    return MultiPlanReport(source_kind=source.kind, per_target=outcomes, totals=totals)
