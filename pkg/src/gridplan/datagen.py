"""Synthetic scenario construction and the training-sample pipeline.

A scenario is a template layout (corridor, s_curve, lot) augmented with
randomly placed vehicle-sized rectangles along the reference path, plus a
random lateral shift of the reference path itself.  Training samples pair a
3-channel input raster with a dilated plain-planned path as the label.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .actions import DEFAULT_SPEED_PROFILE, ActionSet, SpeedProfile
from .grid import (
    OccupancyGrid,
    ReferencePath,
    dilate,
    inflate,
    rasterize_path,
    write_raster,
)
from .multi import TargetSamplerConfig, sample_targets
from .region import render_fcn_input
from .search import PlanError, SearchConfig, plan

TEMPLATES = ("corridor", "s_curve", "lot")

VEHICLE_LENGTH = 23  # cells (4.6 m at 0.2 m/cell)
VEHICLE_WIDTH = 9  # cells (1.8 m)
PLACEMENT_BAND = 12.0  # max lateral offset of obstacle centers from the refpath
EGO_CLEARANCE = 7  # cells kept free around ego so footprint inflation never blocks it
DEFAULT_LABEL_RADIUS = 5
DEFAULT_VEHICLE_RADIUS = 5

MANIFEST_NAME = "manifest.csv"
MANIFEST_HEADER = ["input", "label", "seed", "target_col", "target_row", "shift"]


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to rebuild a scenario byte-identically."""

    seed: int
    template: str = "corridor"
    params: tuple[tuple[str, float], ...] = ()
    vehicle_obstacles: tuple[int, int] = (3, 8)
    refpath_shift: tuple[float, float] = (-8.0, 8.0)

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown template {self.template!r}")
        lo, hi = self.vehicle_obstacles
        if lo < 0 or hi < lo:
            raise ValueError("vehicle_obstacles range must satisfy 0 <= lo <= hi")
        slo, shi = self.refpath_shift
        if shi < slo:
            raise ValueError("refpath_shift range must satisfy lo <= hi")
        object.__setattr__(
            self, "params", tuple((str(k), float(v)) for k, v in self.params)
        )

    def param(self, key: str, default: float) -> float:
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class Scenario:
    grid: OccupancyGrid
    refpath: ReferencePath  # shifted: what the planner/net is told
    base_refpath: ReferencePath  # true lane center: where targets come from
    shift: float
    spec: ScenarioSpec

    @property
    def start(self) -> tuple[int, int, float]:
        col, row = self.grid.ego_cell
        return (col, row, self.base_refpath.points[0][2])


def _polyline_metrics(points) -> tuple[list[float], float]:
    seg_len = []
    total = 0.0
    for (c0, r0, _), (c1, r1, _) in zip(points, points[1:]):
        d = math.hypot(c1 - c0, r1 - r0)
        seg_len.append(d)
        total += d
    return seg_len, total


def _point_at(points, seg_len, s: float) -> tuple[float, float, float]:
    """Interpolated (col, row, heading) at arclength s along the polyline."""
    walked = 0.0
    for i, d in enumerate(seg_len):
        if walked + d >= s or i == len(seg_len) - 1:
            c0, r0, _ = points[i]
            c1, r1, _ = points[i + 1]
            frac = min(max((s - walked) / d, 0.0), 1.0)
            heading = math.atan2(-(r1 - r0), c1 - c0)
            return (c0 + frac * (c1 - c0), r0 + frac * (r1 - r0), heading)
        walked += d
    raise AssertionError("unreachable")


def _refpath_upward(col: float, row_from: int, row_to: int, step: int = 8):
    """Straight vertical path from row_from up to row_to (decreasing rows)."""
    pts = []
    row = row_from
    while row > row_to:
        pts.append((col, float(row), math.pi / 2.0))
        row -= step
    pts.append((col, float(row_to), math.pi / 2.0))
    return pts


def _template_corridor(spec: ScenarioSpec):
    w = int(spec.param("width", 256))
    h = int(spec.param("height", 512))
    half = int(spec.param("half_width", 40))
    center = w // 2
    occ = np.ones((h, w), dtype=bool)
    occ[:, max(center - half, 0) : min(center + half + 1, w)] = False
    ego = (center, h - 52)
    pts = _refpath_upward(center, ego[1], 10)
    return occ, ego, pts


def _template_s_curve(spec: ScenarioSpec):
    w = int(spec.param("width", 256))
    h = int(spec.param("height", 512))
    half = int(spec.param("half_width", 38))
    amp = spec.param("amplitude", 55.0)
    base = w / 2.0

    def center(row: float) -> float:
        return base + amp * math.sin(2.0 * math.pi * row / h)

    cols = np.arange(w)[None, :]
    centers = base + amp * np.sin(2.0 * math.pi * np.arange(h) / h)
    occ = np.abs(cols - centers[:, None]) > half

    ego_row = h - 52
    ego = (int(round(center(ego_row))), ego_row)
    pts = []
    rows = list(range(ego_row, 9, -6))
    if rows[-1] != 10:
        rows.append(10)
    for row in rows:
        pts.append([center(row), float(row), 0.0])
    for i in range(len(pts) - 1):
        c0, r0, _ = pts[i]
        c1, r1, _ = pts[i + 1]
        pts[i][2] = math.atan2(-(r1 - r0), c1 - c0)
    pts[-1][2] = pts[-2][2]
    return occ, ego, [tuple(p) for p in pts]


def _template_lot(spec: ScenarioSpec, rng: np.random.Generator):
    w = int(spec.param("width", 256))
    h = int(spec.param("height", 512))
    blocks = int(spec.param("blocks", 12))
    occ = np.zeros((h, w), dtype=bool)
    occ[:2, :] = True
    occ[-2:, :] = True
    occ[:, :2] = True
    occ[:, -2:] = True
    ego = (w // 2, h - 52)
    for _ in range(blocks):
        for _attempt in range(20):
            cx = int(rng.integers(6, w - 6))
            cy = int(rng.integers(6, h - 6))
            bw = int(rng.integers(4, 16))
            bh = int(rng.integers(4, 16))
            lo_c, hi_c = max(cx - bw // 2, 0), min(cx + bw // 2, w - 1)
            lo_r, hi_r = max(cy - bh // 2, 0), min(cy + bh // 2, h - 1)
            # keep a clearance disk around ego so inflation cannot block it
            nearest_c = min(max(ego[0], lo_c), hi_c)
            nearest_r = min(max(ego[1], lo_r), hi_r)
            if (nearest_c - ego[0]) ** 2 + (nearest_r - ego[1]) ** 2 <= EGO_CLEARANCE**2:
                continue
            occ[lo_r : hi_r + 1, lo_c : hi_c + 1] = True
            break
    pts = _refpath_upward(ego[0], ego[1], 10)
    return occ, ego, pts


def _vehicle_cells(center_c: float, center_r: float, heading: float, width: int, height: int):
    """Cells of a vehicle-sized rectangle rotated to heading."""
    half_len = (VEHICLE_LENGTH - 1) / 2.0 + 0.5
    half_wid = (VEHICLE_WIDTH - 1) / 2.0 + 0.5
    ux = math.cos(heading)
    uy = -math.sin(heading)  # +row is down
    reach = int(math.ceil(math.hypot(half_len, half_wid)))
    cells = []
    lo_c = max(int(math.floor(center_c)) - reach, 0)
    hi_c = min(int(math.ceil(center_c)) + reach, width - 1)
    lo_r = max(int(math.floor(center_r)) - reach, 0)
    hi_r = min(int(math.ceil(center_r)) + reach, height - 1)
    for row in range(lo_r, hi_r + 1):
        for col in range(lo_c, hi_c + 1):
            dc = col - center_c
            dr = row - center_r
            u = dc * ux + dr * uy
            v = -dc * uy + dr * ux
            if abs(u) <= half_len and abs(v) <= half_wid:
                cells.append((col, row))
    return cells


def build_scenario_full(spec: ScenarioSpec) -> Scenario:
    """Deterministic scenario assembly.  Draw order from the seed is fixed:
    template, obstacle count, per-obstacle placements, refpath shift."""
    rng = np.random.default_rng(spec.seed)
    if spec.template == "corridor":
        occ, ego, base_pts = _template_corridor(spec)
    elif spec.template == "s_curve":
        occ, ego, base_pts = _template_s_curve(spec)
    else:
        occ, ego, base_pts = _template_lot(spec, rng)
    occ = occ.copy()
    if occ[ego[1], ego[0]]:
        raise ValueError(f"template walls off the ego cell {ego}")

    height, width = occ.shape
    seg_len, total = _polyline_metrics(base_pts)

    lo, hi = spec.vehicle_obstacles
    n_obstacles = int(rng.integers(lo, hi + 1))
    for _ in range(n_obstacles):
        for _attempt in range(20):
            s = float(rng.uniform(0.0, total))
            lateral = float(rng.uniform(-PLACEMENT_BAND, PLACEMENT_BAND))
            jitter = float(rng.uniform(-0.3, 0.3))
            pc, pr, ph = _point_at(base_pts, seg_len, s)
            cx = pc - lateral * math.sin(ph)
            cy = pr - lateral * math.cos(ph)
            cells = _vehicle_cells(cx, cy, ph + jitter, width, height)
            if not cells:
                continue
            ec, er = ego
            if any((c - ec) ** 2 + (r - er) ** 2 <= EGO_CLEARANCE**2 for c, r in cells):
                continue
            for c, r in cells:
                occ[r, c] = True
            break

    shift = float(rng.uniform(spec.refpath_shift[0], spec.refpath_shift[1]))
    shifted_pts = []
    for c, r, t in base_pts:
        sc = min(max(c - shift * math.sin(t), 0.0), width - 1.0)
        sr = min(max(r - shift * math.cos(t), 0.0), height - 1.0)
        if shifted_pts and shifted_pts[-1][0] == sc and shifted_pts[-1][1] == sr:
            continue
        shifted_pts.append((sc, sr, t))

    grid = OccupancyGrid.from_occupancy(occ, resolution=0.2, ego_cell=ego)
    return Scenario(
        grid=grid,
        refpath=ReferencePath(points=tuple(shifted_pts)),
        base_refpath=ReferencePath(points=tuple(base_pts)),
        shift=shift,
        spec=spec,
    )


def build_scenario(spec: ScenarioSpec) -> tuple[OccupancyGrid, ReferencePath]:
    sc = build_scenario_full(spec)
    return sc.grid, sc.refpath


def variant_seed(base_seed: int, target_index: int, variant_index: int) -> int:
    """Derived seed for one augmentation variant, stable across runs."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(target_index, variant_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ManifestRow:
    input: str
    label: str
    seed: int
    target_col: int
    target_row: int
    shift: float


@dataclass(frozen=True)
class GenReport:
    rows: tuple[ManifestRow, ...]
    skipped: int
    manifest_path: Path


def generate_samples(
    spec: ScenarioSpec,
    sampler: TargetSamplerConfig,
    per_target: int,
    out_dir,
    *,
    speed: float = 0.0,
    vehicle_radius: int = DEFAULT_VEHICLE_RADIUS,
    label_radius: int = DEFAULT_LABEL_RADIUS,
    cfg: Optional[SearchConfig] = None,
    actions: Optional[ActionSet] = None,
    profile: SpeedProfile = DEFAULT_SPEED_PROFILE,
) -> GenReport:
    """Emit (input PPM, label PGM) training pairs plus manifest.csv.

    Targets are sampled once from the bare template (no augmentation, no
    shift).  Each target gets per_target variants with fresh obstacle draws
    and a fresh refpath shift; each variant is planned plainly and the path,
    dilated, becomes the label.  Variants whose plan does not reach are
    skipped and counted.
    """
    if per_target < 1:
        raise ValueError("per_target must be >= 1")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    if not os.access(out_path, os.W_OK):
        raise PermissionError(f"output directory {out_path} is not writable")
    # generous per-plan budget: label generation favors coverage over latency
    cfg = cfg if cfg is not None else SearchConfig(time_limit=2000.0)

    base_spec = replace(spec, vehicle_obstacles=(0, 0), refpath_shift=(0.0, 0.0))
    base = build_scenario_full(base_spec)
    base_inflated = inflate(base.grid, vehicle_radius)
    targets = sample_targets(base_inflated, base.base_refpath, sampler)

    rows: list[ManifestRow] = []
    skipped = 0
    emitted = 0
    for t_idx, target in enumerate(targets):
        for v_idx in range(per_target):
            vspec = replace(spec, seed=variant_seed(spec.seed, t_idx, v_idx))
            variant = build_scenario_full(vspec)
            try:
                g_inf = inflate(variant.grid, vehicle_radius)
                result = plan(
                    g_inf, variant.start, target, speed, None, cfg, actions, profile=profile
                )
            except PlanError:
                skipped += 1
                continue
            if not result.reached:
                skipped += 1
                continue
            label = dilate(
                rasterize_path(result.path, variant.grid.width, variant.grid.height),
                label_radius,
            )
            image = render_fcn_input(g_inf, variant.refpath, target)
            input_name = f"input_{emitted:05d}.ppm"
            label_name = f"label_{emitted:05d}.pgm"
            write_raster(image, out_path / input_name)
            write_raster(label, out_path / label_name)
            rows.append(
                ManifestRow(
                    input=input_name,
                    label=label_name,
                    seed=vspec.seed,
                    target_col=target[0],
                    target_row=target[1],
                    shift=variant.shift,
                )
            )
            emitted += 1

    manifest_path = out_path / MANIFEST_NAME
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.input,
                    row.label,
                    row.seed,
                    row.target_col,
                    row.target_row,
                    repr(row.shift),
                ]
            )
    return GenReport(rows=tuple(rows), skipped=skipped, manifest_path=manifest_path)


def write_scenario_file(spec: ScenarioSpec, path) -> None:
    """Serialize a spec as flat key=value lines."""
    lines = [
        f"seed={spec.seed}",
        f"template={spec.template}",
        f"obstacles_min={spec.vehicle_obstacles[0]}",
        f"obstacles_max={spec.vehicle_obstacles[1]}",
        f"shift_min={spec.refpath_shift[0]!r}",
        f"shift_max={spec.refpath_shift[1]!r}",
    ]
    for k, v in spec.params:
        lines.append(f"param.{k}={v!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def parse_scenario_file(path) -> ScenarioSpec:
    """Parse the flat key=value scenario format (# comments allowed)."""
    values: dict[str, str] = {}
    params: list[tuple[str, float]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key.startswith("param."):
            params.append((key[len("param.") :], float(val)))
        else:
            values[key] = val
    known = {"seed", "template", "obstacles_min", "obstacles_max", "shift_min", "shift_max"}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    if "seed" not in values:
        raise ValueError(f"{path}: missing required key seed")
    return ScenarioSpec(
        seed=int(values["seed"]),
        template=values.get("template", "corridor"),
        params=tuple(params),
        vehicle_obstacles=(
            int(values.get("obstacles_min", 3)),
            int(values.get("obstacles_max", 8)),
        ),
        refpath_shift=(
            float(values.get("shift_min", -8.0)),
            float(values.get("shift_max", 8.0)),
        ),
    )
