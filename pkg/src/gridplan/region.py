"""Region-mask sources: where the planner's soft-constraint masks come from.

Three kinds.  null yields no masks (plain planning).  file loads masks
written by an external predictor through the PGM contract.  oracle plans
plainly and dilates the found path, standing in for a perfect predictor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .actions import DEFAULT_SPEED_PROFILE, ActionSet, SpeedProfile
from .grid import (
    OccupancyGrid,
    RasterFormatError,
    ReferencePath,
    RegionMask,
    dilate,
    rasterize_path,
    stamp_disk,
    write_raster,
    read_raster,
)
from .search import SearchConfig, plan

log = logging.getLogger(__name__)

MASK_NAME = "mask_{scenario_id}_{target_index}.pgm"
INPUT_NAME = "input_{scenario_id}_{target_index}.ppm"

REF_DILATION_RADIUS = 3
TARGET_DISK_RADIUS = 4
ORACLE_DILATION_RADIUS = 5


class RegionSource:
    """Produces one optional mask per target, index-aligned."""

    kind: str = "abstract"

    def predict_batch(
        self,
        grid: OccupancyGrid,
        start: tuple[int, int, float],
        speed: float,
        targets: list[tuple[int, int]],
        *,
        actions: Optional[ActionSet] = None,
        profile: SpeedProfile = DEFAULT_SPEED_PROFILE,
    ) -> list[Optional[RegionMask]]:
        raise NotImplementedError


@dataclass(frozen=True)
class NullSource(RegionSource):
    """No prediction: every target plans plainly."""

    kind: str = "null"

    def predict_batch(self, grid, start, speed, targets, *, actions=None, profile=DEFAULT_SPEED_PROFILE):
        if not targets:
            raise ValueError("targets must be nonempty")
        return [None] * len(targets)


@dataclass(frozen=True)
class FileSource(RegionSource):
    """Masks read from PGM files named mask_{scenario_id}_{target_index}.pgm."""

    directory: Path
    scenario_id: str
    kind: str = "file"

    def mask_path(self, target_index: int) -> Path:
        return Path(self.directory) / MASK_NAME.format(
            scenario_id=self.scenario_id, target_index=target_index
        )

    def predict_batch(self, grid, start, speed, targets, *, actions=None, profile=DEFAULT_SPEED_PROFILE):
        if not targets:
            raise ValueError("targets must be nonempty")
        masks: list[Optional[RegionMask]] = []
        for idx in range(len(targets)):
            path = self.mask_path(idx)
            try:
                mask = read_raster(path)
            except (OSError, RasterFormatError) as exc:
                log.warning("target %d: cannot load %s: %s", idx, path, exc)
                masks.append(None)
                continue
            if not isinstance(mask, RegionMask) or mask.width != grid.width or mask.height != grid.height:
                log.warning("target %d: %s does not match grid dimensions", idx, path)
                masks.append(None)
                continue
            masks.append(mask)
        return masks


@dataclass(frozen=True)
class OracleSource(RegionSource):
    """Plain-plan each target and dilate the path: the perfect predictor."""

    radius: int = ORACLE_DILATION_RADIUS
    cfg: SearchConfig = field(default_factory=SearchConfig)
    kind: str = "oracle"

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("oracle dilation radius must be >= 1")

    def predict_batch(self, grid, start, speed, targets, *, actions=None, profile=DEFAULT_SPEED_PROFILE):
        if not targets:
            raise ValueError("targets must be nonempty")
        masks: list[Optional[RegionMask]] = []
        for target in targets:
            result = plan(
                grid, start, target, speed, None, self.cfg, actions, profile=profile
            )
            if not result.reached:
                masks.append(None)
                continue
            raster = rasterize_path(result.path, grid.width, grid.height)
            masks.append(dilate(raster, self.radius))
        return masks


def render_fcn_input(
    grid: OccupancyGrid,
    refpath: ReferencePath,
    target: tuple[int, int],
    *,
    ref_radius: int = REF_DILATION_RADIUS,
    target_radius: int = TARGET_DISK_RADIUS,
) -> np.ndarray:
    """Three-channel uint8 raster for the predictor: obstacles, dilated
    reference path, target disk.  The grid should already be inflated."""
    tc, tr = int(target[0]), int(target[1])
    if not grid.in_bounds(tc, tr):
        raise ValueError(f"target ({tc}, {tr}) out of bounds")
    h, w = grid.height, grid.width
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, :, 0] = np.where(grid.occupied, 255, 0)
    ref_bits = dilate(rasterize_path(refpath.points, w, h), ref_radius)
    img[:, :, 1] = np.where(ref_bits.bits, 255, 0)
    tgt = np.zeros((h, w), dtype=bool)
    stamp_disk(tgt, (tc, tr), target_radius)
    img[:, :, 2] = np.where(tgt, 255, 0)
    return img


def export_oracle_masks(
    grid: OccupancyGrid,
    start: tuple[int, int, float],
    speed: float,
    targets: list[tuple[int, int]],
    out_dir,
    scenario_id: str,
    *,
    refpath: Optional[ReferencePath] = None,
    radius: int = ORACLE_DILATION_RADIUS,
    cfg: Optional[SearchConfig] = None,
    actions: Optional[ActionSet] = None,
    profile: SpeedProfile = DEFAULT_SPEED_PROFILE,
    export_inputs: bool = False,
) -> tuple[int, int]:
    """Write oracle masks under the file-source naming pattern; optionally
    also the matching 3-channel input rasters.  Returns (written, skipped)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if export_inputs and refpath is None:
        raise ValueError("export_inputs requires a reference path")
    source = OracleSource(radius=radius, cfg=cfg if cfg is not None else SearchConfig())
    masks = source.predict_batch(
        grid, start, speed, targets, actions=actions, profile=profile
    )
    written = 0
    skipped = 0
    for idx, mask in enumerate(masks):
        if export_inputs:
            img = render_fcn_input(grid, refpath, targets[idx])
            write_raster(
                img,
                out_dir / INPUT_NAME.format(scenario_id=scenario_id, target_index=idx),
            )
        if mask is None:
            skipped += 1
            continue
        write_raster(
            mask, out_dir / MASK_NAME.format(scenario_id=scenario_id, target_index=idx)
        )
        written += 1
    return written, skipped
