"""Batch inference: input PPMs in, planner-ready PGM region masks out.

Output files follow the planner's file-source pattern
mask_{scenario_id}_{target_index}.pgm, with both fields parsed from the
input file's name (input_{scenario_id}_{target_index}.ppm).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch.nn import functional as F

from .model import RegionNet
from .netpbm import read_pnm, write_pgm

log = logging.getLogger(__name__)

INPUT_PREFIX = "input_"
MASK_NAME = "mask_{scenario_id}_{target_index}.pgm"


def load_checkpoint(path) -> tuple[RegionNet, dict]:
    """Rebuild the network from a training checkpoint; eval mode."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = RegionNet(in_channels=payload["in_channels"], classes=payload["classes"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    meta = {k: v for k, v in payload.items() if k != "state_dict"}
    return model, meta


def parse_input_name(path) -> tuple[str, int]:
    """input_{scenario_id}_{target_index}.ppm -> (scenario_id, index)."""
    stem = Path(path).stem
    if not stem.startswith(INPUT_PREFIX):
        raise ValueError(f"{path}: expected a name like input_<id>_<index>.ppm")
    body = stem[len(INPUT_PREFIX):]
    scenario_id, sep, idx = body.rpartition("_")
    if not sep or not idx.isdigit() or not scenario_id:
        raise ValueError(f"{path}: expected a name like input_<id>_<index>.ppm")
    return scenario_id, int(idx)


def _prepare(img: np.ndarray, downscale: int) -> torch.Tensor:
    x = torch.from_numpy(np.moveaxis(img, 2, 0).astype(np.float32) / 255.0)
    if downscale > 1:
        x = F.avg_pool2d(x.unsqueeze(0), downscale, ceil_mode=True).squeeze(0)
    return x


def predict_masks(
    model: RegionNet,
    meta: dict,
    inputs: Sequence,
    out_dir,
    *,
    batch_size: int = 50,
    threshold: float = 0.5,
    amp: bool = True,
) -> list[Path]:
    """Run the net over input rasters and write one mask per input, index
    aligned through the file names. Returns the written paths."""
    if not inputs:
        raise ValueError("no inputs given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    downscale = int(meta.get("downscale", 1))
    named = [(Path(p), *parse_input_name(p)) for p in inputs]
    written: list[Path] = []
    model.eval()
    with torch.inference_mode():
        for lo in range(0, len(named), batch_size):
            chunk = named[lo : lo + batch_size]
            imgs = []
            for path, _, _ in chunk:
                img = read_pnm(path)
                if img.ndim != 3:
                    raise ValueError(f"{path}: expected a 3-channel PPM input")
                imgs.append(img)
            sizes = {img.shape[:2] for img in imgs}
            if len(sizes) != 1:
                raise ValueError(f"mixed input sizes {sorted(sizes)} in one batch")
            x = torch.stack([_prepare(img, downscale) for img in imgs])
            with torch.autocast("cpu", dtype=torch.bfloat16, enabled=amp):
                logits = model(x)
            logits = logits.float()
            native = imgs[0].shape[:2]
            if logits.shape[2:] != native:
                logits = F.interpolate(logits, size=native, mode="bilinear", align_corners=False)
            prob = torch.softmax(logits, dim=1)[:, 1]
            masks = (prob > threshold).numpy()
            for i, (path, scenario_id, index) in enumerate(chunk):
                out = out_dir / MASK_NAME.format(scenario_id=scenario_id, target_index=index)
                write_pgm(masks[i], out)
                written.append(out)
    log.info("wrote %d masks to %s", len(written), out_dir)
    return written
