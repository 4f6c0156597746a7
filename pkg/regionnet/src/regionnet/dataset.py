"""Manifest-driven sample loading: (3-channel PPM input, binary PGM label)
pairs produced by the planner's gen-samples tool.

All pairs that survive filtering must share one raster size; batching and
the network make no attempt to mix geometries in a single run.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import torch

from .netpbm import PnmError, probe_size, read_pnm

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("input", "label", "seed", "target_col", "target_row", "shift")


@dataclass(frozen=True)
class SamplePair:
    input_path: Path
    label_path: Path
    seed: int
    target: tuple[int, int]
    shift: float


@dataclass(frozen=True)
class LoadReport:
    pairs: tuple[SamplePair, ...]
    skipped: int


def read_manifest(paths: Iterable) -> LoadReport:
    """Read one or more manifest.csv files; pairs whose input and label
    rasters disagree on dimensions are skipped with a warning and counted."""
    pairs: list[SamplePair] = []
    skipped = 0
    for manifest in paths:
        manifest = Path(manifest)
        base = manifest.parent
        with open(manifest, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{manifest}: missing columns {sorted(missing)}")
            for row in reader:
                pair = SamplePair(
                    input_path=base / row["input"],
                    label_path=base / row["label"],
                    seed=int(row["seed"]),
                    target=(int(row["target_col"]), int(row["target_row"])),
                    shift=float(row["shift"]),
                )
                try:
                    iw, ih, ic = probe_size(pair.input_path)
                    lw, lh, lc = probe_size(pair.label_path)
                except (OSError, PnmError) as exc:
                    log.warning("skipping %s: %s", row["input"], exc)
                    skipped += 1
                    continue
                if ic != 3 or lc != 1 or (iw, ih) != (lw, lh):
                    log.warning(
                        "skipping %s: input %dx%dx%d vs label %dx%dx%d",
                        row["input"], iw, ih, ic, lw, lh, lc,
                    )
                    skipped += 1
                    continue
                pairs.append(pair)
    return LoadReport(pairs=tuple(pairs), skipped=skipped)


def split_pairs(
    pairs: Sequence[SamplePair],
    fractions: tuple[float, float],
    seed: int,
    limit: Optional[int] = None,
) -> tuple[list[SamplePair], list[SamplePair]]:
    """Deterministic shuffle-and-cut. limit caps the pool (manifest order)
    before shuffling, so a 500-sample desk run is reproducible."""
    pool = list(pairs[:limit] if limit is not None else pairs)
    if len(pool) < 2:
        raise ValueError(f"need at least 2 pairs to split, have {len(pool)}")
    order = np.random.default_rng(seed).permutation(len(pool))
    n_train = round(len(pool) * fractions[0])
    n_train = min(max(n_train, 1), len(pool) - 1)
    train = [pool[i] for i in order[:n_train]]
    test = [pool[i] for i in order[n_train:]]
    return train, test


def _pool_label(plane: np.ndarray, k: int) -> np.ndarray:
    # any set pixel in a block marks the block: thin bands must survive
    h, w = plane.shape
    return plane.reshape(h // k, k, w // k, k).any(axis=(1, 3))


def _pool_input(img: np.ndarray, k: int) -> np.ndarray:
    h, w = img.shape[:2]
    return img.reshape(h // k, k, w // k, k, 3).mean(axis=(1, 3), dtype=np.float32)


def load_pair_arrays(pair: SamplePair, downscale: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(input float32 (3, h, w) in [0, 1], label bool (h, w)), downscaled."""
    img = read_pnm(pair.input_path)
    label = read_pnm(pair.label_path) != 0
    if img.ndim != 3:
        raise ValueError(f"{pair.input_path}: expected a 3-channel input")
    if img.shape[:2] != label.shape:
        raise ValueError(f"{pair.input_path}: input/label dimension mismatch")
    if downscale > 1:
        h, w = label.shape
        if h % downscale or w % downscale:
            raise ValueError(
                f"{pair.input_path}: {w}x{h} not divisible by downscale {downscale}"
            )
        img32 = _pool_input(img, downscale) / 255.0
        label = _pool_label(label, downscale)
    else:
        img32 = img.astype(np.float32) / 255.0
    return np.moveaxis(img32, 2, 0), label


@dataclass
class TensorSet:
    inputs: torch.Tensor  # (n, 3, h, w) float32 in [0, 1]
    labels: torch.Tensor  # (n, h, w) int64 {0, 1}
    full_size: tuple[int, int]  # (h, w) before any downscale

    def __len__(self) -> int:
        return self.inputs.shape[0]


def load_tensors(pairs: Sequence[SamplePair], downscale: int = 1) -> TensorSet:
    """Preload a uniform-size pair list into memory-resident tensors."""
    if not pairs:
        raise ValueError("no pairs to load")
    sizes = {probe_size(p.input_path)[:2] for p in pairs}
    if len(sizes) != 1:
        raise ValueError(f"mixed raster sizes {sorted(sizes)}; generate uniform data")
    inputs = []
    labels = []
    for pair in pairs:
        img, label = load_pair_arrays(pair, downscale)
        inputs.append(torch.from_numpy(np.ascontiguousarray(img)))
        labels.append(torch.from_numpy(label.astype(np.int64)))
    (w, h), = sizes
    return TensorSet(
        inputs=torch.stack(inputs),
        labels=torch.stack(labels),
        full_size=(h, w),
    )


def class_weights(labels: torch.Tensor) -> torch.Tensor:
    """Inverse-frequency weights, mean-normalized: w_c = total / (2 * n_c)."""
    total = labels.numel()
    pos = int((labels == 1).sum())
    neg = total - pos
    if pos == 0 or neg == 0:
        raise ValueError("training labels contain a single class")
    return torch.tensor([total / (2.0 * neg), total / (2.0 * pos)], dtype=torch.float32)
