"""Trainer configuration and the warmup + cosine learning-rate curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

WARMUP_FRACTION = 0.05


@dataclass(frozen=True)
class TrainerConfig:
    base_lr: float = 5e-4
    total_batches: int = 1
    batch_size: int = 100
    weight_decay: float = 2e-4
    epochs: int = 300
    warmup_batches: int = 1
    split: tuple[float, float] = (0.8, 0.2)

    def __post_init__(self):
        for name in ("base_lr", "total_batches", "batch_size", "weight_decay", "epochs", "warmup_batches"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.warmup_batches >= self.total_batches:
            raise ValueError("warmup_batches must be < total_batches")
        if len(self.split) != 2 or any(f <= 0 for f in self.split):
            raise ValueError("split must be two positive fractions")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split must sum to 1")


def default_warmup(total_batches: int) -> int:
    """Warmup length: 5% of the run, never less than one batch."""
    return max(1, round(WARMUP_FRACTION * total_batches))


def lr_schedule(i: int, cfg: TrainerConfig) -> float:
    """Learning rate at batch i: linear ramp 0 -> base_lr over the warmup,
    then cosine decay to 0 over the remaining batches. i = total_batches is
    accepted as the curve's limit point (value 0)."""
    if i < 0 or i > cfg.total_batches:
        raise ValueError(f"batch index {i} outside [0, {cfg.total_batches}]")
    w = cfg.warmup_batches
    if i < w:
        return cfg.base_lr * i / w
    span = cfg.total_batches - w
    return 0.5 * (1.0 + math.cos((i - w) * math.pi / span)) * cfg.base_lr
