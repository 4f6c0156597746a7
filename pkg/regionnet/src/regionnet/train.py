"""Training loop: Adam under the warmup + cosine schedule, class-balanced
cross-entropy, per-epoch held-out mIoU, best-checkpoint export."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from torch.nn import functional as F

from .dataset import (
    LoadReport,
    SamplePair,
    class_weights,
    load_pair_arrays,
    load_tensors,
    read_manifest,
    split_pairs,
)
from .metrics import confusion, miou_from_confusion
from .model import RegionNet
from .netpbm import read_pnm
from .schedule import TrainerConfig, default_warmup, lr_schedule

log = logging.getLogger(__name__)

MIN_MANIFEST_ROWS = 50

# profile -> (epochs, sample cap, batch size)
#
# The full-scale recipe pairs batch 100 with a 10k-sample corpus, i.e. around
# ninety optimizer steps per epoch.  At desk scale (400 training samples) the
# same batch would leave only four steps per epoch and the run undertrains, so
# the desk profile shrinks the batch to keep the step count in the regime the
# learning rate was tuned for.
PROFILES = {"desk": (40, 500, 25), "full": (300, None, 100)}


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    test_miou: float
    lr_end: float


@dataclass(frozen=True)
class TrainReport:
    best_miou: float
    best_epoch: int
    history: tuple[EpochStats, ...]
    checkpoint_path: Path
    skipped_pairs: int = 0
    train_size: int = 0
    test_size: int = 0


def _autocast(enabled: bool):
    return torch.autocast("cpu", dtype=torch.bfloat16, enabled=enabled)


def evaluate_pairs(
    model: RegionNet,
    pairs: Sequence[SamplePair],
    *,
    downscale: int = 1,
    batch_size: int = 50,
    threshold: float = 0.5,
    amp: bool = True,
) -> float:
    """Held-out mIoU at native raster resolution: inputs run through the
    net at the training scale, logits are upsampled back, thresholded, and
    scored against the untouched labels."""
    if not pairs:
        raise ValueError("no pairs to evaluate")
    was_training = model.training
    model.eval()
    total = np.zeros((2, 2), dtype=np.int64)
    with torch.inference_mode():
        for lo in range(0, len(pairs), batch_size):
            chunk = pairs[lo : lo + batch_size]
            xs = [torch.from_numpy(load_pair_arrays(p, downscale)[0]) for p in chunk]
            labels = [read_pnm(p.label_path) != 0 for p in chunk]
            x = torch.stack(xs)
            with _autocast(amp):
                logits = model(x)
            logits = logits.float()
            if logits.shape[2:] != labels[0].shape:
                logits = F.interpolate(
                    logits, size=labels[0].shape, mode="bilinear", align_corners=False
                )
            prob = torch.softmax(logits, dim=1)[:, 1]
            pred = (prob > threshold).numpy()
            for i, label in enumerate(labels):
                total += confusion(pred[i], label)
    if was_training:
        model.train()
    return miou_from_confusion(total)


def train_model(
    train_pairs: Sequence[SamplePair],
    test_pairs: Sequence[SamplePair],
    checkpoint_path,
    *,
    epochs: int = 40,
    batch_size: int = 100,
    base_lr: float = 5e-4,
    weight_decay: float = 2e-4,
    downscale: int = 1,
    seed: int = 0,
    metrics_log=None,
    amp: bool = True,
    split: tuple[float, float] = (0.8, 0.2),
) -> TrainReport:
    """Train on preloaded pair lists; saves the best-held-out checkpoint to
    checkpoint_path and optionally appends per-epoch rows to metrics_log."""
    checkpoint_path = Path(checkpoint_path)
    data = load_tensors(train_pairs, downscale)
    n = len(data)
    batch_size = min(batch_size, n)
    per_epoch = math.ceil(n / batch_size)
    total = epochs * per_epoch
    if total < 2:
        raise ValueError("run too short: need at least 2 batches overall")
    cfg = TrainerConfig(
        base_lr=base_lr,
        total_batches=total,
        batch_size=batch_size,
        weight_decay=weight_decay,
        epochs=epochs,
        warmup_batches=min(default_warmup(total), total - 1),
        split=split,
    )
    torch.manual_seed(seed)
    model = RegionNet(in_channels=3, classes=2)
    model.train()
    weights = class_weights(data.labels)
    log.info(
        "training on %d pairs (%d batches/epoch, %d total), class weights %s",
        n, per_epoch, total, [round(float(w), 3) for w in weights],
    )
    opt = torch.optim.Adam(model.parameters(), lr=base_lr, weight_decay=weight_decay)
    rng = np.random.default_rng(seed)

    log_fh = None
    if metrics_log is not None:
        log_fh = open(metrics_log, "w")
        log_fh.write("epoch,train_loss,test_miou,lr_end,best_miou\n")

    best_miou = -1.0
    best_epoch = 0
    history: list[EpochStats] = []
    step = 0
    try:
        for epoch in range(1, epochs + 1):
            order = rng.permutation(n)
            loss_sum = 0.0
            lr_now = cfg.base_lr
            for lo in range(0, n, batch_size):
                idx = torch.from_numpy(order[lo : lo + batch_size])
                lr_now = lr_schedule(step, cfg)
                for group in opt.param_groups:
                    group["lr"] = lr_now
                opt.zero_grad(set_to_none=True)
                with _autocast(amp):
                    logits = model(data.inputs[idx])
                loss = F.cross_entropy(logits.float(), data.labels[idx], weight=weights)
                loss.backward()
                opt.step()
                loss_sum += float(loss.detach()) * len(idx)
                step += 1
            train_loss = loss_sum / n
            test_miou = evaluate_pairs(model, test_pairs, downscale=downscale, amp=amp)
            history.append(EpochStats(epoch, train_loss, test_miou, lr_now))
            if test_miou > best_miou:
                best_miou = test_miou
                best_epoch = epoch
                save_checkpoint(model, checkpoint_path, downscale=downscale,
                                miou=test_miou, epoch=epoch, trainer=cfg)
            log.info(
                "epoch %d/%d loss %.4f miou %.4f (best %.4f @ %d)",
                epoch, epochs, train_loss, test_miou, best_miou, best_epoch,
            )
            if log_fh is not None:
                log_fh.write(
                    f"{epoch},{train_loss:.6f},{test_miou:.6f},{lr_now:.8f},{best_miou:.6f}\n"
                )
                log_fh.flush()
    finally:
        if log_fh is not None:
            log_fh.close()
    return TrainReport(
        best_miou=best_miou,
        best_epoch=best_epoch,
        history=tuple(history),
        checkpoint_path=checkpoint_path,
        train_size=len(train_pairs),
        test_size=len(test_pairs),
    )


def save_checkpoint(model: RegionNet, path, *, downscale: int, miou: float,
                    epoch: int, trainer: Optional[TrainerConfig] = None) -> None:
    payload = {
        "state_dict": model.state_dict(),
        "in_channels": 3,
        "classes": 2,
        "downscale": downscale,
        "miou": float(miou),
        "epoch": int(epoch),
    }
    if trainer is not None:
        payload["trainer"] = asdict(trainer)
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def run_training(
    manifests: Sequence,
    checkpoint_path,
    *,
    profile: str = "desk",
    epochs: Optional[int] = None,
    limit: Optional[int] = None,
    batch_size: Optional[int] = None,
    base_lr: float = 5e-4,
    weight_decay: float = 2e-4,
    downscale: int = 2,
    seed: int = 0,
    split: tuple[float, float] = (0.8, 0.2),
    metrics_log=None,
    amp: bool = True,
) -> TrainReport:
    """Manifest-level entry point: read, split, train."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    prof_epochs, prof_limit, prof_batch = PROFILES[profile]
    epochs = epochs if epochs is not None else prof_epochs
    limit = limit if limit is not None else prof_limit
    batch_size = batch_size if batch_size is not None else prof_batch
    report = read_manifest(manifests)
    if len(report.pairs) < MIN_MANIFEST_ROWS:
        raise ValueError(
            f"need at least {MIN_MANIFEST_ROWS} usable manifest rows, have {len(report.pairs)}"
        )
    train_pairs, test_pairs = split_pairs(report.pairs, split, seed, limit=limit)
    out = train_model(
        train_pairs,
        test_pairs,
        checkpoint_path,
        epochs=epochs,
        batch_size=batch_size,
        base_lr=base_lr,
        weight_decay=weight_decay,
        downscale=downscale,
        seed=seed,
        metrics_log=metrics_log,
        amp=amp,
        split=split,
    )
    return TrainReport(
        best_miou=out.best_miou,
        best_epoch=out.best_epoch,
        history=out.history,
        checkpoint_path=out.checkpoint_path,
        skipped_pairs=report.skipped,
        train_size=out.train_size,
        test_size=out.test_size,
    )
