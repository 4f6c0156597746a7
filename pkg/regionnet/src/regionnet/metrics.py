"""Segmentation metrics: binary confusion counts and mean IoU."""

from __future__ import annotations

import numpy as np


def confusion(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """2x2 count matrix indexed [truth, pred] over boolean masks."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    idx = truth.ravel().astype(np.int64) * 2 + pred.ravel().astype(np.int64)
    return np.bincount(idx, minlength=4).reshape(2, 2)


def miou_from_confusion(cm: np.ndarray) -> float:
    """Mean per-class IoU; a class missing from both prediction and truth
    contributes nothing to the mean."""
    cm = np.asarray(cm, dtype=np.int64)
    ious = []
    for c in (0, 1):
        tp = cm[c, c]
        union = cm[c, :].sum() + cm[:, c].sum() - tp
        if union > 0:
            ious.append(tp / union)
    if not ious:
        raise ValueError("empty confusion matrix")
    return float(np.mean(ious))


def miou(pred: np.ndarray, truth: np.ndarray) -> float:
    return miou_from_confusion(confusion(pred, truth))
