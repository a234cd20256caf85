"""Error metrics over masked prediction/label pairs."""

from typing import Dict, Optional, Tuple

import numpy as np

from errors import DataValidationError


def masked_pairs(
    pred, label, mask: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Return the masked-in predictions and labels, raising when none is left."""
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    if pred.shape != label.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {label.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        pred, label = pred[mask], label[mask]
    if pred.size == 0:
        raise DataValidationError("no labelled pair to evaluate")
    return pred, label


def rmse(pred, label, mask=None) -> float:
    """Root mean squared error."""
    pred, label = masked_pairs(pred, label, mask)
    return float(np.sqrt(np.mean((pred - label) ** 2)))


def mae(pred, label, mask=None) -> float:
    """Mean absolute error."""
    pred, label = masked_pairs(pred, label, mask)
    return float(np.mean(np.abs(pred - label)))


def per_time_mae(pred, label, days, mask=None) -> Dict[int, float]:
    """MAE of each day; days without a masked-in pair are omitted.

    :param pred:
    :param label:
    :param days: day of every pair
    :param mask:
    :return: ordered mapping day -> MAE
    """
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    days = np.asarray(days)
    keep = np.ones(pred.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    curve = {}
    for day in np.unique(days[keep]):
        selected = keep & (days == day)
        curve[int(day)] = float(np.mean(np.abs(pred[selected] - label[selected])))
    return curve
