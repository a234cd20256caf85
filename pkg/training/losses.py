"""Task, mixed and invariance losses."""

from typing import Optional, Sequence

import torch

from errors import DataValidationError


def task_loss(
    predictions: torch.Tensor, labels: torch.Tensor, mask: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Mean squared error over the masked-in pairs.

    :param predictions:
    :param labels:
    :param mask: boolean mask, all pairs when omitted
    :return: scalar tensor
    """
    if predictions.shape != labels.shape:
        raise ValueError(f"shape mismatch: {tuple(predictions.shape)} vs {tuple(labels.shape)}")
    if mask is None:
        mask = torch.ones_like(labels, dtype=torch.bool)
    if not bool(mask.any()):
        raise DataValidationError("no labelled pair to compute a loss on")
    return ((predictions[mask] - labels[mask]) ** 2).mean()


def invariance_loss(mixed_losses: Sequence[torch.Tensor]) -> torch.Tensor:
    """Mean plus population variance of the mixed losses over the sampled variant patterns."""
    if not len(mixed_losses):
        raise ValueError("invariance loss needs at least one mixed loss")
    stacked = torch.stack([torch.as_tensor(loss) for loss in mixed_losses])
    return stacked.mean() + stacked.var(correction=0)
