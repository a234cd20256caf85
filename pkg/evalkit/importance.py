"""Gradient saliency of input features per day."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import torch

from datamodel.constants import DAY_COLUMN
from dygraph.batch import GraphTensors
from dygraph.network import DisentangledDynamicGraphNet
from errors import DataValidationError
from evalkit.constants import FEATURE_COLUMN, IMPORTANCE_COLUMN

logger = logging.getLogger(__name__)


@dataclass
class ImportanceTable:
    """Non-negative importance of each feature (rows) at each labelled day (columns)."""

    features: List[str]
    days: List[int]
    values: np.ndarray

    def __post_init__(self):
        """Check the shape and sign of the matrix."""
        if self.values.shape != (len(self.features), len(self.days)):
            raise ValueError(f"importance matrix has shape {self.values.shape}")
        if np.any(self.values < 0):
            raise ValueError("importance values must be non-negative")

    def mean_importance(self) -> Dict[str, float]:
        """Importance of each feature averaged over days."""
        return dict(zip(self.features, self.values.mean(axis=1).tolist()))

    def ranking(self, features: Optional[Sequence[str]] = None) -> List[str]:
        """Features by decreasing mean importance, optionally restricted to ``features``."""
        means = self.mean_importance()
        names = list(features) if features is not None else self.features
        return sorted(names, key=lambda name: -means[name])

    def to_frame(self) -> pd.DataFrame:
        """Long format with columns feature, day, importance."""
        rows = [
            {FEATURE_COLUMN: feature, DAY_COLUMN: day, IMPORTANCE_COLUMN: float(self.values[i, j])}
            for i, feature in enumerate(self.features)
            for j, day in enumerate(self.days)
        ]
        return pd.DataFrame(rows, columns=[FEATURE_COLUMN, DAY_COLUMN, IMPORTANCE_COLUMN])


def feature_importance(
    model: DisentangledDynamicGraphNet,
    tensors: GraphTensors,
    patients: Optional[Sequence[str]] = None,
) -> ImportanceTable:
    """Mean absolute gradient of each target's loss w.r.t. the inputs it is predicted from.

    For a target (n, t) the loss (f(z_I) - y)^2 is differentiated w.r.t. the
    embedded input of node n at the previous snapshot. Continuous features
    read the absolute gradient of their scaled value, categorical features the
    mean absolute gradient over their embedding dimensions. Values are then
    averaged over patients per target day.

    :param model: trained network
    :param tensors: labelled graph
    :param patients: restrict to these patients
    :return: ImportanceTable
    """
    schema = model.schema
    width = len(schema.continuous)
    embed = model.config.cat_embed_dim
    wanted = set(patients or ())
    selected = [
        index for index, node in enumerate(tensors.target_node) if not wanted or node in wanted
    ]
    if not selected:
        raise DataValidationError("no labelled target for the requested patients")

    model.eval()
    with torch.enable_grad():
        embedded = model.embed_inputs(tensors.features).detach().requires_grad_(True)
        predictions = model(tensors, embedded=embedded).predictions
        labels = tensors.scaled_labels
        flat_gradients = []
        for position, index in enumerate(selected):
            loss = (predictions[index] - labels[index]) ** 2
            (gradient,) = torch.autograd.grad(
                loss, embedded, retain_graph=position < len(selected) - 1
            )
            flat_gradients.append(gradient.reshape(tensors.n_positions, -1)[tensors.target_source[index]])

    magnitudes = torch.stack(flat_gradients).abs().detach().numpy()
    per_feature = [magnitudes[:, :width]]
    for column in range(len(schema.categorical)):
        start = width + column * embed
        per_feature.append(magnitudes[:, start:start + embed].mean(axis=1, keepdims=True))
    scores = np.concatenate(per_feature, axis=1)

    target_days = np.asarray(tensors.target_time)[selected]
    days = sorted(int(day) for day in np.unique(target_days))
    values = np.stack([scores[target_days == day].mean(axis=0) for day in days], axis=1)
    logger.info("importance computed over %d targets and %d days", len(selected), len(days))
    return ImportanceTable(features=schema.feature_names, days=days, values=values)
