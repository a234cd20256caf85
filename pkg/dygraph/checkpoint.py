"""Checkpoint layout.

A checkpoint is a single ``torch.save`` file holding a dict with keys
``state_dict`` (named parameter and buffer tensors), ``model_config``,
``schema``, ``scaler`` (all plain dicts), ``seed``, ``method`` and the tool
``version``.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict

import torch

from datamodel.schema import FeatureSchema
from dygraph.config import ModelConfig
from dygraph.network import DisentangledDynamicGraphNet
from errors import ArtifactError
from preprocess.scaler import StandardScaler
from settings import VERSION

logger = logging.getLogger(__name__)


@dataclass
class LoadedCheckpoint:
    """A restored model with the preprocessing it was trained with."""

    model: DisentangledDynamicGraphNet
    scaler: StandardScaler
    seed: int
    method: str
    version: str


def save_checkpoint(
    path: Path, model: DisentangledDynamicGraphNet, scaler: StandardScaler, method: str
) -> Path:
    """Write a model checkpoint.

    :param path: target file
    :param model: trained network
    :param scaler: scaler fitted on the training part
    :param method: method name (full, erm, entangled)
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: Dict = {
        "state_dict": model.state_dict(),
        "model_config": model.config.to_dict(),
        "schema": model.schema.to_dict(),
        "scaler": scaler.to_dict(),
        "seed": model.config.seed,
        "method": method,
        "version": VERSION,
    }
    torch.save(payload, path)
    logger.info("checkpoint written to %s", path)
    return path


def load_checkpoint(path: Path) -> LoadedCheckpoint:
    """Restore a checkpoint written by ``save_checkpoint``.

    :param path:
    :return: LoadedCheckpoint
    """
    path = Path(path)
    if not path.is_file():
        raise ArtifactError("checkpoint not found", str(path))
    payload = torch.load(path, weights_only=True)
    model = DisentangledDynamicGraphNet(
        ModelConfig.from_dict(payload["model_config"]),
        FeatureSchema.from_dict(payload["schema"]),
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return LoadedCheckpoint(
        model=model,
        scaler=StandardScaler.from_dict(payload["scaler"]),
        seed=int(payload["seed"]),
        method=payload["method"],
        version=payload["version"],
    )
