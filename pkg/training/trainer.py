"""Invariant training loop: task loss plus the intervention-based invariance loss."""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import torch

from datamodel.schema import FeatureSchema
from dygraph.batch import GraphTensors
from dygraph.config import ModelConfig
from dygraph.network import DisentangledDynamicGraphNet, DisentangledState, build_model
from errors import DataValidationError, TrainingError
from training.config import TrainConfig
from training.constants import EPOCH_SEED_STRIDE, LOG_EVERY, STOP_EARLY, STOP_MAX_EPOCHS
from training.intervention import SAMPLERS
from training.losses import invariance_loss, task_loss

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    """Losses of one epoch and the validation MAE after its update."""

    epoch: int
    task_loss: float
    inv_loss: float
    val_mae: float

    def to_dict(self) -> Dict:
        """Serialize as one history line."""
        return asdict(self)


@dataclass
class TrainHistory:
    """Per-epoch records, best epoch and why training stopped."""

    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: Optional[str] = None

    @property
    def best_val_mae(self) -> float:
        """Validation MAE of the best epoch."""
        return min(record.val_mae for record in self.records)

    def to_dict(self) -> Dict:
        """Serialize the summary fields."""
        return {
            "epochs": len(self.records),
            "best_epoch": self.best_epoch,
            "best_val_mae": self.best_val_mae,
            "stop_reason": self.stop_reason,
        }


@dataclass
class TrainResult:
    """Model restored at its best epoch, the training history and the invariance weight used."""

    model: DisentangledDynamicGraphNet
    history: TrainHistory
    lam: float


def write_history(history: TrainHistory, path: Path) -> Path:
    """Write one json line per epoch.

    :param history:
    :param path:
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(record.to_dict()) for record in history.records]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def read_history(path: Path) -> List[EpochRecord]:
    """Read the per-epoch records written by ``write_history``."""
    with Path(path).open(encoding="utf-8") as handle:
        return [EpochRecord(**json.loads(line)) for line in handle if line.strip()]


def parameter_groups(model: torch.nn.Module, weight_decay: float) -> List[Dict]:
    """Split trainable parameters into decayed and undecayed groups.

    Layer-normalization parameters and the feed-forward gates are not decayed.

    :param model:
    :param weight_decay:
    :return: optimizer parameter groups
    """
    exempt = set()
    for module in model.modules():
        if isinstance(module, torch.nn.LayerNorm):
            exempt.update(id(parameter) for parameter in module.parameters())
    for name, parameter in model.named_parameters():
        if name.endswith("alpha"):
            exempt.add(id(parameter))

    decay, no_decay = [], []
    for parameter in model.parameters():
        if not parameter.requires_grad:
            continue
        (no_decay if id(parameter) in exempt else decay).append(parameter)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def sampling_seed(seed: int, epoch: int) -> int:
    """Seed of the variant-pattern sampler at a given epoch."""
    return seed * EPOCH_SEED_STRIDE + epoch


def mixed_losses(
    model: DisentangledDynamicGraphNet,
    state: DisentangledState,
    tensors: GraphTensors,
    replacements: List[torch.Tensor],
) -> List[torch.Tensor]:
    """Mixed-head losses after intervening with each replacement.

    :param model:
    :param state: forward state of ``tensors``
    :param tensors:
    :param replacements: variant patterns to substitute
    :return: one loss per replacement
    """
    labels = tensors.scaled_labels
    losses = []
    for replacement in replacements:
        intervened = state.intervene(replacement)
        source = tensors.target_source
        predictions = model.predict_mixed(
            intervened.final_invariant[source], intervened.final_variant[source]
        )
        losses.append(task_loss(predictions, labels))
    return losses


def objective(
    model: DisentangledDynamicGraphNet, tensors: GraphTensors, config: TrainConfig, epoch: int
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Compute L_task + lambda * L_inv for one epoch.

    With lambda = 0 the objective is L_task itself; the invariance loss is
    still reported when the model has a mixed head.

    :param model:
    :param tensors: training graph
    :param config:
    :param epoch: 1-based epoch index, folded into the sampling seed
    :return: (objective, task loss, invariance loss)
    """
    if tensors.target_source.numel() == 0:
        raise DataValidationError("the training graph has no labelled target")
    output = model(tensors)
    loss_task = task_loss(output.predictions, tensors.scaled_labels)
    if model.mixed_head is None:
        return loss_task, loss_task, torch.zeros_like(loss_task)

    sampler = SAMPLERS[config.intervention]
    replacements = sampler(
        output.state, tensors.presence, config.samples, sampling_seed(config.seed, epoch)
    )
    loss_inv = invariance_loss(mixed_losses(model, output.state, tensors, replacements))
    if config.lam == 0:
        return loss_task, loss_task, loss_inv
    return loss_task + config.lam * loss_inv, loss_task, loss_inv


@torch.no_grad()
def evaluate_mae(model: DisentangledDynamicGraphNet, tensors: GraphTensors) -> float:
    """MAE of the invariant head on a graph, in measurement units."""
    if tensors.target_source.numel() == 0:
        raise DataValidationError("the evaluation graph has no labelled target")
    model.eval()
    predictions = tensors.unscale(model(tensors).predictions)
    return float((predictions - tensors.target_label).abs().mean())


def train(
    model_config: ModelConfig,
    train_config: TrainConfig,
    schema: FeatureSchema,
    train_tensors: GraphTensors,
    val_tensors: GraphTensors,
) -> TrainResult:
    """Train a model and restore the parameters of its best validation epoch.

    :param model_config: architecture, seeded by its own ``seed``
    :param train_config: optimizer and objective settings
    :param schema: feature schema of both graphs
    :param train_tensors: training graph
    :param val_tensors: validation graph
    :return: TrainResult
    """
    lam = 0.0 if model_config.entangled else train_config.lam
    config = train_config.with_changes(lam=lam)
    model = build_model(model_config, schema)
    optimizer = torch.optim.AdamW(parameter_groups(model, config.weight_decay), lr=config.lr)

    history = TrainHistory()
    best_mae = math.inf
    best_state = {name: value.detach().clone() for name, value in model.state_dict().items()}
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        model.train()
        optimizer.zero_grad()
        total, loss_task, loss_inv = objective(model, train_tensors, config, epoch)
        if not torch.isfinite(total):
            raise TrainingError("non-finite training loss", epoch)
        total.backward()
        optimizer.step()

        val_mae = evaluate_mae(model, val_tensors)
        if not math.isfinite(val_mae):
            raise TrainingError("non-finite validation MAE", epoch)
        record = EpochRecord(epoch, loss_task.item(), loss_inv.item(), val_mae)
        history.records.append(record)
        logger.debug("epoch %d: %s", epoch, record)
        if epoch % LOG_EVERY == 0:
            logger.info(
                "epoch %d task %.4f inv %.4f val MAE %.4f", epoch, record.task_loss, record.inv_loss, val_mae
            )

        if val_mae < best_mae:
            best_mae, history.best_epoch, since_best = val_mae, epoch, 0
            best_state = {name: value.detach().clone() for name, value in model.state_dict().items()}
        else:
            since_best += 1
        if since_best >= config.patience:
            history.stop_reason = STOP_EARLY
            break
    else:
        history.stop_reason = STOP_MAX_EPOCHS

    model.load_state_dict(best_state)
    model.eval()
    logger.info(
        "training stopped (%s) after %d epochs, best epoch %d with val MAE %.4f",
        history.stop_reason,
        len(history.records),
        history.best_epoch,
        best_mae,
    )
    return TrainResult(model=model, history=history, lam=lam)
