"""Selection of the invariance weight on the validation graph."""

import logging
from typing import Optional, Sequence

from datamodel.schema import FeatureSchema
from dygraph.batch import GraphTensors
from dygraph.config import ModelConfig
from errors import ConfigError
from training.config import TrainConfig
from training.constants import LAMBDA_SWEEP
from training.trainer import TrainResult, train

logger = logging.getLogger(__name__)


def select_lambda(
    model_config: ModelConfig,
    train_config: TrainConfig,
    schema: FeatureSchema,
    train_tensors: GraphTensors,
    val_tensors: GraphTensors,
    grid: Optional[Sequence[float]] = None,
) -> TrainResult:
    """Train once per lambda and keep the run with the lowest best validation MAE.

    Ties keep the earlier lambda of the grid.

    :param grid: candidate lambdas, (0.1, 1, 10) by default
    :return: the selected TrainResult
    """
    grid = list(LAMBDA_SWEEP if grid is None else grid)
    if not grid:
        raise ConfigError("the lambda grid is empty")
    selected: Optional[TrainResult] = None
    for lam in grid:
        result = train(
            model_config, train_config.with_changes(lam=lam), schema, train_tensors, val_tensors
        )
        logger.info("lambda %g: best val MAE %.4f", lam, result.history.best_val_mae)
        if selected is None or result.history.best_val_mae < selected.history.best_val_mae:
            selected = result
    assert selected is not None
    logger.info("selected lambda %g", selected.lam)
    return selected
