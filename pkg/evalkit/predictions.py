"""Prediction frames of the model and the statistical baselines."""

from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from baselines.base import Forecaster, target_series
from datamodel.constants import DAY_COLUMN, DISEASE_LABELS, PATIENT_COLUMN
from datamodel.table import CohortTable
from dygraph.batch import GraphTensors
from dygraph.network import DisentangledDynamicGraphNet
from errors import ConfigError
from evalkit.constants import GROUP_COLUMN, GROUP_ENV, LABEL_COLUMN, PREDICTION_COLUMN

DISEASE_COLUMN = "Disease"


def target_keys(tensors: GraphTensors) -> List[Tuple[str, int]]:
    """(patient, day) of every target of a tensorized graph."""
    return [(node, int(day)) for node, day in zip(tensors.target_node, tensors.target_time)]


def group_labels(
    table: CohortTable, keys: Sequence[Tuple[str, int]], group_by: str = GROUP_ENV
) -> List[str]:
    """Group of each (patient, day): its environment tag or a categorical column.

    :param table: cohort holding the keys
    :param keys: (patient, day) pairs
    :param group_by: "env" or the name of a categorical feature
    :return: one label per key
    """
    records = {(record.patient_id, record.day): record for record in table.records}
    if group_by == GROUP_ENV:
        return [str(records[key].env) for key in keys]
    names = table.schema.categorical_names
    if group_by not in names:
        raise ConfigError(f"cannot group by {group_by!r}: not 'env' nor a categorical feature")
    column = names.index(group_by)
    labels = []
    for key in keys:
        index = records[key].categorical[column]
        if group_by == DISEASE_COLUMN and index < len(DISEASE_LABELS):
            labels.append(DISEASE_LABELS[index])
        else:
            labels.append(f"{group_by}={index}")
    return labels


def prediction_frame(
    keys: Sequence[Tuple[str, int]], labels, predictions, groups: Sequence[str]
) -> pd.DataFrame:
    """Assemble a frame sorted by patient and day.

    :return: DataFrame with columns patient_id, day, label, prediction, group
    """
    frame = pd.DataFrame(
        {
            PATIENT_COLUMN: [key[0] for key in keys],
            DAY_COLUMN: [key[1] for key in keys],
            LABEL_COLUMN: np.asarray(labels, dtype=np.float64),
            PREDICTION_COLUMN: np.asarray(predictions, dtype=np.float64),
            GROUP_COLUMN: list(groups),
        }
    )
    return frame.sort_values([PATIENT_COLUMN, DAY_COLUMN], kind="stable").reset_index(drop=True)


@torch.no_grad()
def model_predictions(
    model: DisentangledDynamicGraphNet,
    tensors: GraphTensors,
    table: CohortTable,
    group_by: str = GROUP_ENV,
) -> pd.DataFrame:
    """Predict every target of a graph with the invariant head, in measurement units."""
    model.eval()
    predictions = tensors.unscale(model(tensors).predictions).numpy()
    keys = target_keys(tensors)
    return prediction_frame(
        keys, tensors.target_label.numpy(), predictions, group_labels(table, keys, group_by)
    )


def baseline_predictions(
    forecaster: Forecaster,
    train_table: CohortTable,
    table: CohortTable,
    keys: Sequence[Tuple[str, int]],
    group_by: str = GROUP_ENV,
) -> pd.DataFrame:
    """Fit a forecaster on the training series and forecast the given targets.

    :param forecaster:
    :param train_table: training part, used for fitting
    :param table: full cohort, whose history precedes each target
    :param keys: (patient, day) targets
    :param group_by:
    :return: prediction frame
    """
    forecaster.fit(list(target_series(train_table).values()))
    series = target_series(table)
    labels: Dict[Tuple[str, int], float] = {
        (record.patient_id, record.day): record.target for record in table.records
    }
    predictions = forecaster.predict(series, keys)
    return prediction_frame(
        keys, [labels[key] for key in keys], predictions, group_labels(table, keys, group_by)
    )
