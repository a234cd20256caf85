"""Distribution of the continuous markers over days and environments."""

import logging
from typing import Sequence

import pandas as pd

from datamodel.constants import DAY_COLUMN, ENV_COLUMN
from datamodel.table import CohortTable
from errors import ConfigError
from evalkit.constants import AXIS_COLUMN, FEATURE_COLUMN, GROUP_COLUMN, QUANTILES, VALUE_COLUMN

logger = logging.getLogger(__name__)

SUMMARY_AXES = (DAY_COLUMN, ENV_COLUMN)


def marker_summary(table: CohortTable, axes: Sequence[str] = SUMMARY_AXES) -> pd.DataFrame:
    """Per-feature statistics of the raw continuous markers, one block per axis.

    Rows are ``axis,group,feature,count,mean,std,q25,median,q75`` where axis is
    "day" or "env" and group is the day number or environment tag. std is the
    sample standard deviation, NaN for groups of one record. Records without
    an environment tag are left out of the env block.

    :param table:
    :param axes: any of "day" and "env"
    :return: DataFrame in long format, features in schema order
    """
    unknown = [axis for axis in axes if axis not in SUMMARY_AXES]
    if unknown:
        raise ConfigError(f"cannot summarize markers by {unknown}, expected any of {SUMMARY_AXES}")
    names = table.schema.continuous_names
    long = table.to_frame().melt(
        id_vars=[DAY_COLUMN, ENV_COLUMN], value_vars=names, var_name=FEATURE_COLUMN, value_name=VALUE_COLUMN
    )
    long[FEATURE_COLUMN] = pd.Categorical(long[FEATURE_COLUMN], categories=names, ordered=True)

    blocks = []
    for axis in axes:
        if long[axis].isna().all():
            logger.info("no %s values, skipping that marker summary", axis)
            continue
        statistics = long.groupby([axis, FEATURE_COLUMN], observed=True)[VALUE_COLUMN].agg(
            count="count",
            mean="mean",
            std="std",
            **{name: (lambda values, q=q: values.quantile(q)) for name, q in QUANTILES.items()},
        )
        block = statistics.reset_index().rename(columns={axis: GROUP_COLUMN})
        block[GROUP_COLUMN] = block[GROUP_COLUMN].astype(str)
        block[FEATURE_COLUMN] = block[FEATURE_COLUMN].astype(str)
        block.insert(0, AXIS_COLUMN, axis)
        blocks.append(block)
    columns = [AXIS_COLUMN, GROUP_COLUMN, FEATURE_COLUMN, "count", "mean", "std", *QUANTILES]
    if not blocks:
        return pd.DataFrame(columns=columns)
    return pd.concat(blocks, ignore_index=True)[columns]
