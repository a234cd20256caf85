"""Metrics reports, their aggregation over seeds and the method comparison table."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from datamodel.constants import DAY_COLUMN
from errors import DataValidationError
from evalkit.constants import (
    AVERAGE_GROUP,
    GROUP_COLUMN,
    LABEL_COLUMN,
    METHOD_COLUMN,
    METRICS,
    PREDICTION_COLUMN,
)
from evalkit.metrics import mae, per_time_mae, rmse


@dataclass
class MetricsReport:
    """Overall, per-group and per-day errors of one method, over one or more seeds.

    ``std`` mirrors ``overall``/``groups``/``per_time`` and is only set when
    the report aggregates at least two seeds.
    """

    overall: Dict[str, float]
    groups: Dict[str, Dict[str, float]]
    counts: Dict[str, int]
    per_time: Dict[int, float]
    seeds: List[int] = field(default_factory=list)
    std: Optional[Dict] = None

    @property
    def count(self) -> int:
        """Number of evaluated pairs."""
        return sum(self.counts.values())

    def to_dict(self) -> Dict:
        """Serialize for metrics.json."""
        data = {
            "overall": dict(self.overall),
            "groups": {group: dict(values) for group, values in self.groups.items()},
            "counts": dict(self.counts),
            "count": self.count,
            "per_time": {str(day): value for day, value in self.per_time.items()},
            "seeds": list(self.seeds),
        }
        if self.std is not None:
            data["std"] = {
                "overall": dict(self.std["overall"]),
                "groups": {group: dict(values) for group, values in self.std["groups"].items()},
                "per_time": {str(day): value for day, value in self.std["per_time"].items()},
            }
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "MetricsReport":
        """Rebuild a report from ``to_dict`` output."""
        std = data.get("std")
        if std is not None:
            std = {
                "overall": std["overall"],
                "groups": std["groups"],
                "per_time": {int(day): value for day, value in std["per_time"].items()},
            }
        return cls(
            overall=data["overall"],
            groups=data["groups"],
            counts=data["counts"],
            per_time={int(day): value for day, value in data["per_time"].items()},
            seeds=list(data.get("seeds", [])),
            std=std,
        )


def build_report(frame: pd.DataFrame, seed: Optional[int] = None) -> MetricsReport:
    """Compute a report from a prediction frame.

    :param frame: columns day, label, prediction, group
    :param seed: seed the predictions come from
    :return: MetricsReport
    """
    pred = frame[PREDICTION_COLUMN].to_numpy(dtype=np.float64)
    label = frame[LABEL_COLUMN].to_numpy(dtype=np.float64)
    groups, counts = {}, {}
    for group, part in frame.groupby(GROUP_COLUMN, sort=True):
        part_pred = part[PREDICTION_COLUMN].to_numpy(dtype=np.float64)
        part_label = part[LABEL_COLUMN].to_numpy(dtype=np.float64)
        groups[str(group)] = {"rmse": rmse(part_pred, part_label), "mae": mae(part_pred, part_label)}
        counts[str(group)] = len(part)
    return MetricsReport(
        overall={"rmse": rmse(pred, label), "mae": mae(pred, label)},
        groups=groups,
        counts=counts,
        per_time=per_time_mae(pred, label, frame[DAY_COLUMN].to_numpy()),
        seeds=[] if seed is None else [seed],
    )


def _mean_std(values: List[float]):
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def aggregate_seeds(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Cell-wise mean and population standard deviation over per-seed reports.

    :param reports: reports with identical groups and days
    :return: MetricsReport with ``std`` set when there are at least two reports
    """
    if not reports:
        raise DataValidationError("no report to aggregate")
    first = reports[0]
    for report in reports[1:]:
        if set(report.groups) != set(first.groups):
            raise DataValidationError(
                f"reports have different groups: {sorted(first.groups)} vs {sorted(report.groups)}"
            )
        if set(report.per_time) != set(first.per_time):
            raise DataValidationError("reports cover different days")

    mean: Dict = {"overall": {}, "groups": {}, "per_time": {}}
    std: Dict = {"overall": {}, "groups": {}, "per_time": {}}
    for metric in METRICS:
        mean["overall"][metric], std["overall"][metric] = _mean_std(
            [report.overall[metric] for report in reports]
        )
    for group in first.groups:
        mean["groups"][group], std["groups"][group] = {}, {}
        for metric in METRICS:
            mean["groups"][group][metric], std["groups"][group][metric] = _mean_std(
                [report.groups[group][metric] for report in reports]
            )
    for day in first.per_time:
        mean["per_time"][day], std["per_time"][day] = _mean_std(
            [report.per_time[day] for report in reports]
        )
    return MetricsReport(
        overall=mean["overall"],
        groups=mean["groups"],
        counts=dict(first.counts),
        per_time=mean["per_time"],
        seeds=[seed for report in reports for seed in report.seeds],
        std=std if len(reports) >= 2 else None,
    )


def comparison_table(reports: Dict[str, MetricsReport]) -> pd.DataFrame:
    """One row per method with ``<group>_<metric>_mean`` and, over >= 2 seeds, ``_std`` columns.

    :param reports: aggregated report per method, in display order
    :return: DataFrame
    """
    rows = []
    for method, report in reports.items():
        row: Dict = {METHOD_COLUMN: method}
        cells = [(AVERAGE_GROUP, report.overall, report.std and report.std["overall"])]
        cells += [
            (group, values, report.std and report.std["groups"][group])
            for group, values in sorted(report.groups.items())
        ]
        for group, values, deviations in cells:
            for metric in METRICS:
                row[f"{group}_{metric}_mean"] = values[metric]
                if deviations:
                    row[f"{group}_{metric}_std"] = deviations[metric]
        rows.append(row)
    return pd.DataFrame(rows)
