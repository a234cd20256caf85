"""CSV and json writers for evaluation artifacts."""

import logging
from pathlib import Path
from typing import Dict, Iterable, List

import pandas as pd

from datamodel.constants import DAY_COLUMN, PATIENT_COLUMN
from evalkit.constants import (
    LABEL_COLUMN,
    MAE_COLUMN,
    PREDICTION_COLUMN,
    SHOWCASE_DIR,
)
from evalkit.importance import ImportanceTable
from evalkit.report import MetricsReport
from utils import sanitize_name, write_json

logger = logging.getLogger(__name__)


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a frame without index and with unix line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("wrote %s", path)
    return path


def write_metrics(reports: Dict[str, MetricsReport], path: Path) -> Path:
    """Write the aggregated report of every method to one json file."""
    return write_json(path, {method: report.to_dict() for method, report in reports.items()})


def write_per_time(report: MetricsReport, path: Path) -> Path:
    """Write the per-day MAE curve as ``day,mae``."""
    frame = pd.DataFrame(
        {DAY_COLUMN: list(report.per_time), MAE_COLUMN: list(report.per_time.values())},
        columns=[DAY_COLUMN, MAE_COLUMN],
    )
    return write_csv(frame, path)


def write_importance(table: ImportanceTable, path: Path) -> Path:
    """Write an importance table as ``feature,day,importance``."""
    return write_csv(table.to_frame(), path)


def write_showcase(frame: pd.DataFrame, patients: Iterable[str], directory: Path) -> List[Path]:
    """Write ``showcase/<patient>.csv`` with ``day,label,prediction`` for each requested patient.

    :param frame: prediction frame
    :param patients:
    :param directory: run or method directory
    :return: written paths
    """
    written = []
    for patient in patients:
        rows = frame[frame[PATIENT_COLUMN] == patient]
        if rows.empty:
            logger.warning("no prediction for showcase patient %s", patient)
            continue
        path = Path(directory) / SHOWCASE_DIR / f"{sanitize_name(patient)}.csv"
        written.append(write_csv(rows[[DAY_COLUMN, LABEL_COLUMN, PREDICTION_COLUMN]], path))
    return written
