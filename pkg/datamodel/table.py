"""Long-format cohort records and their CSV ingestion."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from datamodel.constants import DAY_COLUMN, ENV_COLUMN, PATIENT_COLUMN
from datamodel.schema import FeatureSchema
from errors import DataValidationError, SchemaError, UniquenessError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CohortRecord:
    """Features and target of one patient on one day."""

    patient_id: str
    day: int
    continuous: Tuple[float, ...]
    categorical: Tuple[int, ...]
    target: float
    env: Optional[str] = None


@dataclass(frozen=True)
class CohortTable:
    """Validated collection of cohort records sharing one schema."""

    schema: FeatureSchema
    records: Tuple[CohortRecord, ...]

    def __post_init__(self):
        """Check key uniqueness, category ranges and per-patient day contiguity."""
        validate_records(self.schema, self.records)

    def __len__(self) -> int:
        """Return the number of records."""
        return len(self.records)

    @property
    def patients(self) -> List[str]:
        """Patient ids in order of first appearance."""
        return list(dict.fromkeys(record.patient_id for record in self.records))

    @property
    def days(self) -> List[int]:
        """Sorted distinct day indices."""
        return sorted({record.day for record in self.records})

    @property
    def environments(self) -> List[Optional[str]]:
        """Environment tag of each record."""
        return [record.env for record in self.records]

    def subset(self, keep) -> "CohortTable":
        """Return a table with the records satisfying ``keep``.

        :param keep: predicate over CohortRecord
        :return: CohortTable
        """
        return CohortTable(self.schema, tuple(r for r in self.records if keep(r)))

    def target_history(self) -> Dict[str, Dict[int, float]]:
        """Map each patient to its day -> target values."""
        history: Dict[str, Dict[int, float]] = {}
        for record in self.records:
            history.setdefault(record.patient_id, {})[record.day] = record.target
        return history

    def to_frame(self) -> pd.DataFrame:
        """Render the table in the cohort CSV column layout."""
        schema = self.schema
        rows = []
        for record in self.records:
            row = {
                PATIENT_COLUMN: record.patient_id,
                DAY_COLUMN: record.day,
                ENV_COLUMN: record.env,
            }
            row.update(zip(schema.continuous_names, record.continuous))
            row.update(zip(schema.categorical_names, record.categorical))
            rows.append(row)
        columns = [PATIENT_COLUMN, DAY_COLUMN, ENV_COLUMN] + schema.feature_names
        return pd.DataFrame(rows, columns=columns)


def validate_records(schema: FeatureSchema, records: Tuple[CohortRecord, ...]) -> None:
    """Validate records against the schema and the table invariants.

    :param schema:
    :param records:
    :return: None
    """
    seen: Dict[Tuple[str, int], int] = {}
    days: Dict[str, List[int]] = {}
    cardinalities = schema.cardinalities
    for row, record in enumerate(records):
        key = (record.patient_id, record.day)
        if key in seen:
            raise UniquenessError(
                f"row {row}: duplicated (patient, day) = {key}, first seen at row {seen[key]}"
            )
        seen[key] = row
        if record.day < 1:
            raise DataValidationError(f"row {row}: day must be >= 1, got {record.day}")
        if len(record.continuous) != len(schema.continuous):
            raise SchemaError(f"row {row}: expected {len(schema.continuous)} continuous values")
        if len(record.categorical) != len(cardinalities):
            raise SchemaError(f"row {row}: expected {len(cardinalities)} categorical values")
        for name, index, cardinality in zip(
            schema.categorical_names, record.categorical, cardinalities
        ):
            if not 0 <= index < cardinality:
                raise DataValidationError(
                    f"row {row}: categorical {name!r}={index} outside [0, {cardinality})"
                )
        days.setdefault(record.patient_id, []).append(record.day)

    for patient, patient_days in days.items():
        ordered = sorted(patient_days)
        if ordered[-1] - ordered[0] + 1 != len(ordered):
            raise DataValidationError(
                f"patient {patient!r}: days {ordered} are not a contiguous range"
            )


def table_from_frame(frame: pd.DataFrame, schema: FeatureSchema) -> CohortTable:
    """Validate a cohort data frame and convert it to a CohortTable.

    :param frame: data frame in the cohort CSV layout
    :param schema:
    :return: CohortTable
    """
    required = [PATIENT_COLUMN, DAY_COLUMN] + schema.feature_names
    for column in required:
        if column not in frame.columns:
            raise SchemaError(f"missing column {column!r}")

    numeric = {}
    for column in [DAY_COLUMN] + schema.feature_names:
        values = pd.to_numeric(frame[column], errors="coerce")
        bad = np.flatnonzero(values.isna().to_numpy())
        if len(bad):
            raise DataValidationError(
                f"row {int(bad[0])}: column {column!r} is missing or non-numeric"
            )
        numeric[column] = values.to_numpy()

    for column in [DAY_COLUMN] + schema.categorical_names:
        values = numeric[column]
        bad = np.flatnonzero(values != np.round(values))
        if len(bad):
            raise DataValidationError(
                f"row {int(bad[0])}: column {column!r} must hold integers"
            )

    envs = frame[ENV_COLUMN] if ENV_COLUMN in frame.columns else None
    target_index = schema.target_index
    records = []
    for row in range(len(frame)):
        continuous = tuple(float(numeric[name][row]) for name in schema.continuous_names)
        env = None
        if envs is not None and not pd.isna(envs.iloc[row]):
            env = str(envs.iloc[row])
        records.append(
            CohortRecord(
                patient_id=str(frame[PATIENT_COLUMN].iloc[row]),
                day=int(numeric[DAY_COLUMN][row]),
                continuous=continuous,
                categorical=tuple(int(numeric[name][row]) for name in schema.categorical_names),
                target=continuous[target_index],
                env=env,
            )
        )
    return CohortTable(schema, tuple(records))


def load_cohort(path: Path, schema: FeatureSchema) -> CohortTable:
    """Load and validate a cohort CSV file.

    :param path: cohort CSV path
    :param schema:
    :return: CohortTable
    """
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"cohort file not found: {path}")
    frame = pd.read_csv(
        path, dtype={PATIENT_COLUMN: str, ENV_COLUMN: str}, encoding="utf-8", float_precision="round_trip"
    )
    table = table_from_frame(frame, schema)
    logger.info(
        "loaded %s records for %s patients from %s", len(table), len(table.patients), path
    )
    return table


def save_cohort(table: CohortTable, path: Path) -> Path:
    """Write a cohort CSV file.

    :param table:
    :param path:
    :return: the written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_frame().to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path
