"""Target histories and the common interface of statistical forecasters."""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from datamodel.table import CohortTable
from errors import DataValidationError


@dataclass(frozen=True)
class SeriesView:
    """Target values of one patient on consecutive days, oldest first."""

    patient_id: str
    values: Tuple[float, ...]
    start_day: int = 1

    def __post_init__(self):
        """Reject non-finite values."""
        if not np.all(np.isfinite(self.values)):
            raise DataValidationError(f"series of {self.patient_id!r} has non-finite values")

    def __len__(self) -> int:
        """Number of observed days."""
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        """Values as a float array."""
        return np.asarray(self.values, dtype=np.float64)

    @property
    def next_day(self) -> int:
        """The day a forecast from this series is for."""
        return self.start_day + len(self.values)


def target_series(table: CohortTable) -> Dict[str, SeriesView]:
    """Full target series of every patient of a contiguous table."""
    days: Dict[str, List[int]] = {}
    values: Dict[str, List[float]] = {}
    for record in sorted(table.records, key=lambda item: (item.patient_id, item.day)):
        days.setdefault(record.patient_id, []).append(record.day)
        values.setdefault(record.patient_id, []).append(record.target)
    series = {}
    for patient, patient_days in days.items():
        if patient_days != list(range(patient_days[0], patient_days[0] + len(patient_days))):
            raise DataValidationError(f"target series of {patient!r} has gaps")
        series[patient] = SeriesView(patient, tuple(values[patient]), patient_days[0])
    return series


def history_before(series: SeriesView, day: int) -> SeriesView:
    """Prefix of a series ending the day before ``day``."""
    length = day - series.start_day
    if length < 1:
        raise DataValidationError(f"no history for {series.patient_id!r} before day {day}")
    return SeriesView(series.patient_id, series.values[:length], series.start_day)


class Forecaster:
    """Base class of one-step-ahead forecasters over target series."""

    name = "forecaster"

    def fit(self, series: Sequence[SeriesView]) -> "Forecaster":
        """Estimate parameters from training series.

        :param series:
        :return: self
        """
        return self

    def forecast(self, series: SeriesView) -> float:
        """Predict the value following ``series``."""
        raise NotImplementedError

    def predict(
        self, series: Dict[str, SeriesView], targets: Iterable[Tuple[str, int]]
    ) -> np.ndarray:
        """Forecast each (patient, day) target from the history before that day.

        :param series: full target series per patient
        :param targets: (patient id, day) pairs
        :return: one forecast per target
        """
        return np.array(
            [self.forecast(history_before(series[patient], day)) for patient, day in targets]
        )
