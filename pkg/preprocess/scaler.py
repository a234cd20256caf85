"""Standard scaling of the continuous feature block, fitted on training records only."""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from sklearn import preprocessing

from datamodel.table import CohortTable
from errors import DataValidationError


@dataclass(frozen=True)
class StandardScaler:
    """Per-feature mean and population standard deviation of a fitted scikit-learn scaler."""

    mean: Tuple[float, ...]
    std: Tuple[float, ...]
    zero_std: Tuple[bool, ...]
    fitted_on: int

    def estimator(self) -> preprocessing.StandardScaler:
        """The fitted scikit-learn scaler these statistics describe."""
        scaler = preprocessing.StandardScaler()
        scaler.mean_ = np.asarray(self.mean, dtype=np.float64)
        scaler.scale_ = np.asarray(self.std, dtype=np.float64)
        scaler.var_ = np.where(self.zero_std, 0.0, np.square(scaler.scale_))
        scaler.n_features_in_ = len(self.mean)
        scaler.n_samples_seen_ = self.fitted_on
        return scaler

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Scale a (rows, features) array of continuous values.

        :param values:
        :return: scaled array
        """
        return self.estimator().transform(np.asarray(values, dtype=np.float64))

    def to_dict(self) -> Dict:
        """Serialize for checkpoints and reports."""
        return {
            "mean": list(self.mean),
            "std": list(self.std),
            "zero_std": list(self.zero_std),
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "StandardScaler":
        """Rebuild a scaler from ``to_dict`` output."""
        return cls(
            mean=tuple(float(value) for value in data["mean"]),
            std=tuple(float(value) for value in data["std"]),
            zero_std=tuple(bool(value) for value in data["zero_std"]),
            fitted_on=int(data["fitted_on"]),
        )


def continuous_matrix(table: CohortTable) -> np.ndarray:
    """Stack the continuous values of every record.

    :param table:
    :return: (records, continuous features) array
    """
    width = len(table.schema.continuous)
    if not table.records:
        return np.zeros((0, width))
    return np.array([record.continuous for record in table.records], dtype=np.float64)


def fit_scaler(train: CohortTable) -> StandardScaler:
    """Fit mean and population std on the training records.

    Features with zero spread keep std 1 and are flagged.

    :param train: training part of the split
    :return: StandardScaler
    """
    if len(train) == 0:
        raise DataValidationError("cannot fit a scaler on an empty table")
    fitted = preprocessing.StandardScaler().fit(continuous_matrix(train))
    zero_std = fitted.var_ == 0
    # scikit-learn already scales zero-variance columns by 1
    std = np.where(zero_std, 1.0, fitted.scale_)
    return StandardScaler(
        mean=tuple(float(value) for value in fitted.mean_),
        std=tuple(float(value) for value in std),
        zero_std=tuple(bool(flag) for flag in zero_std),
        fitted_on=len(train),
    )
