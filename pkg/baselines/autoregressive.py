"""Autoregressive forecaster fitted by ordinary least squares."""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from baselines.base import Forecaster, SeriesView
from baselines.constants import AR_ORDER, METHOD_AR
from errors import ConfigError, DataValidationError

logger = logging.getLogger(__name__)


def lagged_design(values: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows [1, y_{t-1}, ..., y_{t-p}] and responses y_t of one series.

    :param values:
    :param order: p
    :return: (design, response)
    """
    rows = len(values) - order
    if rows <= 0:
        return np.empty((0, order + 1)), np.empty(0)
    design = np.ones((rows, order + 1))
    for lag in range(1, order + 1):
        design[:, lag] = values[order - lag:len(values) - lag]
    return design, values[order:]


def solve_least_squares(design: np.ndarray, response: np.ndarray) -> np.ndarray:
    """Solve the normal equations, falling back to the pseudo-inverse when rank deficient."""
    gram = design.T @ design
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        return np.linalg.pinv(design) @ response
    return np.linalg.solve(gram, design.T @ response)


def ar_fit(series: SeriesView, order: int = AR_ORDER) -> np.ndarray:
    """Fit y_t ~ c + sum_i phi_i y_{t-i} on one series.

    :param series:
    :param order: p
    :return: coefficients (c, phi_1, ..., phi_p)
    """
    if order < 1:
        raise ConfigError(f"autoregressive order must be >= 1, got {order}")
    if len(series) < order + 2:
        raise DataValidationError(
            f"an AR({order}) fit needs at least {order + 2} values, got {len(series)}"
        )
    return solve_least_squares(*lagged_design(series.array, order))


def ar_forecast(series: SeriesView, coefficients: np.ndarray) -> float:
    """One-step forecast c + sum_i phi_i y_{T+1-i}."""
    order = len(coefficients) - 1
    if len(series) < order:
        raise DataValidationError(f"an AR({order}) forecast needs {order} values, got {len(series)}")
    recent = series.array[::-1][:order]
    return float(coefficients[0] + coefficients[1:] @ recent)


class AutoregressiveForecaster(Forecaster):
    """AR(p) fitted by OLS pooled over all training series.

    Short histories use the largest order they allow; histories shorter
    than 2 values forecast their last value.
    """

    name = METHOD_AR

    def __init__(self, order: int = AR_ORDER):
        """Initialize with the maximum order."""
        if order < 1:
            raise ConfigError(f"autoregressive order must be >= 1, got {order}")
        self.order = order
        self.coefficients: Dict[int, np.ndarray] = {}

    def fit(self, series: Sequence[SeriesView]) -> "AutoregressiveForecaster":
        """Fit one pooled model per order 1..p that has enough data."""
        self.coefficients = {}
        if not series:
            return self
        for order in range(1, self.order + 1):
            parts = [lagged_design(item.array, order) for item in series]
            design = np.concatenate([part[0] for part in parts])
            response = np.concatenate([part[1] for part in parts])
            if len(response) < order + 1:
                logger.debug("not enough training rows for AR(%d)", order)
                continue
            self.coefficients[order] = solve_least_squares(design, response)
        return self

    def coefficients_for(self, length: int) -> Optional[np.ndarray]:
        """Coefficients of the largest fitted order a history of ``length`` values supports."""
        for order in range(min(self.order, length), 0, -1):
            if order in self.coefficients:
                return self.coefficients[order]
        return None

    def forecast(self, series: SeriesView) -> float:
        """Pooled AR forecast."""
        if not len(series):
            raise DataValidationError("cannot forecast an empty series")
        coefficients = self.coefficients_for(len(series)) if len(series) >= 2 else None
        if coefficients is None:
            return float(series.values[-1])
        return ar_forecast(series, coefficients)
