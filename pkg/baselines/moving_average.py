"""Trailing-mean forecaster."""

from baselines.base import Forecaster, SeriesView
from baselines.constants import MA_WINDOW, METHOD_MA
from errors import ConfigError, DataValidationError


def ma_forecast(series: SeriesView, window: int = MA_WINDOW) -> float:
    """Mean of the last ``min(window, len(series))`` values."""
    if window < 1:
        raise ConfigError(f"moving average window must be >= 1, got {window}")
    if not len(series):
        raise DataValidationError("cannot forecast an empty series")
    return float(series.array[-window:].mean())


class MovingAverageForecaster(Forecaster):
    """Forecast the mean of the most recent values."""

    name = METHOD_MA

    def __init__(self, window: int = MA_WINDOW):
        """Initialize with the trailing window length."""
        if window < 1:
            raise ConfigError(f"moving average window must be >= 1, got {window}")
        self.window = window

    def forecast(self, series: SeriesView) -> float:
        """Trailing mean."""
        return ma_forecast(series, self.window)
