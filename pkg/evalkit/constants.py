"""Constants for the evalkit module."""

GROUP_ENV = "env"
AVERAGE_GROUP = "average"
METRICS = ("rmse", "mae")

LABEL_COLUMN = "label"
PREDICTION_COLUMN = "prediction"
GROUP_COLUMN = "group"
FEATURE_COLUMN = "feature"
IMPORTANCE_COLUMN = "importance"
MAE_COLUMN = "mae"
METHOD_COLUMN = "method"

METRICS_NAME = "metrics.json"
PER_TIME_NAME = "per_time_mae.csv"
COMPARISON_NAME = "comparison.csv"
IMPORTANCE_NAME = "importance.csv"
SHOWCASE_DIR = "showcase"
MARKERS_NAME = "markers.csv"

AXIS_COLUMN = "axis"
VALUE_COLUMN = "value"
QUANTILES = {"q25": 0.25, "median": 0.5, "q75": 0.75}
