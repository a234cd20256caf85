"""Constants for the preprocess module."""

# neighbour count for desk-scale cohorts; the full clinical cohort uses 100
DEFAULT_K = 10

DISTANCE_METRIC = "manhattan"
