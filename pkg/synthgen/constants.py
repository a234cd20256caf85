"""Constants for the synthgen module."""

SCHEDULE_BY_TIME = "by-time"
SCHEDULE_BY_PATIENT = "by-patient"
SCHEDULES = (SCHEDULE_BY_TIME, SCHEDULE_BY_PATIENT)

DEFAULT_INVARIANT_FEATURES = ("IBIL", "HB", "MCH", "MCHC")
DEFAULT_INVARIANT_WEIGHTS = (0.6, 0.5, 0.4, 0.3)
DEFAULT_VARIANT_FEATURES = ("ALT", "AST")

DEFAULT_NOISE_SIGMA = 0.5
DEFAULT_VARIANT_NOISE = 0.1
DEFAULT_DRIFT_SIGMA = 0.3
DEFAULT_NEIGHBOR_STRENGTH = 0.5
DEFAULT_K_PEERS = 5

MIN_R2 = 0.5
ZERO_BETA_TOLERANCE = 0.3

SHIFT_LABEL = (
    "synthetic flip-sign environment schedule: variant features follow beta_e * next-day target "
    "with beta_e changing sign across environments"
)
