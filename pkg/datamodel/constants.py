"""Constants for the datamodel module."""

PATIENT_COLUMN = "patient_id"
DAY_COLUMN = "day"
ENV_COLUMN = "env"

SPLIT_BY_TIME = "by-time"
SPLIT_BY_PATIENT = "by-patient"
SPLIT_MODES = (SPLIT_BY_TIME, SPLIT_BY_PATIENT)

FRACTION_TOLERANCE = 1e-9

# name, unit, mean, std of the biochemical markers
ANIC_CONTINUOUS = [
    ("ALB", "g/L", 36.9, 5.5),
    ("IBIL", "umol/L", 12.6, 13.0),
    ("TBIL", "umol/L", 25.4, 49.2),
    ("DBIL", "umol/L", 12.7, 36.7),
    ("HB", "g/L", 106.5, 23.2),
    ("ALT", "u/L", 85.4, 296.9),
    ("AST", "u/L", 102.0, 434.9),
    ("MCH", "pg/L", 30.0, 2.5),
    ("MCHC", "g/L", 324.4, 13.6),
]

# name, number of categories
ANIC_CATEGORICAL = [
    ("Age", 2),
    ("Sex", 2),
    ("Disease", 3),
    ("EN", 2),
    ("PN", 2),
    ("PN_EN", 2),
    ("ALB_USE", 2),
    ("EN_ALB", 2),
    ("PN_ALB", 2),
    ("EN_PN_ALB", 2),
]

ANIC_TARGET = "ALB"
DISEASE_LABELS = ("Trauma", "Surgery", "Internal")
