"""Constants for the baselines module."""

MA_WINDOW = 3
AR_ORDER = 3

METHOD_FULL = "full"
METHOD_ERM = "erm"
METHOD_ENTANGLED = "entangled"
MODEL_METHODS = (METHOD_FULL, METHOD_ERM, METHOD_ENTANGLED)
ABLATIONS = (METHOD_ERM, METHOD_ENTANGLED)

METHOD_MA = "ma"
METHOD_AR = "ar"
