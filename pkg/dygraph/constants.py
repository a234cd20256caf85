"""Constants for the dygraph module."""

HIDDEN_DIM = 8
CAT_EMBED_DIM = 2
N_LAYERS = 2
N_HEADS = 2
WINDOW_ALL = "all"

TE_FIXED = "fixed-ladder"
TE_LEARNABLE = "learnable"
TE_MODES = (TE_FIXED, TE_LEARNABLE)
TE_BASE = 10000.0

ACTIVATIONS = ("elu", "relu", "tanh")
DTYPES = ("float64", "float32")

GATE_INIT = 0.5

CHECKPOINT_NAME = "checkpoint.pt"
