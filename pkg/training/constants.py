"""Constants for the training module."""

LEARNING_RATE = 1e-2
WEIGHT_DECAY = 5e-7
MAX_EPOCHS = 1000
PATIENCE = 50
N_SAMPLES = 3
LAMBDA = 1.0
LAMBDA_SWEEP = (0.1, 1.0, 10.0)

INTERVENTION_GLOBAL = "global"
INTERVENTION_PER_NODE = "per-node"
INTERVENTIONS = (INTERVENTION_GLOBAL, INTERVENTION_PER_NODE)

STOP_EARLY = "early-stop"
STOP_MAX_EPOCHS = "max-epochs"

HISTORY_NAME = "history.jsonl"
LOG_EVERY = 50

# large odd multiplier mixing the epoch into the sampling seed
EPOCH_SEED_STRIDE = 1_000_003
