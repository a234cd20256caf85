"""Optimization hyperparameters."""

from dataclasses import asdict, dataclass, replace
from typing import Dict

from errors import ConfigError
from training.constants import (
    INTERVENTION_GLOBAL,
    INTERVENTIONS,
    LAMBDA,
    LEARNING_RATE,
    MAX_EPOCHS,
    N_SAMPLES,
    PATIENCE,
    WEIGHT_DECAY,
)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, early stopping and invariance objective settings."""

    lr: float = LEARNING_RATE
    weight_decay: float = WEIGHT_DECAY
    max_epochs: int = MAX_EPOCHS
    patience: int = PATIENCE
    samples: int = N_SAMPLES
    lam: float = LAMBDA
    intervention: str = INTERVENTION_GLOBAL
    seed: int = 0

    def __post_init__(self):
        """Validate ranges."""
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("max_epochs and patience must be positive")
        if self.patience > self.max_epochs:
            raise ConfigError(
                f"patience {self.patience} exceeds max_epochs {self.max_epochs}"
            )
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("lr and weight_decay must be non-negative")
        if self.intervention not in INTERVENTIONS:
            raise ConfigError(
                f"unknown intervention {self.intervention!r}, expected one of {INTERVENTIONS}"
            )

    def with_changes(self, **changes) -> "TrainConfig":
        """Copy with some fields replaced, validated again."""
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        """Serialize for resolved configs."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "TrainConfig":
        """Build a config from a dict, ignoring unknown keys."""
        fields = cls.__dataclass_fields__
        return cls(**{key: value for key, value in data.items() if key in fields})
