"""Model hyperparameters."""

from dataclasses import asdict, dataclass
from typing import Dict, Union

import torch

from dygraph.constants import (
    ACTIVATIONS,
    CAT_EMBED_DIM,
    DTYPES,
    HIDDEN_DIM,
    N_HEADS,
    N_LAYERS,
    TE_FIXED,
    TE_MODES,
    WINDOW_ALL,
)
from errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the disentangled dynamic graph attention network."""

    hidden_dim: int = HIDDEN_DIM
    cat_embed_dim: int = CAT_EMBED_DIM
    n_layers: int = N_LAYERS
    n_heads: int = N_HEADS
    window: Union[int, str] = WINDOW_ALL
    te_mode: str = TE_FIXED
    activation: str = "elu"
    entangled: bool = False
    dtype: str = "float64"
    seed: int = 0

    def __post_init__(self):
        """Validate dimensions, window and enumerations."""
        if self.hidden_dim < 1 or self.n_layers < 1 or self.n_heads < 1:
            raise ConfigError("hidden_dim, n_layers and n_heads must be positive")
        if self.hidden_dim % self.n_heads:
            raise ConfigError(
                f"hidden_dim {self.hidden_dim} is not divisible by n_heads {self.n_heads}"
            )
        if self.cat_embed_dim < 1:
            raise ConfigError("cat_embed_dim must be positive")
        if self.window != WINDOW_ALL and (
            not isinstance(self.window, int) or self.window < 1
        ):
            raise ConfigError(f"window must be >= 1 or {WINDOW_ALL!r}, got {self.window!r}")
        if self.te_mode not in TE_MODES:
            raise ConfigError(f"unknown te_mode {self.te_mode!r}, expected one of {TE_MODES}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.dtype not in DTYPES:
            raise ConfigError(f"unknown dtype {self.dtype!r}")

    @property
    def head_dim(self) -> int:
        """Width of one attention head."""
        return self.hidden_dim // self.n_heads

    @property
    def torch_dtype(self) -> torch.dtype:
        """The torch dtype of parameters and activations."""
        return getattr(torch, self.dtype)

    def to_dict(self) -> Dict:
        """Serialize for checkpoints and resolved configs."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "ModelConfig":
        """Build a config from a dict, ignoring unknown keys."""
        fields = cls.__dataclass_fields__
        values = {key: value for key, value in data.items() if key in fields}
        window = values.get("window")
        if isinstance(window, str) and window.isdigit():
            values["window"] = int(window)
        return cls(**values)
