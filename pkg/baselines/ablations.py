"""Configuration deltas of the model ablations."""

from typing import Dict, Tuple

from baselines.constants import ABLATIONS, METHOD_ENTANGLED, METHOD_ERM, METHOD_FULL
from dygraph.config import ModelConfig
from errors import ConfigError
from training.config import TrainConfig

DELTAS: Dict[str, Tuple[Dict, Dict]] = {
    METHOD_ERM: ({}, {"lam": 0.0}),
    METHOD_ENTANGLED: ({"entangled": True}, {"lam": 0.0}),
}


def ablation_config(kind: str) -> Tuple[Dict, Dict]:
    """Return the (model config, train config) field changes of an ablation.

    :param kind: "erm" or "entangled"
    :return: two dicts of field overrides
    """
    if kind not in DELTAS:
        raise ConfigError(f"unknown ablation {kind!r}, expected one of {ABLATIONS}")
    model_delta, train_delta = DELTAS[kind]
    return dict(model_delta), dict(train_delta)


def configs_for_method(
    method: str, model_config: ModelConfig, train_config: TrainConfig
) -> Tuple[ModelConfig, TrainConfig]:
    """Apply the ablation of ``method`` to base configs; "full" leaves them unchanged."""
    if method == METHOD_FULL:
        return model_config, train_config
    model_delta, train_delta = ablation_config(method)
    model_values = {**model_config.to_dict(), **model_delta}
    return ModelConfig.from_dict(model_values), train_config.with_changes(**train_delta)
