"""Sampling of variant patterns and intervention on the disentangled state."""

from typing import List

import torch

from dygraph.network import DisentangledState
from errors import DataValidationError
from training.constants import INTERVENTION_GLOBAL, INTERVENTION_PER_NODE


def variant_pool(state: DisentangledState, presence: torch.Tensor) -> torch.Tensor:
    """Final-layer z_V of every present (node, time) position."""
    pool = state.final_variant[presence]
    if pool.shape[0] == 0:
        raise DataValidationError("no present position to sample variant patterns from")
    return pool


def sample_indices(pool_size: int, samples: int, seed: int) -> torch.Tensor:
    """Draw ``samples`` indices uniformly with replacement from ``range(pool_size)``.

    :param pool_size:
    :param samples:
    :param seed:
    :return: (samples,) long tensor
    """
    generator = torch.Generator().manual_seed(seed)
    return torch.randint(0, pool_size, (samples,), generator=generator)


def sample_variant_set(
    state: DisentangledState, presence: torch.Tensor, samples: int, seed: int
) -> List[torch.Tensor]:
    """Sample variant patterns from the final-layer pool.

    :param state: current forward state
    :param presence: flat presence mask
    :param samples: number of patterns S
    :param seed: sampling seed
    :return: list of S (d,) vectors
    """
    pool = variant_pool(state, presence)
    return [pool[index] for index in sample_indices(pool.shape[0], samples, seed).tolist()]


def sample_per_node_set(
    state: DisentangledState, presence: torch.Tensor, samples: int, seed: int
) -> List[torch.Tensor]:
    """Sample S per-position replacements, each position drawing its own pool vector.

    :return: list of S (positions, d) tensors
    """
    pool = variant_pool(state, presence)
    positions = state.final_variant.shape[0]
    indices = sample_indices(pool.shape[0], samples * positions, seed).view(samples, positions)
    return [pool[row] for row in indices]


def intervene(state: DisentangledState, replacement: torch.Tensor) -> DisentangledState:
    """Replace the final-layer z_V everywhere, leaving z_I untouched."""
    return state.intervene(replacement)


SAMPLERS = {
    INTERVENTION_GLOBAL: sample_variant_set,
    INTERVENTION_PER_NODE: sample_per_node_set,
}
