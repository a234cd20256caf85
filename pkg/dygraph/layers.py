"""Building blocks of the disentangled dynamic graph attention network."""

import math
from typing import Tuple

import torch
from torch import nn

from dygraph.constants import GATE_INIT, TE_BASE

ACTIVATIONS = {
    "elu": nn.ELU,
    "relu": nn.ReLU,
    "tanh": nn.Tanh,
}


def ladder_frequencies(dim: int) -> torch.Tensor:
    """Geometric frequencies 10000^(-(k-1)/d) for k = 1..d."""
    return torch.pow(torch.tensor(TE_BASE, dtype=torch.float64), -torch.arange(dim, dtype=torch.float64) / dim)


def temporal_encoding(time, omega: torch.Tensor) -> torch.Tensor:
    """Sine encoding [sin(w_1 t), ..., sin(w_d t)] of one or many times.

    :param time: scalar or tensor of times (real values accepted)
    :param omega: (d,) frequencies
    :return: (..., d) encoding
    """
    time = torch.as_tensor(time, dtype=omega.dtype)
    return torch.sin(time.unsqueeze(-1) * omega)


class TemporalEncoding(nn.Module):
    """Sine temporal encoding with fixed or trainable frequencies."""

    def __init__(self, dim: int, learnable: bool = False):
        """Initialize the frequencies on the geometric ladder."""
        super().__init__()
        omega = ladder_frequencies(dim)
        if learnable:
            self.omega = nn.Parameter(omega)
        else:
            self.register_buffer("omega", omega)

    def forward(self, times: torch.Tensor) -> torch.Tensor:
        """Encode a (T,) tensor of times into (T, d)."""
        return temporal_encoding(times, self.omega)


def segment_softmax(logits: torch.Tensor, index: torch.Tensor, count: int) -> torch.Tensor:
    """Softmax of ``logits`` within each group of rows sharing an ``index``.

    :param logits: (pairs, heads)
    :param index: (pairs,) group of every row
    :param count: number of groups
    :return: (pairs, heads) weights summing to one per group and head
    """
    expanded = index.unsqueeze(-1).expand_as(logits)
    maximum = logits.new_full((count, logits.shape[-1]), float("-inf")).scatter_reduce(
        0, expanded, logits.detach(), reduce="amax", include_self=True
    )
    weights = torch.exp(logits - maximum[index])
    total = logits.new_zeros((count, logits.shape[-1])).index_add(0, index, weights)
    return weights / total[index]


def structural_masks(
    logits: torch.Tensor, index: torch.Tensor, count: int
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Invariant and variant structural masks: softmax of the logits and of their negation."""
    return segment_softmax(logits, index, count), segment_softmax(-logits, index, count)


class GatedFeedForward(nn.Module):
    """alpha * MLP(LayerNorm(x)) + (1 - alpha) * x."""

    def __init__(self, dim: int, activation: str = "elu"):
        """Initialize the normalization, the two-layer MLP and the gate."""
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, dim), ACTIVATIONS[activation](), nn.Linear(dim, dim))
        self.alpha = nn.Parameter(torch.tensor(GATE_INIT))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Apply the gated residual MLP."""
        return self.alpha * self.mlp(self.norm(x)) + (1 - self.alpha) * x


class PredictionHead(nn.Module):
    """Two-layer MLP regressor from a d-dimensional state to a scalar."""

    def __init__(self, dim: int, activation: str = "elu"):
        """Initialize the MLP."""
        super().__init__()
        self.mlp = nn.Sequential(nn.Linear(dim, dim), ACTIVATIONS[activation](), nn.Linear(dim, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Predict one value per row."""
        return self.mlp(x).squeeze(-1)


class DisentangledAttentionLayer(nn.Module):
    """One layer of invariant/variant attention over dynamic neighbourhoods.

    Queries come from the attending node at its own time, keys and values from
    each (neighbour, time) pair of its neighbourhood, all after adding the
    temporal encoding. The invariant summary aggregates values masked by the
    featural mask with softmax(logits); the variant summary aggregates raw
    values with softmax(-logits). In the entangled ablation only the first mask
    exists, the featural mask stays uniform and the variant summary is zero.
    """

    def __init__(self, dim: int, heads: int, activation: str = "elu", entangled: bool = False):
        """Initialize projections, featural mask, head merge and feed-forward."""
        super().__init__()
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.entangled = entangled
        self.query = nn.Linear(dim, dim)
        self.key = nn.Linear(dim, dim)
        self.value = nn.Linear(dim, dim)
        self.feature_mask_logits = nn.Parameter(torch.zeros(dim), requires_grad=not entangled)
        self.merge = nn.Linear(dim, dim)
        self.ffn = GatedFeedForward(dim, activation)

    @property
    def feature_mask(self) -> torch.Tensor:
        """Softmax of the featural mask logits, a point of the simplex."""
        return torch.softmax(self.feature_mask_logits, dim=0)

    def attention_logits(
        self, inputs: torch.Tensor, query_index: torch.Tensor, key_index: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Scaled dot-product logits per pair and head, plus the value vectors.

        :param inputs: (positions, d) node states with temporal encoding added
        :param query_index: (pairs,) attending positions
        :param key_index: (pairs,) attended positions
        :return: logits (pairs, heads), values (positions, heads, head_dim)
        """
        shape = (-1, self.heads, self.head_dim)
        query = self.query(inputs).view(shape)
        key = self.key(inputs).view(shape)
        value = self.value(inputs).view(shape)
        logits = (query[query_index] * key[key_index]).sum(-1) / math.sqrt(self.head_dim)
        return logits, value

    def summarize(
        self,
        hidden: torch.Tensor,
        encoding: torch.Tensor,
        query_index: torch.Tensor,
        key_index: torch.Tensor,
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Aggregate neighbourhood values into invariant and variant summaries.

        :return: (positions, d) invariant and variant summaries, heads concatenated
        """
        count = hidden.shape[0]
        logits, value = self.attention_logits(hidden + encoding, query_index, key_index)
        masked_value = value * self.feature_mask.view(self.heads, self.head_dim)

        if self.entangled:
            invariant_mask = segment_softmax(logits, query_index, count)
        else:
            invariant_mask, variant_mask = structural_masks(logits, query_index, count)
        invariant = hidden.new_zeros((count, self.heads, self.head_dim)).index_add(
            0, query_index, invariant_mask.unsqueeze(-1) * masked_value[key_index]
        )
        if self.entangled:
            return invariant.reshape(count, self.dim), hidden.new_zeros((count, self.dim))

        variant = hidden.new_zeros((count, self.heads, self.head_dim)).index_add(
            0, query_index, variant_mask.unsqueeze(-1) * value[key_index]
        )
        return invariant.reshape(count, self.dim), variant.reshape(count, self.dim)

    def forward(
        self,
        hidden: torch.Tensor,
        encoding: torch.Tensor,
        query_index: torch.Tensor,
        key_index: torch.Tensor,
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Compute (z_I, z_V) for every position.

        :param hidden: (positions, d) node states
        :param encoding: (positions, d) temporal encoding of each position's time
        :param query_index:
        :param key_index:
        :return: invariant and variant patterns, each (positions, d)
        """
        invariant, variant = self.summarize(hidden, encoding, query_index, key_index)
        z_invariant = self.ffn(self.merge(invariant) + hidden)
        if self.entangled:
            return z_invariant, torch.zeros_like(z_invariant)
        return z_invariant, self.ffn(self.merge(variant))
