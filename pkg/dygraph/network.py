"""The disentangled dynamic graph attention network."""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import torch
from torch import nn

from datamodel.schema import FeatureSchema
from dygraph.batch import GraphTensors
from dygraph.config import ModelConfig
from dygraph.constants import GATE_INIT, TE_LEARNABLE
from dygraph.layers import (
    DisentangledAttentionLayer,
    PredictionHead,
    TemporalEncoding,
    ladder_frequencies,
)
from errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)


@dataclass
class DisentangledState:
    """Invariant and variant patterns of every layer, in the flat (time * node) layout."""

    invariant: List[torch.Tensor]
    variant: List[torch.Tensor]

    @property
    def hidden(self) -> List[torch.Tensor]:
        """Hidden embeddings h = z_I + z_V per layer."""
        return [z_i + z_v for z_i, z_v in zip(self.invariant, self.variant)]

    @property
    def final_invariant(self) -> torch.Tensor:
        """Final-layer z_I."""
        return self.invariant[-1]

    @property
    def final_variant(self) -> torch.Tensor:
        """Final-layer z_V."""
        return self.variant[-1]

    def intervene(self, replacement: torch.Tensor) -> "DisentangledState":
        """Replace the final-layer variant pattern of every position.

        :param replacement: (d,) vector used everywhere, or (positions, d) per-position patterns
        :return: new state sharing every other tensor
        """
        final = self.final_variant
        if replacement.shape[-1] != final.shape[-1]:
            raise ValueError(
                f"variant pattern has length {replacement.shape[-1]}, expected {final.shape[-1]}"
            )
        return DisentangledState(
            invariant=list(self.invariant),
            variant=self.variant[:-1] + [replacement.expand_as(final)],
        )


@dataclass
class ForwardOutput:
    """Layer states plus invariant-head predictions for every target of a GraphTensors."""

    state: DisentangledState
    predictions: torch.Tensor


class DisentangledDynamicGraphNet(nn.Module):
    """Stack of disentangled attention layers with invariant and mixed prediction heads."""

    def __init__(self, config: ModelConfig, schema: FeatureSchema):
        """Build the network for a schema.

        :param config: architecture
        :param schema: feature schema of the graphs it will read
        """
        super().__init__()
        self.config = config
        self.schema = schema
        dim = config.hidden_dim
        self.embeddings = nn.ParameterList(
            [nn.Parameter(torch.empty(cardinality, config.cat_embed_dim)) for cardinality in schema.cardinalities]
        )
        self.input_projection = nn.Linear(self.embedded_dim, dim)
        self.temporal = TemporalEncoding(dim, learnable=config.te_mode == TE_LEARNABLE)
        self.layers = nn.ModuleList(
            [
                DisentangledAttentionLayer(dim, config.n_heads, config.activation, config.entangled)
                for _ in range(config.n_layers)
            ]
        )
        self.invariant_head = PredictionHead(dim, config.activation)
        self.mixed_head: Optional[PredictionHead] = (
            None if config.entangled else PredictionHead(dim, config.activation)
        )
        self.to(config.torch_dtype)
        self.reset_parameters(config.seed)

    @property
    def embedded_dim(self) -> int:
        """Width of the embedded input: scaled continuous values plus categorical embeddings."""
        return len(self.schema.continuous) + len(self.schema.categorical) * self.config.cat_embed_dim

    @property
    def variant_parameter_count(self) -> int:
        """Number of parameters used only by the variant branch."""
        if self.mixed_head is None:
            return 0
        return sum(parameter.numel() for parameter in self.mixed_head.parameters())

    @torch.no_grad()
    def reset_parameters(self, seed: int) -> None:
        """Initialize every parameter from ``seed``.

        Linear weights and biases are uniform in +-1/sqrt(fan_in), embedding
        tables uniform in +-1/sqrt(cardinality); layer norms start at identity,
        gates at 0.5 and featural masks uniform.

        :param seed:
        :return: None
        """
        generator = torch.Generator().manual_seed(seed)
        for module in self.modules():
            if isinstance(module, nn.Linear):
                bound = 1.0 / math.sqrt(module.in_features)
                module.weight.uniform_(-bound, bound, generator=generator)
                if module.bias is not None:
                    module.bias.uniform_(-bound, bound, generator=generator)
            elif isinstance(module, nn.LayerNorm):
                module.reset_parameters()
        for table in self.embeddings:
            bound = 1.0 / math.sqrt(table.shape[0])
            table.uniform_(-bound, bound, generator=generator)
        for layer in self.layers:
            layer.ffn.alpha.fill_(GATE_INIT)
            layer.feature_mask_logits.zero_()
        self.temporal.omega.copy_(ladder_frequencies(self.config.hidden_dim))

    def embed_inputs(self, features: torch.Tensor) -> torch.Tensor:
        """Replace the one-hot blocks of encoded features by their embeddings.

        :param features: (..., encoded_dim) scaled continuous values then one-hot blocks
        :return: (..., embedded_dim)
        """
        width = len(self.schema.continuous)
        parts = [features[..., :width]]
        offset = width
        for table in self.embeddings:
            cardinality = table.shape[0]
            parts.append(features[..., offset:offset + cardinality] @ table)
            offset += cardinality
        return torch.cat(parts, dim=-1)

    def _check_finite(self, values: torch.Tensor, layer: int, tensors: GraphTensors) -> None:
        bad = ~torch.isfinite(values).all(dim=-1)
        if bad.any():
            node, time = tensors.locate(int(torch.nonzero(bad)[0]))
            raise NumericalError("non-finite activation", layer=layer, node=node, time=time)

    def encode(self, tensors: GraphTensors, embedded: Optional[torch.Tensor] = None) -> DisentangledState:
        """Run every layer over the dynamic graph.

        :param tensors: tensorized graph
        :param embedded: (times, nodes, embedded_dim) inputs, computed from ``tensors`` when omitted
        :return: DisentangledState
        """
        if embedded is None:
            embedded = self.embed_inputs(tensors.features)
        present = tensors.presence.unsqueeze(-1).to(embedded.dtype)
        hidden = self.input_projection(embedded.reshape(tensors.n_positions, -1)) * present
        encoding = self.temporal(tensors.times).repeat_interleave(tensors.n_nodes, dim=0)
        self._check_finite(hidden, 0, tensors)

        invariant, variant = [], []
        for index, layer in enumerate(self.layers, start=1):
            z_invariant, z_variant = layer(hidden, encoding, tensors.query_index, tensors.key_index)
            z_invariant = z_invariant * present
            z_variant = z_variant * present
            self._check_finite(z_invariant, index, tensors)
            self._check_finite(z_variant, index, tensors)
            invariant.append(z_invariant)
            variant.append(z_variant)
            hidden = z_invariant + z_variant
        return DisentangledState(invariant=invariant, variant=variant)

    def predict_invariant(self, z_invariant: torch.Tensor) -> torch.Tensor:
        """Invariant head f(z_I)."""
        return self.invariant_head(z_invariant)

    def predict_mixed(self, z_invariant: torch.Tensor, z_variant: torch.Tensor) -> torch.Tensor:
        """Mixed head g(z_I, z_V) = MLP(z_I + sigmoid(z_V))."""
        if self.mixed_head is None:
            raise ConfigError("the entangled model has no mixed head")
        return self.mixed_head(z_invariant + torch.sigmoid(z_variant))

    def forward(self, tensors: GraphTensors, embedded: Optional[torch.Tensor] = None) -> ForwardOutput:
        """Encode the graph and predict every target from the previous snapshot's z_I.

        :param tensors:
        :param embedded: optional embedded inputs, see ``encode``
        :return: ForwardOutput with predictions in standardized target units
        """
        state = self.encode(tensors, embedded)
        predictions = self.predict_invariant(state.final_invariant[tensors.target_source])
        return ForwardOutput(state=state, predictions=predictions)


def build_model(config: ModelConfig, schema: FeatureSchema) -> DisentangledDynamicGraphNet:
    """Create a freshly initialized network."""
    model = DisentangledDynamicGraphNet(config, schema)
    logger.debug(
        "model with %d parameters (%d variant-only)",
        sum(parameter.numel() for parameter in model.parameters()),
        model.variant_parameter_count,
    )
    return model
