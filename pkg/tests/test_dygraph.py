import dataclasses
import math

import numpy as np
import pytest
import torch

from datamodel.table import CohortTable
from dygraph.batch import GraphTensors, dynamic_neighborhood
from dygraph.checkpoint import load_checkpoint, save_checkpoint
from dygraph.config import ModelConfig
from dygraph.layers import (
    DisentangledAttentionLayer,
    ladder_frequencies,
    segment_softmax,
    structural_masks,
    temporal_encoding,
)
from dygraph.network import build_model
from errors import ArtifactError, ConfigError, DataValidationError, NumericalError
from preprocess.graph import build_graph
from preprocess.scaler import fit_scaler
from tests.conftest import make_table
from training.config import TrainConfig
from training.trainer import objective, parameter_groups


def test_temporal_encoding_at_zero_is_zero():
    np.testing.assert_array_equal(temporal_encoding(0, ladder_frequencies(6)).numpy(), np.zeros(6))


def test_temporal_encoding_accepts_real_times():
    encoding = temporal_encoding(math.pi / 2, torch.tensor([1.0, 0.5], dtype=torch.float64))
    assert encoding[0].item() == pytest.approx(1.0)


def test_ladder_frequencies():
    np.testing.assert_allclose(ladder_frequencies(2).numpy(), [1.0, 0.01])


def test_learnable_frequencies_are_parameters(small_schema):
    model = build_model(ModelConfig(hidden_dim=4, n_heads=1, te_mode="learnable"), small_schema)
    assert "temporal.omega" in dict(model.named_parameters())
    fixed = build_model(ModelConfig(hidden_dim=4, n_heads=1), small_schema)
    assert "temporal.omega" not in dict(fixed.named_parameters())


def test_neighborhood_spans_every_snapshot(small_schema):
    table = make_table(small_schema, patients=3, days=3)
    graph = build_graph(table, fit_scaler(table), k=2)
    pairs = dynamic_neighborhood(graph, "p1", 3)
    assert len(pairs) == 7
    assert pairs[-1] == ("p1", 3)
    assert len(dynamic_neighborhood(graph, "p1", 3, window=1)) == 3


def test_isolated_node_attends_to_itself(small_schema):
    table = make_table(small_schema, patients=1, days=3)
    graph = build_graph(table, fit_scaler(table), k=2)
    assert dynamic_neighborhood(graph, "p1", 2) == [("p1", 2)]


def test_neighborhood_of_absent_node(small_schema):
    table = make_table(small_schema, patients=2, days=2)
    graph = build_graph(table, fit_scaler(table), k=1)
    with pytest.raises(DataValidationError):
        dynamic_neighborhood(graph, "p9", 2)


def test_tensor_pairs_match_neighborhoods(tiny_table):
    graph = build_graph(tiny_table, fit_scaler(tiny_table), k=2)
    for window in ("all", 2):
        tensors = GraphTensors.from_graph(graph, window=window)
        for position in range(tensors.n_positions):
            node, time = tensors.locate(position)
            keys = tensors.key_index[tensors.query_index == position].tolist()
            expected = dynamic_neighborhood(graph, node, time, window)
            assert sorted(tensors.locate(key) for key in keys) == sorted(expected)


def test_graph_tensors_need_two_snapshots(small_schema):
    table = make_table(small_schema, patients=3, days=1)
    with pytest.raises(DataValidationError):
        GraphTensors.from_graph(build_graph(table, fit_scaler(table), k=1))


def test_equal_logits_give_uniform_masks():
    logits = torch.zeros(4, 2, dtype=torch.float64)
    invariant, variant = structural_masks(logits, torch.zeros(4, dtype=torch.long), 1)
    torch.testing.assert_close(invariant, torch.full((4, 2), 0.25, dtype=torch.float64))
    torch.testing.assert_close(variant, invariant)


def test_masks_of_two_neighbours():
    logits = torch.tensor([[math.log(2.0)], [0.0]], dtype=torch.float64)
    invariant, variant = structural_masks(logits, torch.zeros(2, dtype=torch.long), 1)
    torch.testing.assert_close(invariant[:, 0], torch.tensor([2 / 3, 1 / 3], dtype=torch.float64))
    torch.testing.assert_close(variant[:, 0], torch.tensor([1 / 3, 2 / 3], dtype=torch.float64))


def test_masks_are_distributions_with_reversed_ranking():
    generator = torch.Generator().manual_seed(0)
    for _ in range(1000):
        size = int(torch.randint(2, 8, (1,), generator=generator))
        logits = torch.randn(size, 1, generator=generator, dtype=torch.float64) * 3
        invariant, variant = structural_masks(logits, torch.zeros(size, dtype=torch.long), 1)
        assert invariant.sum().item() == pytest.approx(1.0)
        assert variant.sum().item() == pytest.approx(1.0)
        order = torch.argsort(invariant[:, 0])
        assert torch.equal(torch.argsort(variant[:, 0]), order.flip(0))


def test_segment_softmax_normalizes_each_group():
    logits = torch.tensor([[1.0], [2.0], [5.0], [-1.0], [0.0]], dtype=torch.float64)
    index = torch.tensor([0, 0, 1, 1, 1])
    weights = segment_softmax(logits, index, 2)
    sums = torch.zeros(2, 1, dtype=torch.float64).index_add(0, index, weights)
    torch.testing.assert_close(sums, torch.ones(2, 1, dtype=torch.float64))


def test_one_hot_featural_mask_selects_one_coordinate(tiny_tensors):
    torch.manual_seed(0)
    layer = DisentangledAttentionLayer(dim=4, heads=1).double()
    with torch.no_grad():
        layer.feature_mask_logits.copy_(torch.tensor([-math.inf, -math.inf, 0.0, -math.inf]))
    hidden = torch.randn(tiny_tensors.n_positions, 4, dtype=torch.float64)
    encoding = torch.zeros_like(hidden)
    invariant, variant = layer.summarize(hidden, encoding, tiny_tensors.query_index, tiny_tensors.key_index)
    assert torch.count_nonzero(invariant[:, [0, 1, 3]]) == 0
    assert torch.count_nonzero(invariant[:, 2]) > 0
    assert torch.count_nonzero(variant[:, [0, 1, 3]]) > 0


def test_featural_mask_stays_on_the_simplex_while_training(small_schema, small_model_config, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    config = TrainConfig(samples=2)
    optimizer = torch.optim.AdamW(parameter_groups(model, config.weight_decay), lr=config.lr)
    initial = [layer.feature_mask_logits.detach().clone() for layer in model.layers]
    model.train()
    for epoch in range(1, 6):
        optimizer.zero_grad()
        objective(model, tiny_tensors, config, epoch)[0].backward()
        optimizer.step()
    for layer, logits in zip(model.layers, initial):
        assert not torch.equal(layer.feature_mask_logits.detach(), logits)
        mask = layer.feature_mask.detach()
        assert (mask >= 0).all()
        assert mask.sum().item() == pytest.approx(1.0, abs=1e-6)


def test_forward_shapes(small_schema):
    table = make_table(small_schema, patients=2, days=2)
    tensors = GraphTensors.from_graph(build_graph(table, fit_scaler(table), k=1))
    model = build_model(ModelConfig(hidden_dim=4, n_layers=1, n_heads=1), small_schema)
    output = model(tensors)
    assert output.state.final_invariant.shape == (4, 4)
    assert output.state.final_variant.shape == (4, 4)
    assert output.predictions.shape == (2,)
    assert tensors.target_time.tolist() == [2, 2]


def test_same_seed_gives_identical_predictions(small_schema, small_model_config, tiny_tensors):
    first = build_model(small_model_config, small_schema)(tiny_tensors).predictions
    second = build_model(small_model_config, small_schema)(tiny_tensors).predictions
    assert torch.equal(first, second)
    other = build_model(dataclasses.replace(small_model_config, seed=4), small_schema)
    assert not torch.equal(first, other(tiny_tensors).predictions)


def test_predictions_are_equivariant_to_patient_order(small_schema, small_model_config, tiny_table):
    scaler = fit_scaler(tiny_table)
    reordered = CohortTable(
        tiny_table.schema,
        tuple(sorted(tiny_table.records, key=lambda record: (-int(record.patient_id[1:]), record.day))),
    )
    model = build_model(small_model_config, small_schema)
    results = []
    for table in (tiny_table, reordered):
        tensors = GraphTensors.from_graph(build_graph(table, scaler, k=2))
        predictions = model(tensors).predictions.tolist()
        results.append(dict(zip(zip(tensors.target_node, tensors.target_time.tolist()), predictions)))
    assert results[0].keys() == results[1].keys()
    for key, value in results[0].items():
        assert results[1][key] == pytest.approx(value, abs=1e-12)


def test_invariant_head_with_zero_weights_returns_bias(small_schema, small_model_config):
    model = build_model(small_model_config, small_schema)
    with torch.no_grad():
        model.invariant_head.mlp[2].weight.zero_()
    output = model.predict_invariant(torch.randn(5, 4, dtype=torch.float64))
    torch.testing.assert_close(output, model.invariant_head.mlp[2].bias.expand(5))


def test_invariant_prediction_ignores_variant_patterns(small_schema, small_model_config, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    state = model.encode(tiny_tensors)
    intervened = state.intervene(torch.full((4,), 7.0, dtype=torch.float64))
    source = tiny_tensors.target_source
    assert torch.equal(
        model.predict_invariant(state.final_invariant[source]),
        model.predict_invariant(intervened.final_invariant[source]),
    )
    assert torch.isfinite(model(tiny_tensors).predictions).all()


def test_mixed_head_reads_sigmoid_of_variant(small_schema, small_model_config):
    model = build_model(small_model_config, small_schema)
    z_invariant = torch.randn(3, 4, dtype=torch.float64)
    torch.testing.assert_close(
        model.predict_mixed(z_invariant, torch.zeros(3, 4, dtype=torch.float64)),
        model.mixed_head(z_invariant + 0.5),
    )
    torch.testing.assert_close(
        model.predict_mixed(z_invariant, torch.full((3, 4), -1e3, dtype=torch.float64)),
        model.mixed_head(z_invariant),
    )


def test_intervention_rejects_wrong_length(small_schema, small_model_config, tiny_tensors):
    state = build_model(small_model_config, small_schema).encode(tiny_tensors)
    with pytest.raises(ValueError):
        state.intervene(torch.zeros(3, dtype=torch.float64))


def test_entangled_model_has_no_variant_branch(small_schema, tiny_tensors):
    model = build_model(ModelConfig(hidden_dim=4, n_heads=1, entangled=True), small_schema)
    assert model.variant_parameter_count == 0
    assert model.mixed_head is None
    assert not any(layer.feature_mask_logits.requires_grad for layer in model.layers)
    state = model.encode(tiny_tensors)
    assert all(torch.count_nonzero(variant) == 0 for variant in state.variant)
    with pytest.raises(ConfigError):
        model.predict_mixed(state.final_invariant, state.final_variant)


def test_full_model_counts_mixed_head_parameters(small_schema, small_model_config):
    assert build_model(small_model_config, small_schema).variant_parameter_count == 4 * 4 + 4 + 4 + 1


def test_non_finite_activation_names_the_layer(small_schema, small_model_config, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    with torch.no_grad():
        model.layers[1].merge.weight.fill_(math.nan)
    with pytest.raises(NumericalError) as raised:
        model(tiny_tensors)
    assert raised.value.layer == 2
    assert raised.value.node == "p1"


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(hidden_dim=6, n_heads=4)
    with pytest.raises(ConfigError):
        ModelConfig(window=0)
    assert ModelConfig.from_dict({"window": "3", "unknown": 1}).window == 3


def test_objective_gradient_matches_finite_differences(small_schema, small_model_config, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    config = TrainConfig(lam=1.0, samples=2, seed=1)
    total, _, _ = objective(model, tiny_tensors, config, epoch=1)
    parameters = [parameter for parameter in model.parameters() if parameter.requires_grad]
    analytic = torch.cat([grad.reshape(-1) for grad in torch.autograd.grad(total, parameters)])

    step = 1e-5
    numeric = []
    with torch.no_grad():
        for parameter in parameters:
            flat = parameter.view(-1)
            for index in range(flat.numel()):
                original = flat[index].item()
                flat[index] = original + step
                upper = objective(model, tiny_tensors, config, epoch=1)[0].item()
                flat[index] = original - step
                lower = objective(model, tiny_tensors, config, epoch=1)[0].item()
                flat[index] = original
                numeric.append((upper - lower) / (2 * step))
    numeric = torch.tensor(numeric, dtype=torch.float64)
    scale = torch.maximum(analytic.abs(), numeric.abs()).clamp(min=1e-5)
    assert ((analytic - numeric).abs() / scale).max() < 1e-4


def test_checkpoint_round_trip(tmp_path, small_schema, small_model_config, tiny_table, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    scaler = fit_scaler(tiny_table)
    path = save_checkpoint(tmp_path / "full" / "checkpoint.pt", model, scaler, "full")
    loaded = load_checkpoint(path)
    assert loaded.method == "full"
    assert loaded.seed == small_model_config.seed
    assert loaded.scaler == scaler
    assert torch.equal(loaded.model(tiny_tensors).predictions, model(tiny_tensors).predictions)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ArtifactError):
        load_checkpoint(tmp_path / "nothing.pt")
