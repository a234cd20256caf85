"""Desk-scale distribution shift benchmark; run with ``pytest -m slow``."""

import numpy as np
import pytest

from datamodel.split import split_temporal
from dygraph.batch import GraphTensors
from dygraph.config import ModelConfig
from evalkit.importance import feature_importance
from evalkit.metrics import mae
from preprocess.graph import build_dynamic_graph
from synthgen.generator import EnvironmentSpec, GeneratorConfig, generate_cohort
from training.config import TrainConfig
from training.sweep import select_lambda
from training.trainer import train

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2, 3, 4)


def prepared(config: GeneratorConfig):
    table, annotation = generate_cohort(config)
    split = split_temporal(table, "by-time", (0.5, 0.25, 0.25))
    graphs = [GraphTensors.from_graph(graph) for graph in build_dynamic_graph(split, k=10)]
    return table.schema, annotation, graphs


def held_out_mae(model, tensors) -> float:
    predictions = tensors.unscale(model(tensors).predictions).detach()
    return mae(predictions.numpy(), tensors.target_label.numpy())


def test_invariant_training_beats_erm_under_shift():
    # day blocks 1-3 / 4-8 / 9-12: training inputs (days 1-5) span both training
    # environments, validation inputs (6-8) are train-neg, test inputs (9-11) are test
    environments = (
        EnvironmentSpec("train-pos", 2.0, 3.0),
        EnvironmentSpec("train-neg", -1.0, 5.0),
        EnvironmentSpec("test", -2.0, 4.0),
    )
    schema, _, (train_tensors, val_tensors, test_tensors) = prepared(
        GeneratorConfig(n_patients=60, n_days=12, environments=environments, seed=0)
    )
    train_config = TrainConfig(max_epochs=300, patience=50)
    scores = {"full": [], "erm": [], "entangled": []}
    for seed in SEEDS:
        model_config = ModelConfig(seed=seed)
        seeded = train_config.with_changes(seed=seed)
        full = select_lambda(model_config, seeded, schema, train_tensors, val_tensors)
        erm = train(model_config, seeded.with_changes(lam=0.0), schema, train_tensors, val_tensors)
        entangled = train(
            ModelConfig(seed=seed, entangled=True), seeded, schema, train_tensors, val_tensors
        )
        scores["full"].append(held_out_mae(full.model, test_tensors))
        scores["erm"].append(held_out_mae(erm.model, test_tensors))
        scores["entangled"].append(held_out_mae(entangled.model, test_tensors))
    means = {method: float(np.mean(values)) for method, values in scores.items()}
    assert means["full"] <= 0.95 * means["erm"]
    assert means["entangled"] >= means["full"]


def test_planted_feature_ranks_first():
    hits = 0
    for seed in SEEDS:
        config = GeneratorConfig(
            n_patients=30,
            n_days=8,
            invariant_features=("HB",),
            invariant_coefficients=(1.0,),
            variant_features=(),
            neighbor_strength=0.0,
            noise_sigma=0.0,
            seed=seed,
        )
        schema, _, (train_tensors, val_tensors, test_tensors) = prepared(config)
        result = train(
            ModelConfig(seed=seed), TrainConfig(max_epochs=300, patience=50, seed=seed),
            schema, train_tensors, val_tensors,
        )
        table = feature_importance(result.model, test_tensors)
        hits += table.ranking(schema.continuous_names)[0] == "HB"
    assert hits >= 4
