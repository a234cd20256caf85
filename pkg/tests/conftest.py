"""Shared fixtures: a small schema, a tiny cohort and its tensorized graphs."""

import numpy as np
import pytest

from datamodel.schema import CategoricalFeature, ContinuousFeature, FeatureSchema
from datamodel.split import split_temporal
from datamodel.table import CohortRecord, CohortTable
from dygraph.batch import GraphTensors
from dygraph.config import ModelConfig
from preprocess.graph import build_dynamic_graph, build_graph
from preprocess.scaler import fit_scaler


@pytest.fixture
def small_schema() -> FeatureSchema:
    return FeatureSchema(
        continuous=(
            ContinuousFeature("ALB", "g/L"),
            ContinuousFeature("HB", "g/L"),
            ContinuousFeature("ALT", "u/L"),
        ),
        categorical=(CategoricalFeature("Sex", 2), CategoricalFeature("Disease", 3)),
        target="ALB",
    )


def make_table(schema: FeatureSchema, patients: int, days: int, seed: int = 0) -> CohortTable:
    rng = np.random.default_rng(seed)
    records = []
    for patient in range(patients):
        sex = int(rng.integers(0, 2))
        disease = int(rng.integers(0, 3))
        for day in range(1, days + 1):
            continuous = tuple(float(value) for value in rng.normal(size=len(schema.continuous)))
            records.append(
                CohortRecord(
                    patient_id=f"p{patient + 1}",
                    day=day,
                    continuous=continuous,
                    categorical=(sex, disease),
                    target=continuous[schema.target_index],
                    env="early" if day <= days // 2 else "late",
                )
            )
    return CohortTable(schema, tuple(records))


@pytest.fixture
def tiny_table(small_schema) -> CohortTable:
    """6 patients over 3 days."""
    return make_table(small_schema, patients=6, days=3)


@pytest.fixture
def cohort_table(small_schema) -> CohortTable:
    """8 patients over 8 days, enough for a by-time split."""
    return make_table(small_schema, patients=8, days=8, seed=1)


@pytest.fixture
def tiny_tensors(tiny_table) -> GraphTensors:
    graph = build_graph(tiny_table, fit_scaler(tiny_table), k=2)
    return GraphTensors.from_graph(graph)


@pytest.fixture
def split_tensors(cohort_table):
    split = split_temporal(cohort_table, "by-time", (0.5, 0.25, 0.25))
    train, val, test = build_dynamic_graph(split, k=3)
    return split, [GraphTensors.from_graph(graph) for graph in (train, val, test)]


@pytest.fixture
def small_model_config() -> ModelConfig:
    return ModelConfig(hidden_dim=4, cat_embed_dim=2, n_layers=2, n_heads=1, seed=3)

