import dataclasses

import numpy as np
import pytest

from datamodel.schema import anic_schema
from datamodel.split import split_temporal
from datamodel.table import CohortRecord, CohortTable
from errors import DataValidationError
from preprocess.encoding import encode, encode_records, one_hot_block
from preprocess.graph import build_dynamic_graph, build_graph, read_graph_jsonl, write_graph_jsonl
from preprocess.knn import knn_edges
from preprocess.scaler import fit_scaler
from tests.conftest import make_table


def table_with_alb(schema, values):
    records = tuple(
        CohortRecord(f"p{index}", 1, (value, 0.0, 1.0), (0, 0), value)
        for index, value in enumerate(values)
    )
    return CohortTable(schema, records)


def brute_force_edges(points, k):
    count = len(points)
    edges = []
    for src in range(count):
        others = sorted(
            (float(np.abs(points[src] - points[dst]).sum()), dst) for dst in range(count) if dst != src
        )
        edges.extend((src, dst) for _, dst in others[: min(k, count - 1)])
    return edges


def test_scaler_uses_population_std(small_schema):
    scaler = fit_scaler(table_with_alb(small_schema, [1.0, 2.0, 3.0]))
    assert scaler.mean[0] == pytest.approx(2.0)
    assert scaler.std[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-12)
    assert scaler.fitted_on == 3


def test_constant_column_keeps_unit_std_and_is_flagged(small_schema):
    scaler = fit_scaler(table_with_alb(small_schema, [5.0, 5.0, 5.0]))
    assert scaler.mean[0] == 5.0
    assert scaler.std[0] == 1.0
    assert scaler.zero_std == (True, True, True)
    assert scaler.transform([[5.0, 0.0, 1.0]]).tolist() == [[0.0, 0.0, 0.0]]


def test_scaler_rejects_empty_table(small_schema):
    with pytest.raises(DataValidationError):
        fit_scaler(CohortTable(small_schema, ()))


def test_encoded_mean_row_has_zero_continuous_block(tiny_table):
    scaler = fit_scaler(tiny_table)
    record = CohortRecord("mean", 1, tuple(scaler.mean), (1, 2), scaler.mean[0])
    row = encode_records([record], tiny_table.schema, scaler)[0]
    np.testing.assert_array_equal(row[:3], np.zeros(3))
    np.testing.assert_array_equal(row[3:], [0, 1, 0, 0, 1])


def test_anic_encoded_width():
    assert anic_schema().encoded_dim == 30


def test_one_hot_block(small_schema):
    block = one_hot_block(np.array([[1, 0], [0, 2]]), small_schema)
    np.testing.assert_array_equal(block, [[0, 1, 1, 0, 0], [1, 0, 0, 0, 1]])


@pytest.mark.parametrize("categorical", [[[0, 3]], [[2, 0]], [[-1, 0]]])
def test_one_hot_block_rejects_unknown_category(small_schema, categorical):
    with pytest.raises(DataValidationError):
        one_hot_block(np.array(categorical), small_schema)


def test_scaler_matches_population_statistics(tiny_table):
    scaler = fit_scaler(tiny_table)
    values = np.array([record.continuous for record in tiny_table.records])
    np.testing.assert_allclose(scaler.mean, values.mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(scaler.std, values.std(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(scaler.transform(values).mean(axis=0), 0.0, atol=1e-12)
    assert scaler.zero_std == (False, False, False)


def test_encode_is_keyed_by_patient_and_day(tiny_table):
    rows = encode(tiny_table, fit_scaler(tiny_table))
    assert len(rows) == 18
    assert rows[("p2", 3)].shape == (tiny_table.schema.encoded_dim,)


def test_knn_small_line():
    assert knn_edges(np.array([[0.0], [1.0], [3.0]]), 1) == [(0, 1), (1, 0), (2, 1)]


def test_knn_ties_go_to_smaller_index():
    assert knn_edges(np.array([[1.0], [0.0], [2.0]]), 1)[0] == (0, 1)
    assert knn_edges(np.array([[0.0], [0.0], [4.0]]), 1)[2] == (2, 0)


def test_knn_large_k_gives_complete_graph():
    edges = knn_edges(np.arange(4.0).reshape(4, 1), 10)
    assert sorted(edges) == [(src, dst) for src in range(4) for dst in range(4) if src != dst]


def test_knn_single_node_has_no_edges():
    assert knn_edges(np.zeros((1, 3)), 2) == []


def test_knn_matches_exhaustive_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        count = int(rng.integers(2, 201))
        points = rng.integers(0, 4, size=(count, 2)).astype(float)
        k = int(rng.integers(1, count + 2))
        assert knn_edges(points, k) == brute_force_edges(points, k)


def test_graph_snapshots_and_clamped_degree(small_schema):
    table = make_table(small_schema, patients=50, days=2)
    graph = build_graph(table, fit_scaler(table), k=100)
    assert graph.times == [1, 2]
    for snapshot in graph.snapshots:
        degrees = np.bincount([src for src, _ in snapshot.edges], minlength=50)
        assert (degrees == 49).all()


def test_two_patients_three_days(small_schema):
    table = make_table(small_schema, patients=2, days=3)
    graph = build_graph(table, fit_scaler(table), k=1)
    assert len(graph.snapshots) == 3
    assert all(len(snapshot.node_ids) == 2 for snapshot in graph.snapshots)
    assert graph.snapshots[0].out_neighbors(0) == [1]


def test_scaler_ignores_validation_and_test_values(cohort_table):
    split = split_temporal(cohort_table, "by-time", (0.5, 0.25, 0.25))
    reference = build_dynamic_graph(split, k=2)[0].scaler

    def shifted(part):
        records = tuple(
            dataclasses.replace(
                record,
                continuous=tuple(value + 1e3 for value in record.continuous),
                target=record.target + 1e3,
            )
            for record in part.records
        )
        return CohortTable(part.schema, records)

    perturbed = dataclasses.replace(split, val=shifted(split.val), test=shifted(split.test))
    graphs = build_dynamic_graph(perturbed, k=2)
    assert graphs[0].scaler == reference
    assert graphs[2].scaler == reference


def test_by_time_parts_carry_unlabelled_history(split_tensors):
    split, _ = split_tensors
    train, val, test = build_dynamic_graph(split, k=3)
    assert train.times == [1, 2, 3, 4]
    assert val.times == [1, 2, 3, 4, 5, 6]
    assert test.times == list(range(1, 9))
    assert not any(val.snapshot_at(day).label_mask.any() for day in (1, 2, 3, 4))
    assert all(val.snapshot_at(day).label_mask.all() for day in (5, 6))
    assert not test.snapshot_at(6).label_mask.any()


def test_by_patient_parts_are_used_as_they_are(cohort_table):
    split = split_temporal(cohort_table, "by-patient", (0.5, 0.25, 0.25), seed=0)
    _, val, _ = build_dynamic_graph(split, k=1)
    assert val.times == cohort_table.days
    assert all(snapshot.label_mask.all() for snapshot in val.snapshots)
    assert {node for snapshot in val.snapshots for node in snapshot.node_ids} == set(split.val.patients)


def test_parallel_construction_matches_serial(cohort_table):
    scaler = fit_scaler(cohort_table)
    serial = build_graph(cohort_table, scaler, k=2)
    parallel = build_graph(cohort_table, scaler, k=2, n_jobs=2)
    for left, right in zip(serial.snapshots, parallel.snapshots):
        assert left.edges == right.edges
        np.testing.assert_array_equal(left.features, right.features)


def test_graph_jsonl_round_trip(tmp_path, tiny_table):
    scaler = fit_scaler(tiny_table)
    graph = build_graph(tiny_table, scaler, k=2)
    path = write_graph_jsonl(graph, tmp_path / "graph.jsonl")
    restored = read_graph_jsonl(path, tiny_table.schema, scaler)
    assert restored.times == graph.times
    for left, right in zip(graph.snapshots, restored.snapshots):
        assert left.edges == right.edges
        assert left.node_ids == right.node_ids
        np.testing.assert_array_equal(left.features, right.features)
        np.testing.assert_array_equal(left.label_mask, right.label_mask)
