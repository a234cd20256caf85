from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
import torch

from baselines.moving_average import MovingAverageForecaster
from datamodel.table import CohortTable
from dygraph.network import build_model
from errors import ConfigError, DataValidationError
from evalkit.export import write_per_time, write_showcase
from evalkit.importance import ImportanceTable, feature_importance
from evalkit.markers import marker_summary
from evalkit.metrics import mae, per_time_mae, rmse
from evalkit.predictions import (
    baseline_predictions,
    group_labels,
    model_predictions,
    target_keys,
)
from evalkit.report import MetricsReport, aggregate_seeds, build_report, comparison_table


def report(value: float, seed: int, groups=("a", "b")) -> MetricsReport:
    return MetricsReport(
        overall={"rmse": value, "mae": value / 2},
        groups={group: {"rmse": value, "mae": value} for group in groups},
        counts={group: 2 for group in groups},
        per_time={1: value, 2: value + 1},
        seeds=[seed],
    )


def test_error_metrics_examples():
    assert rmse([1, 2], [1, 2]) == 0.0 and mae([1, 2], [1, 2]) == 0.0
    assert rmse([1, 2], [1, 4]) == pytest.approx(np.sqrt(2), abs=1e-5)
    assert mae([1, 2], [1, 4]) == 1.0
    assert mae([1, 2], [1, 4], mask=[True, False]) == 0.0


def test_error_metrics_need_a_pair():
    with pytest.raises(DataValidationError):
        rmse([1, 2], [1, 4], mask=[False, False])
    with pytest.raises(DataValidationError):
        mae([], [])


def test_rmse_bounds_mae():
    rng = np.random.default_rng(0)
    for _ in range(200):
        size = int(rng.integers(1, 30))
        pred, label = rng.normal(size=size) * 5, rng.normal(size=size)
        assert rmse(pred, label) >= mae(pred, label) - 1e-12


def test_per_time_mae():
    curve = per_time_mae([1.0, 3.0, 2.0], [0.0, 0.0, 0.0], [1, 1, 2])
    assert curve == {1: 2.0, 2: 2.0}
    assert per_time_mae([5.0, 6.0], [5.0, 6.0], [3, 4]) == {3: 0.0, 4: 0.0}
    assert per_time_mae([1.0, 2.0], [0.0, 0.0], [3, 4], mask=[False, True]) == {4: 2.0}


def test_aggregate_two_seeds():
    aggregated = aggregate_seeds([report(2.0, 0), report(4.0, 1)])
    assert aggregated.overall["rmse"] == 3.0
    assert aggregated.std["overall"]["rmse"] == 1.0
    assert aggregated.per_time == {1: 3.0, 2: 4.0}
    assert aggregated.seeds == [0, 1]


def test_aggregate_single_and_identical_reports():
    single = aggregate_seeds([report(2.0, 0)])
    assert single.overall == {"rmse": 2.0, "mae": 1.0}
    assert single.std is None
    same = aggregate_seeds([report(2.0, 0), report(2.0, 1)])
    assert same.std["groups"]["a"] == {"rmse": 0.0, "mae": 0.0}


def test_aggregate_rejects_mismatched_groups():
    with pytest.raises(DataValidationError):
        aggregate_seeds([report(2.0, 0), report(2.0, 1, groups=("a", "c"))])
    with pytest.raises(DataValidationError):
        aggregate_seeds([])


def test_group_mse_decomposes_overall_mse():
    rng = np.random.default_rng(4)
    frame = pd.DataFrame(
        {
            "day": rng.integers(1, 5, size=40),
            "label": rng.normal(size=40),
            "prediction": rng.normal(size=40),
            "group": rng.choice(["Trauma", "Surgery", "Internal"], size=40),
        }
    )
    built = build_report(frame, seed=3)
    assert built.count == 40
    weighted = sum(built.counts[group] * built.groups[group]["rmse"] ** 2 for group in built.groups) / 40
    assert built.overall["rmse"] ** 2 == pytest.approx(weighted)
    assert MetricsReport.from_dict(built.to_dict()) == built


def test_comparison_columns():
    table = comparison_table({"full": report(2.0, 0), "ma": report(3.0, 0)})
    assert list(table["method"]) == ["full", "ma"]
    assert "average_rmse_mean" in table.columns and "b_mae_mean" in table.columns
    assert not any(column.endswith("_std") for column in table.columns)
    aggregated = comparison_table({"full": aggregate_seeds([report(2.0, 0), report(4.0, 1)])})
    assert aggregated.loc[0, "average_rmse_std"] == 1.0


def test_disease_groups_use_category_labels(tiny_table):
    keys = [("p1", 2), ("p2", 3)]
    labels = group_labels(tiny_table, keys, "Disease")
    assert set(labels) <= {"Trauma", "Surgery", "Internal"}
    assert group_labels(tiny_table, keys, "Sex")[0].startswith("Sex=")
    assert group_labels(tiny_table, [("p1", 1)], "env") == ["early"]
    with pytest.raises(ConfigError):
        group_labels(tiny_table, keys, "ALB")


def test_model_predictions_frame(small_schema, small_model_config, tiny_table, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    frame = model_predictions(model, tiny_tensors, tiny_table)
    assert len(frame) == len(target_keys(tiny_tensors)) == 12
    assert frame["day"].min() == 2
    assert list(frame.columns) == ["patient_id", "day", "label", "prediction", "group"]


def test_baseline_predictions_frame(tiny_table):
    keys = [("p1", 2), ("p1", 3)]
    frame = baseline_predictions(MovingAverageForecaster(window=1), tiny_table, tiny_table, keys)
    history = tiny_table.target_history()["p1"]
    assert frame["prediction"].tolist() == [history[1], history[2]]
    assert frame["label"].tolist() == [history[2], history[3]]


def test_importance_of_disconnected_features_is_zero(small_schema, small_model_config, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    with torch.no_grad():
        model.input_projection.weight[:, 1] = 0.0
        model.input_projection.weight[:, 3:5] = 0.0
    table = feature_importance(model, tiny_tensors)
    assert table.days == [2, 3]
    assert table.values.shape == (5, 2)
    importance = dict(zip(table.features, table.values.tolist()))
    assert importance["HB"] == [0.0, 0.0]
    assert importance["Sex"] == [0.0, 0.0]
    assert (table.values >= 0).all()
    assert table.values[0].sum() > 0
    assert table.ranking(["HB", "ALB"]) == ["ALB", "HB"]


def test_importance_for_selected_patients(small_schema, small_model_config, tiny_tensors):
    model = build_model(small_model_config, small_schema)
    table = feature_importance(model, tiny_tensors, patients=["p2"])
    assert table.days == [2, 3]
    frame = table.to_frame()
    assert list(frame.columns) == ["feature", "day", "importance"]
    assert len(frame) == 10
    with pytest.raises(DataValidationError):
        feature_importance(model, tiny_tensors, patients=["nobody"])


def test_importance_table_rejects_negative_values():
    with pytest.raises(ValueError):
        ImportanceTable(["a"], [1], np.array([[-1.0]]))


def test_exports(tmp_path):
    frame = pd.DataFrame(
        {"patient_id": ["p1", "p1", "p2"], "day": [2, 3, 2], "label": [1.0, 2.0, 3.0], "prediction": [1.5, 2.5, 2.0]}
    )
    paths = write_showcase(frame, ["p1", "p9"], tmp_path)
    assert [path.name for path in paths] == ["p1.csv"]
    assert paths[0].read_text().splitlines() == ["day,label,prediction", "2,1.0,1.5", "3,2.0,2.5"]
    curve = write_per_time(report(2.0, 0), tmp_path / "per_time_mae.csv")
    assert curve.read_text().splitlines() == ["day,mae", "1,2.0", "2,3.0"]


def test_marker_summary_per_day_and_environment(tiny_table):
    frame = marker_summary(tiny_table)
    assert list(frame.columns) == ["axis", "group", "feature", "count", "mean", "std", "q25", "median", "q75"]
    days = frame[frame["axis"] == "day"]
    assert days["group"].tolist() == ["1"] * 3 + ["2"] * 3 + ["3"] * 3
    assert days["feature"].tolist()[:3] == ["ALB", "HB", "ALT"]
    values = np.array([record.continuous[1] for record in tiny_table.records if record.day == 2])
    row = days[(days["group"] == "2") & (days["feature"] == "HB")].iloc[0]
    assert row["count"] == 6
    assert row["mean"] == pytest.approx(values.mean())
    assert row["std"] == pytest.approx(values.std(ddof=1))
    assert row["median"] == pytest.approx(np.median(values))
    assert row["q25"] <= row["median"] <= row["q75"]
    envs = frame[frame["axis"] == "env"]
    assert sorted(set(envs["group"])) == ["early", "late"]
    assert envs[envs["feature"] == "ALB"]["count"].sum() == len(tiny_table)


def test_marker_summary_skips_untagged_environments(tiny_table):
    untagged = CohortTable(tiny_table.schema, tuple(replace(record, env=None) for record in tiny_table.records))
    frame = marker_summary(untagged)
    assert set(frame["axis"]) == {"day"}
    with pytest.raises(ConfigError):
        marker_summary(tiny_table, axes=("patient_id",))
