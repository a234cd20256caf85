import dataclasses

import numpy as np
import pytest

from datamodel.schema import anic_schema
from datamodel.table import CohortTable, save_cohort
from errors import ConfigError, DataValidationError
from synthgen.constants import SCHEDULE_BY_PATIENT
from synthgen.generator import (
    EnvironmentSpec,
    GeneratorConfig,
    PlantedAnnotation,
    default_environments,
    generate_cohort,
)
from synthgen.verify import verify_planting


def unit_ranges():
    return {name: (0.0, 1.0) for name in anic_schema().continuous_names}


def column(table: CohortTable, name: str) -> np.ndarray:
    index = table.schema.continuous_names.index(name)
    return np.array([record.continuous[index] for record in table.records])


def test_degenerate_generator_copies_lagged_invariant_feature():
    config = GeneratorConfig(
        n_patients=6,
        n_days=5,
        invariant_features=("IBIL",),
        invariant_coefficients=(1.0,),
        neighbor_strength=0.0,
        noise_sigma=0.0,
        feature_ranges=unit_ranges(),
        k_peers=2,
    )
    table, _ = generate_cohort(config)
    ibil = table.schema.continuous_names.index("IBIL")
    values = {(record.patient_id, record.day): record for record in table.records}
    for (patient, day), record in values.items():
        if day == 1:
            continue
        assert record.target == values[(patient, day - 1)].continuous[ibil]


def test_variant_features_follow_environment_sign():
    table, annotation = generate_cohort(GeneratorConfig(seed=5))
    envs = np.array(table.environments)
    target = column(table, "ALB")
    for env, beta in annotation.beta.items():
        rows = envs == env
        for name in annotation.variant:
            slope = np.polyfit(target[rows], column(table, name)[rows], 1)[0]
            assert np.sign(slope) == np.sign(beta)


def test_same_seed_gives_identical_bytes(tmp_path):
    config = GeneratorConfig(n_patients=10, n_days=4, k_peers=3, seed=11)
    first = save_cohort(generate_cohort(config)[0], tmp_path / "a.csv")
    second = save_cohort(generate_cohort(config)[0], tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()


def test_record_environments_and_feature_scale():
    table, annotation = generate_cohort(GeneratorConfig(n_patients=40, n_days=10, seed=2))
    assert set(table.environments) == {"env1", "env2"}
    hb = column(table, "HB")
    mean, std = annotation.feature_ranges["HB"]
    assert abs(hb.mean() - mean) < std
    assert all(record.target == record.continuous[0] for record in table.records)


def test_by_patient_schedule_keeps_one_environment_per_patient():
    table, _ = generate_cohort(GeneratorConfig(n_patients=10, n_days=3, k_peers=2, schedule=SCHEDULE_BY_PATIENT))
    by_patient = {}
    for record in table.records:
        by_patient.setdefault(record.patient_id, set()).add(record.env)
    assert all(len(envs) == 1 for envs in by_patient.values())


def test_verify_reports_planted_signs():
    table, annotation = generate_cohort(GeneratorConfig(seed=3))
    report = verify_planting(table, annotation)
    assert report.ok
    for name in annotation.variant:
        assert report.correlations["env1"][name] > 0
        assert report.correlations["env2"][name] < 0


def test_verify_noiseless_mechanism_fits_exactly():
    config = GeneratorConfig(n_patients=20, n_days=6, neighbor_strength=0.0, noise_sigma=0.0, k_peers=3)
    report = verify_planting(*generate_cohort(config))
    assert report.r2 == pytest.approx(1.0, abs=1e-9)


def test_verify_flags_shuffled_targets():
    table, annotation = generate_cohort(GeneratorConfig(seed=7))
    target_index = table.schema.target_index
    shuffled = np.random.default_rng(0).permutation(len(table))
    records = []
    for record, source in zip(table.records, shuffled):
        value = table.records[source].target
        continuous = list(record.continuous)
        continuous[target_index] = value
        records.append(dataclasses.replace(record, continuous=tuple(continuous), target=value))
    report = verify_planting(CohortTable(table.schema, tuple(records)), annotation)
    assert report.r2 < 0.2
    assert not report.ok


def test_verify_rejects_unknown_environment():
    table, annotation = generate_cohort(GeneratorConfig(n_patients=10, n_days=4, k_peers=2))
    stale = dataclasses.replace(annotation, beta={"env1": 2.0})
    with pytest.raises(DataValidationError, match="env2"):
        verify_planting(table, stale)


def test_annotation_sets_must_be_disjoint():
    with pytest.raises(DataValidationError):
        PlantedAnnotation(invariant=("HB",), variant=("HB",), beta={})


def test_single_environment_is_a_config_error():
    with pytest.raises(ConfigError):
        GeneratorConfig(environments=default_environments(1))


def test_environments_need_opposite_signs():
    with pytest.raises(ConfigError):
        GeneratorConfig(environments=(EnvironmentSpec("a", 1.0), EnvironmentSpec("b", 2.0)))


def test_config_dict_round_trip():
    config = GeneratorConfig(n_patients=12, environments=default_environments(3), seed=4)
    assert GeneratorConfig.from_dict(config.to_dict()) == config


def test_variant_features_track_next_day_target():
    config = GeneratorConfig(n_patients=8, n_days=5, k_peers=3, variant_noise=0.0, feature_ranges=unit_ranges())
    table, annotation = generate_cohort(config)
    alt = table.schema.continuous_names.index("ALT")
    rows = {(record.patient_id, record.day): record for record in table.records}
    for (patient, day), record in rows.items():
        following = rows.get((patient, day + 1))
        if following is None:
            continue
        assert record.continuous[alt] == pytest.approx(annotation.beta[record.env] * following.target, abs=1e-12)


def test_verify_accepts_zero_beta_environment():
    table, annotation = generate_cohort(GeneratorConfig(environments=default_environments(3), seed=3))
    assert annotation.beta["env2"] == 0.0
    report = verify_planting(table, annotation)
    assert report.ok
    for name in annotation.variant:
        assert abs(report.correlations["env2"][name]) <= 0.3
        assert report.correlations["env1"][name] > 0
        assert report.correlations["env3"][name] < 0


def test_verify_flags_correlation_where_beta_is_zero():
    table, annotation = generate_cohort(GeneratorConfig(seed=3))
    stale = dataclasses.replace(annotation, beta={"env1": 0.0, "env2": annotation.beta["env2"]})
    report = verify_planting(table, stale)
    assert not report.ok
    assert any(flag.startswith("env1:") and "beta is 0" in flag for flag in report.flags)
