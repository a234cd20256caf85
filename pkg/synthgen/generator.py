"""Synthetic cohorts with a planted invariant mechanism and environment-dependent variant features.

The target of patient n on day t is

    y[n, t] = w . zI[n, t-1] + gamma * mean_{peers m} (w . zI[m, t-1]) + eps

in standardized units, where peers are the L1 nearest neighbours on the
invariant block. Variant features of day t follow ``beta_e * y[n, t+1] + eta``,
the label the day-t snapshot is used to predict, with the coefficient of the
record's environment. One extra day of targets is drawn for the last snapshot.
Everything is mapped back to measurement units with the per-feature (mean, std)
ranges.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from datamodel.constants import ANIC_CONTINUOUS
from datamodel.schema import FeatureSchema, anic_schema
from datamodel.table import CohortRecord, CohortTable
from errors import ConfigError, DataValidationError
from preprocess.knn import knn_edges
from synthgen.constants import (
    DEFAULT_DRIFT_SIGMA,
    DEFAULT_INVARIANT_FEATURES,
    DEFAULT_INVARIANT_WEIGHTS,
    DEFAULT_K_PEERS,
    DEFAULT_NEIGHBOR_STRENGTH,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_VARIANT_FEATURES,
    DEFAULT_VARIANT_NOISE,
    SCHEDULE_BY_PATIENT,
    SCHEDULE_BY_TIME,
    SCHEDULES,
    SHIFT_LABEL,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvironmentSpec:
    """An environment, its variant coefficient and its share of days or patients."""

    name: str
    beta: float
    weight: float = 1.0


def default_environments(count: int) -> Tuple[EnvironmentSpec, ...]:
    """Evenly weighted environments with betas spread from +2 to -2.

    :param count: number of environments
    :return: tuple of EnvironmentSpec
    """
    betas = np.linspace(2.0, -2.0, count) if count > 1 else np.array([2.0])
    return tuple(
        EnvironmentSpec(f"env{index + 1}", float(beta)) for index, beta in enumerate(betas)
    )


def default_feature_ranges() -> Dict[str, Tuple[float, float]]:
    """Mean and std of each biochemical marker."""
    return {name: (mean, std) for name, _, mean, std in ANIC_CONTINUOUS}


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of a synthetic cohort."""

    n_patients: int = 60
    n_days: int = 12
    environments: Tuple[EnvironmentSpec, ...] = field(
        default_factory=lambda: default_environments(2)
    )
    invariant_features: Tuple[str, ...] = DEFAULT_INVARIANT_FEATURES
    invariant_coefficients: Tuple[float, ...] = DEFAULT_INVARIANT_WEIGHTS
    variant_features: Tuple[str, ...] = DEFAULT_VARIANT_FEATURES
    neighbor_strength: float = DEFAULT_NEIGHBOR_STRENGTH
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    variant_noise: float = DEFAULT_VARIANT_NOISE
    drift_sigma: float = DEFAULT_DRIFT_SIGMA
    feature_ranges: Dict[str, Tuple[float, float]] = field(
        default_factory=default_feature_ranges
    )
    k_peers: int = DEFAULT_K_PEERS
    schedule: str = SCHEDULE_BY_TIME
    tied_categorical: Optional[str] = None
    tied_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        """Validate sizes, environments and feature blocks."""
        if self.n_patients < 2 or self.n_days < 2:
            raise ConfigError("a cohort needs at least 2 patients and 2 days")
        if len(self.environments) < 2:
            raise ConfigError("distribution shift requires at least 2 environments")
        betas = [environment.beta for environment in self.environments]
        if not (max(betas) > 0 > min(betas)):
            raise ConfigError("at least two environments need betas of opposite sign")
        names = [environment.name for environment in self.environments]
        if len(set(names)) != len(names):
            raise ConfigError(f"environment names must be unique: {names}")
        if any(environment.weight <= 0 for environment in self.environments):
            raise ConfigError("environment weights must be positive")
        if self.noise_sigma < 0 or self.variant_noise < 0 or self.drift_sigma < 0:
            raise ConfigError("noise levels must be >= 0")
        if not 1 <= self.k_peers < self.n_patients:
            raise ConfigError(
                f"k_peers must lie in [1, n_patients), got {self.k_peers} for {self.n_patients}"
            )
        if len(self.invariant_coefficients) != len(self.invariant_features):
            raise ConfigError("one invariant coefficient is needed per invariant feature")
        if set(self.invariant_features) & set(self.variant_features):
            raise ConfigError("invariant and variant features must be disjoint")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}, expected one of {SCHEDULES}")

    def to_dict(self) -> Dict:
        """Serialize for resolved configs."""
        data = asdict(self)
        data["environments"] = [asdict(environment) for environment in self.environments]
        data["feature_ranges"] = {name: list(pair) for name, pair in self.feature_ranges.items()}
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "GeneratorConfig":
        """Build a config from a dict, ignoring unknown keys."""
        fields = cls.__dataclass_fields__
        values = {key: value for key, value in data.items() if key in fields}
        if "environments" in values:
            values["environments"] = tuple(
                environment if isinstance(environment, EnvironmentSpec) else EnvironmentSpec(**environment)
                for environment in values["environments"]
            )
        if "feature_ranges" in values:
            values["feature_ranges"] = {
                name: (float(pair[0]), float(pair[1])) for name, pair in values["feature_ranges"].items()
            }
        for key in ("invariant_features", "invariant_coefficients", "variant_features"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)


@dataclass(frozen=True)
class PlantedAnnotation:
    """Ground truth of a generated cohort."""

    invariant: Tuple[str, ...]
    variant: Tuple[str, ...]
    beta: Dict[str, float]
    weights: Tuple[float, ...] = ()
    gamma: float = 0.0
    k_peers: int = DEFAULT_K_PEERS
    feature_ranges: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    tied_categorical: Optional[str] = None
    schedule: str = SCHEDULE_BY_TIME

    def __post_init__(self):
        """Invariant and variant names must not overlap."""
        if set(self.invariant) & set(self.variant):
            raise DataValidationError("invariant and variant feature sets overlap")

    def to_dict(self) -> Dict:
        """Serialize to the annotation json layout."""
        return {
            "invariant": list(self.invariant),
            "variant": list(self.variant),
            "beta": dict(self.beta),
            "weights": list(self.weights),
            "gamma": self.gamma,
            "k_peers": self.k_peers,
            "feature_ranges": {name: list(pair) for name, pair in self.feature_ranges.items()},
            "tied_categorical": self.tied_categorical,
            "schedule": self.schedule,
            "label": SHIFT_LABEL,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "PlantedAnnotation":
        """Rebuild an annotation from its json layout."""
        return cls(
            invariant=tuple(data["invariant"]),
            variant=tuple(data["variant"]),
            beta={name: float(value) for name, value in data["beta"].items()},
            weights=tuple(float(value) for value in data.get("weights", ())),
            gamma=float(data.get("gamma", 0.0)),
            k_peers=int(data.get("k_peers", DEFAULT_K_PEERS)),
            feature_ranges={
                name: (float(pair[0]), float(pair[1]))
                for name, pair in data.get("feature_ranges", {}).items()
            },
            tied_categorical=data.get("tied_categorical"),
            schedule=data.get("schedule", SCHEDULE_BY_TIME),
        )


def save_annotation(annotation: PlantedAnnotation, path: Path) -> Path:
    """Write the annotation json file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(annotation.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


def load_annotation(path: Path) -> PlantedAnnotation:
    """Read an annotation json file."""
    return PlantedAnnotation.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def block_boundaries(count: int, weights: List[float]) -> List[int]:
    """Split ``count`` ordered units into contiguous blocks proportional to ``weights``."""
    cumulative = np.cumsum(weights) / np.sum(weights)
    return [int(np.floor(value * count + 0.5)) for value in cumulative]


def assign_environments(config: GeneratorConfig) -> np.ndarray:
    """Environment index of every (patient, day) cell.

    :param config:
    :return: (patients, days) integer array
    """
    weights = [environment.weight for environment in config.environments]
    units = config.n_days if config.schedule == SCHEDULE_BY_TIME else config.n_patients
    labels = np.zeros(units, dtype=int)
    start = 0
    for index, stop in enumerate(block_boundaries(units, weights)):
        labels[start:stop] = index
        start = stop
    if config.schedule == SCHEDULE_BY_TIME:
        return np.tile(labels, (config.n_patients, 1))
    return np.tile(labels[:, None], (1, config.n_days))


def peer_means(invariant: np.ndarray, signal: np.ndarray, k: int) -> np.ndarray:
    """Mean signal of each patient's L1 nearest peers.

    :param invariant: (patients, features) standardized invariant block of one day
    :param signal: (patients,) invariant signal of the same day
    :param k: peers per patient
    :return: (patients,) peer means
    """
    neighbors: Dict[int, List[int]] = {}
    for src, dst in knn_edges(invariant, k):
        neighbors.setdefault(src, []).append(dst)
    return np.array(
        [signal[neighbors[node]].mean() if node in neighbors else 0.0 for node in range(len(signal))]
    )


def generate_cohort(
    config: GeneratorConfig, schema: Optional[FeatureSchema] = None
) -> Tuple[CohortTable, PlantedAnnotation]:
    """Generate a cohort and the annotation of what was planted in it.

    :param config:
    :param schema: defaults to the ANIC-like schema
    :return: (CohortTable, PlantedAnnotation)
    """
    schema = schema or anic_schema()
    names = schema.continuous_names
    target = schema.target
    for name in config.invariant_features + config.variant_features:
        if name not in names:
            raise ConfigError(f"feature {name!r} is not a continuous feature of the schema")
        if name == target:
            raise ConfigError("the target cannot be an invariant or variant feature")
    for name in names:
        if name not in config.feature_ranges:
            raise ConfigError(f"no (mean, std) range for feature {name!r}")
    if config.tied_categorical and config.tied_categorical not in schema.categorical_names:
        raise ConfigError(f"unknown categorical feature {config.tied_categorical!r}")

    rng = np.random.default_rng(config.seed)
    patients, days = config.n_patients, config.n_days
    weights = np.asarray(config.invariant_coefficients, dtype=np.float64)

    # invariant block for days 0..n_days; day 0 only feeds the first target
    baseline = rng.standard_normal((patients, 1, len(weights)))
    drift = rng.standard_normal((patients, days + 1, len(weights)))
    invariant = baseline + config.drift_sigma * drift
    signal = invariant @ weights

    categorical = np.stack(
        [rng.integers(0, cardinality, size=patients) for cardinality in schema.cardinalities],
        axis=1,
    ) if schema.categorical else np.zeros((patients, 0), dtype=int)
    tied = np.zeros(patients)
    if config.tied_categorical:
        column = schema.categorical_names.index(config.tied_categorical)
        tied = config.tied_weight * categorical[:, column]

    # column days + 1 is only read by the variant features of the last day
    target_std = np.zeros((patients, days + 2))
    noise = rng.standard_normal((patients, days + 2))
    for day in range(1, days + 2):
        peers = peer_means(invariant[:, day - 1, :], signal[:, day - 1], config.k_peers)
        target_std[:, day] = (
            signal[:, day - 1]
            + config.neighbor_strength * peers
            + tied
            + config.noise_sigma * noise[:, day]
        )

    environment_index = assign_environments(config)
    betas = np.array([environment.beta for environment in config.environments])
    variant_noise = rng.standard_normal((patients, days + 1, len(config.variant_features)))
    distractors = rng.standard_normal((patients, days + 1, len(names)))

    standardized = {}
    for column, name in enumerate(names):
        if name == target:
            standardized[name] = target_std[:, : days + 1]
        elif name in config.invariant_features:
            standardized[name] = invariant[:, :, config.invariant_features.index(name)]
        elif name in config.variant_features:
            block = config.variant_features.index(name)
            beta_cells = np.zeros((patients, days + 1))
            beta_cells[:, 1:] = betas[environment_index]
            standardized[name] = (
                beta_cells * target_std[:, 1:] + config.variant_noise * variant_noise[:, :, block]
            )
        else:
            standardized[name] = distractors[:, :, column]

    raw = {
        name: config.feature_ranges[name][0] + config.feature_ranges[name][1] * standardized[name]
        for name in names
    }

    records = []
    for patient in range(patients):
        for day in range(1, days + 1):
            continuous = tuple(float(raw[name][patient, day]) for name in names)
            records.append(
                CohortRecord(
                    patient_id=f"p{patient + 1}",
                    day=day,
                    continuous=continuous,
                    categorical=tuple(int(value) for value in categorical[patient]),
                    target=continuous[schema.target_index],
                    env=config.environments[environment_index[patient, day - 1]].name,
                )
            )

    invariant_names = tuple(config.invariant_features)
    if config.tied_categorical:
        invariant_names += (config.tied_categorical,)
    annotation = PlantedAnnotation(
        invariant=invariant_names,
        variant=tuple(config.variant_features),
        beta={environment.name: environment.beta for environment in config.environments},
        weights=tuple(float(value) for value in weights),
        gamma=config.neighbor_strength,
        k_peers=config.k_peers,
        feature_ranges={name: tuple(config.feature_ranges[name]) for name in names},
        tied_categorical=config.tied_categorical,
        schedule=config.schedule,
    )
    logger.info(
        "generated %s patients x %s days over %s environments",
        patients,
        days,
        len(config.environments),
    )
    return CohortTable(schema, tuple(records)), annotation
