"""Experiment runs: split, scale, build graphs, train, evaluate and explain."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

import settings
from baselines.ablations import configs_for_method
from baselines.autoregressive import AutoregressiveForecaster
from baselines.constants import AR_ORDER, MA_WINDOW, METHOD_FULL, MODEL_METHODS
from baselines.moving_average import MovingAverageForecaster
from datamodel.constants import SPLIT_BY_TIME, SPLIT_MODES
from datamodel.schema import FeatureSchema, anic_schema, load_schema, save_schema
from datamodel.split import TemporalSplit, split_temporal, validate_fractions
from datamodel.table import CohortTable, load_cohort
from dygraph.batch import GraphTensors
from dygraph.checkpoint import load_checkpoint, save_checkpoint
from dygraph.config import ModelConfig
from dygraph.constants import CHECKPOINT_NAME
from errors import ArtifactError, ConfigError
from evalkit.constants import (
    COMPARISON_NAME,
    GROUP_ENV,
    IMPORTANCE_NAME,
    MARKERS_NAME,
    METRICS_NAME,
    PER_TIME_NAME,
)
from evalkit.export import write_csv, write_importance, write_metrics, write_per_time, write_showcase
from evalkit.importance import ImportanceTable, feature_importance
from evalkit.markers import marker_summary
from evalkit.predictions import baseline_predictions, model_predictions, target_keys
from evalkit.report import MetricsReport, aggregate_seeds, build_report, comparison_table
from preprocess.constants import DEFAULT_K
from preprocess.graph import DynamicGraph, build_dynamic_graph, write_graph_jsonl
from preprocess.scaler import StandardScaler
from training.config import TrainConfig
from training.constants import HISTORY_NAME
from training.sweep import select_lambda
from training.trainer import train, write_history
from utils import get_run_id, read_json, write_json

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "config.resolved.json"
SCHEMA_NAME = "schema.json"
DISPATCH_LOCAL = "local"
DISPATCH_CELERY = "celery"
DISPATCHES = (DISPATCH_LOCAL, DISPATCH_CELERY)
PARTS = ("train", "val", "test")
GRAPHS_DIR = "graphs"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a train/eval run depends on."""

    cohort: Optional[str] = None
    schema: Optional[str] = None
    out: str = settings.OUTPUT_ROOT
    run_id: Optional[str] = None
    split: str = SPLIT_BY_TIME
    fractions: Tuple[float, float, float] = (0.5, 0.25, 0.25)
    split_seed: Optional[int] = None
    k: int = DEFAULT_K
    parallel_knn: int = 1
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    methods: Tuple[str, ...] = (METHOD_FULL,)
    lambda_sweep: Tuple[float, ...] = ()
    ma_window: int = MA_WINDOW
    ar_order: int = AR_ORDER
    seeds: Tuple[int, ...] = (0,)
    group_by: str = GROUP_ENV
    showcase: Tuple[str, ...] = ()
    dispatch: str = DISPATCH_LOCAL

    def __post_init__(self):
        """Validate the run-level settings; model and train configs validate themselves."""
        if not self.seeds:
            raise ConfigError("the seed list is empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"duplicated seeds: {list(self.seeds)}")
        unknown = [method for method in self.methods if method not in MODEL_METHODS]
        if unknown or not self.methods:
            raise ConfigError(f"unknown methods {unknown}, expected some of {MODEL_METHODS}")
        if self.split not in SPLIT_MODES:
            raise ConfigError(f"unknown split mode {self.split!r}")
        validate_fractions(self.fractions)
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.parallel_knn < 1:
            raise ConfigError("parallel_knn must be >= 1")
        if self.dispatch not in DISPATCHES:
            raise ConfigError(f"unknown dispatch {self.dispatch!r}, expected one of {DISPATCHES}")
        if any(lam < 0 for lam in self.lambda_sweep):
            raise ConfigError("swept lambdas must be >= 0")

    def to_dict(self) -> Dict:
        """Serialize, nesting the model and train configs."""
        return {
            "cohort": self.cohort,
            "schema": self.schema,
            "out": self.out,
            "run_id": self.run_id,
            "split": self.split,
            "fractions": list(self.fractions),
            "split_seed": self.split_seed,
            "k": self.k,
            "parallel_knn": self.parallel_knn,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "methods": list(self.methods),
            "lambda_sweep": list(self.lambda_sweep),
            "ma_window": self.ma_window,
            "ar_order": self.ar_order,
            "seeds": list(self.seeds),
            "group_by": self.group_by,
            "showcase": list(self.showcase),
            "dispatch": self.dispatch,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        """Build a config from a (possibly partial) dict, ignoring unknown keys."""
        values = {key: value for key, value in data.items() if key in cls.__dataclass_fields__}
        values["model"] = ModelConfig.from_dict(values.get("model") or {})
        values["train"] = TrainConfig.from_dict(values.get("train") or {})
        for key in ("fractions", "methods", "lambda_sweep", "seeds", "showcase"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)

    def identity(self) -> Dict:
        """The fields that determine a run's results, hashed into its run id."""
        data = self.to_dict()
        for key in ("out", "run_id", "dispatch", "parallel_knn", "showcase"):
            data.pop(key)
        return data

    def resolved_run_id(self) -> str:
        """The explicit run id, or a hash of the configuration."""
        return self.run_id or get_run_id(self.identity())

    @property
    def run_dir(self) -> Path:
        """Directory of every artifact of this run."""
        return Path(self.out) / self.resolved_run_id()


@dataclass
class PreparedData:
    """Cohort, split, graphs and their tensors."""

    schema: FeatureSchema
    table: CohortTable
    split: TemporalSplit
    tensors: Dict[str, GraphTensors]
    scaler: StandardScaler
    graphs: Dict[str, DynamicGraph]


def seed_dir(run_dir: Path, method: str, seed: int) -> Path:
    """Directory of one trained (method, seed)."""
    return Path(run_dir) / method / f"seed-{seed}"


def load_inputs(config: ExperimentConfig) -> Tuple[FeatureSchema, CohortTable]:
    """Read the schema and the cohort a config points to."""
    if not config.cohort:
        raise ConfigError("no cohort given")
    if not Path(config.cohort).is_file():
        raise ArtifactError("cohort file not found", config.cohort)
    if config.schema:
        if not Path(config.schema).is_file():
            raise ArtifactError("schema file not found", config.schema)
        schema = load_schema(Path(config.schema))
    else:
        schema = anic_schema()
    return schema, load_cohort(Path(config.cohort), schema)


def prepare(config: ExperimentConfig) -> PreparedData:
    """Split the cohort, fit the scaler on train and tensorize the three graphs.

    :param config:
    :return: PreparedData
    """
    schema, table = load_inputs(config)
    split = split_temporal(table, config.split, config.fractions, seed=config.split_seed)
    graphs = build_dynamic_graph(split, k=config.k, n_jobs=config.parallel_knn)
    tensors = {
        name: GraphTensors.from_graph(graph, config.model.window, config.model.torch_dtype)
        for name, graph in zip(PARTS, graphs)
    }
    return PreparedData(schema, table, split, tensors, graphs[0].scaler, dict(zip(PARTS, graphs)))


def train_one(
    config: ExperimentConfig, data: PreparedData, method: str, seed: int, run_dir: Path
) -> Dict:
    """Train one method with one seed and write its checkpoint and history.

    :param config:
    :param data:
    :param method: full, erm or entangled
    :param seed:
    :param run_dir:
    :return: summary of the run
    """
    model_config, train_config = configs_for_method(
        method, replace(config.model, seed=seed), config.train.with_changes(seed=seed)
    )
    arguments = (model_config, train_config, data.schema, data.tensors["train"], data.tensors["val"])
    if config.lambda_sweep and method == METHOD_FULL:
        result = select_lambda(*arguments, grid=config.lambda_sweep)
    else:
        result = train(*arguments)

    directory = seed_dir(run_dir, method, seed)
    save_checkpoint(directory / CHECKPOINT_NAME, result.model, data.scaler, method)
    write_history(result.history, directory / HISTORY_NAME)
    summary = {"method": method, "seed": seed, "lambda": result.lam, **result.history.to_dict()}
    logger.info("trained %s seed %s: %s", method, seed, summary)
    return summary


def write_provenance(config: ExperimentConfig, schema: FeatureSchema) -> Path:
    """Write the resolved configuration, seeds and tool version plus the schema."""
    run_dir = config.run_dir
    save_schema(schema, run_dir / SCHEMA_NAME)
    resolved = dict(config.to_dict(), run_id=config.resolved_run_id(), version=settings.VERSION)
    write_json(run_dir / RESOLVED_CONFIG_NAME, resolved)
    return run_dir


def write_graphs(data: PreparedData, run_dir: Path) -> List[Path]:
    """Write the train, val and test graphs as ``graphs/<part>.jsonl``."""
    directory = Path(run_dir) / GRAPHS_DIR
    return [write_graph_jsonl(data.graphs[part], directory / f"{part}.jsonl") for part in PARTS]


def run_training(config: ExperimentConfig) -> List[Dict]:
    """Train every configured method for every seed.

    The three graphs are written next to the checkpoints.

    :param config:
    :return: one summary per (method, seed)
    """
    data = prepare(config)
    run_dir = write_provenance(config, data.schema)
    write_graphs(data, run_dir)
    jobs = [(method, seed) for method in config.methods for seed in config.seeds]
    if config.dispatch == DISPATCH_CELERY:
        from tasks import train_seed

        pending = [
            train_seed.delay(config.to_dict(), method, seed, str(run_dir)) for method, seed in jobs
        ]
        return [result.get() for result in pending]
    return [train_one(config, data, method, seed, run_dir) for method, seed in jobs]


def load_run_config(run_dir: Path) -> ExperimentConfig:
    """Read the resolved configuration of a run directory."""
    path = Path(run_dir) / RESOLVED_CONFIG_NAME
    if not path.is_file():
        raise ArtifactError("run directory has no resolved config", str(path))
    data = read_json(path)
    data["out"] = str(Path(run_dir).parent)
    data["run_id"] = Path(run_dir).name
    return ExperimentConfig.from_dict(data)


def evaluate_method_seeds(
    config: ExperimentConfig, data: PreparedData, run_dir: Path, method: str
) -> Tuple[MetricsReport, Dict[int, pd.DataFrame]]:
    """Evaluate every seed of a trained method on the test graph."""
    reports, frames = [], {}
    for seed in config.seeds:
        checkpoint = load_checkpoint(seed_dir(run_dir, method, seed) / CHECKPOINT_NAME)
        frame = model_predictions(checkpoint.model, data.tensors["test"], data.table, config.group_by)
        reports.append(build_report(frame, seed))
        frames[seed] = frame
    return aggregate_seeds(reports), frames


def evaluate_run(run_dir: Path, overrides: Optional[Dict] = None) -> Dict[str, MetricsReport]:
    """Evaluate the trained methods and the statistical baselines of a run.

    Writes metrics.json, comparison.csv, per_time_mae.csv (of the first
    method, and per method under its directory), markers.csv and showcase
    files (of the first method, and per method under its directory).

    :param run_dir:
    :param overrides: config fields to change for evaluation (group_by, showcase, baseline settings)
    :return: aggregated report per method
    """
    config = load_run_config(run_dir)
    if overrides:
        config = replace(config, **overrides)
    data = prepare(config)
    run_dir = Path(run_dir)

    reports: Dict[str, MetricsReport] = {}
    frames: Dict[str, Dict[int, pd.DataFrame]] = {}
    for method in config.methods:
        reports[method], frames[method] = evaluate_method_seeds(config, data, run_dir, method)

    keys = target_keys(data.tensors["test"])
    for forecaster in (MovingAverageForecaster(config.ma_window), AutoregressiveForecaster(config.ar_order)):
        frame = baseline_predictions(forecaster, data.split.train, data.table, keys, config.group_by)
        reports[forecaster.name] = aggregate_seeds([build_report(frame, seed) for seed in config.seeds])
        frames[forecaster.name] = {config.seeds[0]: frame}

    write_metrics(reports, run_dir / METRICS_NAME)
    write_csv(comparison_table(reports), run_dir / COMPARISON_NAME)
    primary = config.methods[0]
    write_per_time(reports[primary], run_dir / PER_TIME_NAME)
    for method, report in reports.items():
        write_per_time(report, run_dir / method / PER_TIME_NAME)
    write_csv(marker_summary(data.table), run_dir / MARKERS_NAME)
    if config.showcase:
        write_showcase(frames[primary][config.seeds[0]], config.showcase, run_dir)
        for method, seed_frames in frames.items():
            write_showcase(seed_frames[config.seeds[0]], config.showcase, run_dir / method)
    return reports


def compute_importance(
    run_dir: Path,
    method: str = METHOD_FULL,
    seed: Optional[int] = None,
    patients: Sequence[str] = (),
    part: str = "test",
) -> ImportanceTable:
    """Feature importance of a trained (method, seed) on one part, written to importance.csv.

    :param run_dir:
    :param method:
    :param seed: defaults to the first seed of the run
    :param patients: restrict the patient mean
    :param part: train, val or test
    :return: ImportanceTable
    """
    if part not in PARTS:
        raise ConfigError(f"unknown part {part!r}, expected one of {PARTS}")
    config = load_run_config(run_dir)
    seed = config.seeds[0] if seed is None else seed
    checkpoint = load_checkpoint(seed_dir(run_dir, method, seed) / CHECKPOINT_NAME)
    data = prepare(config)
    table = feature_importance(checkpoint.model, data.tensors[part], patients)
    write_importance(table, Path(run_dir) / IMPORTANCE_NAME)
    return table
