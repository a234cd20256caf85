"""Command line entry point: synth, train, eval and importance subcommands.

Every subcommand accepts ``--config`` pointing to a json file; explicit flags
win over the file, which wins over built-in defaults.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import settings
from baselines.constants import METHOD_FULL
from datamodel.schema import anic_schema, save_schema
from datamodel.table import save_cohort
from errors import AlbuminError, DataValidationError
from pipeline import (
    RESOLVED_CONFIG_NAME,
    SCHEMA_NAME,
    ExperimentConfig,
    compute_importance,
    evaluate_run,
    run_training,
)
from synthgen.generator import GeneratorConfig, default_environments, generate_cohort, save_annotation
from synthgen.verify import verify_planting
from utils import get_run_id, parse_list, read_json, write_json

logger = logging.getLogger(__name__)

COHORT_NAME = "cohort.csv"
ANNOTATION_NAME = "annotation.json"
PLANTING_NAME = "planting.json"

# flag dest -> (section, field); section None means a top-level field
SYNTH_FLAGS = {
    "patients": (None, "n_patients"),
    "days": (None, "n_days"),
    "seed": (None, "seed"),
    "noise": (None, "noise_sigma"),
    "variant_noise": (None, "variant_noise"),
    "drift": (None, "drift_sigma"),
    "k_peers": (None, "k_peers"),
    "schedule": (None, "schedule"),
    "tied_categorical": (None, "tied_categorical"),
}

TRAIN_FLAGS = {
    "cohort": (None, "cohort"),
    "schema": (None, "schema"),
    "split": (None, "split"),
    "fractions": (None, "fractions"),
    "split_seed": (None, "split_seed"),
    "k": (None, "k"),
    "parallel_knn": (None, "parallel_knn"),
    "seeds": (None, "seeds"),
    "methods": (None, "methods"),
    "lambda_sweep": (None, "lambda_sweep"),
    "group_by": (None, "group_by"),
    "dispatch": (None, "dispatch"),
    "hidden_dim": ("model", "hidden_dim"),
    "cat_embed_dim": ("model", "cat_embed_dim"),
    "layers": ("model", "n_layers"),
    "heads": ("model", "n_heads"),
    "window": ("model", "window"),
    "te_mode": ("model", "te_mode"),
    "activation": ("model", "activation"),
    "lr": ("train", "lr"),
    "weight_decay": ("train", "weight_decay"),
    "max_epochs": ("train", "max_epochs"),
    "patience": ("train", "patience"),
    "samples": ("train", "samples"),
    "lam": ("train", "lam"),
    "intervention": ("train", "intervention"),
}

EVAL_OVERRIDES = ("group_by", "ma_window", "ar_order", "showcase")


def int_list(value: str) -> List[int]:
    """Comma separated integers."""
    return parse_list(value, int)


def float_list(value: str) -> List[float]:
    """Comma separated floats."""
    return parse_list(value, float)


def str_list(value: str) -> List[str]:
    """Comma separated strings."""
    return parse_list(value, str)


def add_common(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand."""
    parser.add_argument("--config", help="json experiment file; flags win over it")
    parser.add_argument("--log-level", dest="log_level", default=None)


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser of every subcommand."""
    parser = argparse.ArgumentParser(
        prog="albumin", description="Out-of-distribution albumin prediction on dynamic patient graphs"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="generate a synthetic cohort with planted shifts")
    add_common(synth)
    synth.add_argument("--out", default=None)
    synth.add_argument("--run-id", dest="run_id", default=None)
    synth.add_argument("--patients", type=int, default=None)
    synth.add_argument("--days", type=int, default=None)
    synth.add_argument("--envs", type=int, default=None, help="number of environments, betas spread +2..-2")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--noise", type=float, default=None)
    synth.add_argument("--variant-noise", dest="variant_noise", type=float, default=None)
    synth.add_argument("--drift", type=float, default=None)
    synth.add_argument("--k-peers", dest="k_peers", type=int, default=None)
    synth.add_argument("--schedule", default=None)
    synth.add_argument("--tied-categorical", dest="tied_categorical", default=None)

    train = subparsers.add_parser("train", help="train the model and its ablations")
    add_common(train)
    train.add_argument("--out", default=None)
    train.add_argument("--run-id", dest="run_id", default=None)
    train.add_argument("--cohort", default=None)
    train.add_argument("--schema", default=None)
    train.add_argument("--split", default=None, help="by-time or by-patient")
    train.add_argument("--fractions", type=float_list, default=None)
    train.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    train.add_argument("--k", type=int, default=None)
    train.add_argument("--parallel-knn", dest="parallel_knn", type=int, default=None)
    train.add_argument("--seeds", type=int_list, default=None)
    train.add_argument("--methods", type=str_list, default=None, help="full,erm,entangled")
    train.add_argument("--lambda", dest="lam", type=float, default=None)
    train.add_argument("--lambda-sweep", dest="lambda_sweep", type=float_list, default=None)
    train.add_argument("--group-by", dest="group_by", default=None)
    train.add_argument("--dispatch", default=None, help="local or celery")
    train.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    train.add_argument("--cat-embed-dim", dest="cat_embed_dim", type=int, default=None)
    train.add_argument("--layers", type=int, default=None)
    train.add_argument("--heads", type=int, default=None)
    train.add_argument("--window", default=None, help="number of snapshots or 'all'")
    train.add_argument("--te-mode", dest="te_mode", default=None)
    train.add_argument("--activation", default=None)
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--weight-decay", dest="weight_decay", type=float, default=None)
    train.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    train.add_argument("--patience", type=int, default=None)
    train.add_argument("--samples", type=int, default=None)
    train.add_argument("--intervention", default=None, help="global or per-node")

    evaluate = subparsers.add_parser("eval", help="evaluate a trained run against the baselines")
    add_common(evaluate)
    evaluate.add_argument("--run-dir", dest="run_dir", required=True)
    evaluate.add_argument("--group-by", dest="group_by", default=None)
    evaluate.add_argument("--showcase", type=str_list, default=None)
    evaluate.add_argument("--ma-window", dest="ma_window", type=int, default=None)
    evaluate.add_argument("--ar-order", dest="ar_order", type=int, default=None)

    importance = subparsers.add_parser("importance", help="gradient feature importance of a trained model")
    add_common(importance)
    importance.add_argument("--run-dir", dest="run_dir", required=True)
    importance.add_argument("--method", default=METHOD_FULL)
    importance.add_argument("--seed", type=int, default=None)
    importance.add_argument("--patient", type=str_list, default=None)
    importance.add_argument("--part", default="test")
    return parser


def overlay(values: Dict, args: argparse.Namespace, flags: Dict) -> Dict:
    """Apply explicit flags on top of file values.

    :param values: values read from the json file
    :param args: parsed flags
    :param flags: flag dest -> (section, field)
    :return: merged values
    """
    merged = {key: dict(value) if isinstance(value, dict) else value for key, value in values.items()}
    for dest, (section, name) in flags.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if section is None:
            merged[name] = value
        else:
            merged.setdefault(section, {})[name] = value
    return merged


def file_values(args: argparse.Namespace) -> Dict:
    """Values of the ``--config`` file, empty without one."""
    return dict(read_json(Path(args.config))) if args.config else {}


def cmd_synth(args: argparse.Namespace) -> int:
    """Generate a cohort, its annotation and schema under ``<out>/<run-id>/``."""
    values = overlay(file_values(args), args, SYNTH_FLAGS)
    if args.envs is not None:
        values["environments"] = default_environments(args.envs)
    out = args.out or values.pop("out", None) or settings.OUTPUT_ROOT
    run_id = args.run_id or values.pop("run_id", None)
    config = GeneratorConfig.from_dict(values)

    table, annotation = generate_cohort(config)
    run_dir = Path(out) / (run_id or get_run_id(config.to_dict(), "synth"))
    save_cohort(table, run_dir / COHORT_NAME)
    save_annotation(annotation, run_dir / ANNOTATION_NAME)
    save_schema(anic_schema(), run_dir / SCHEMA_NAME)
    write_json(run_dir / RESOLVED_CONFIG_NAME, {"generator": config.to_dict(), "version": settings.VERSION})
    try:
        write_json(run_dir / PLANTING_NAME, verify_planting(table, annotation).to_dict())
    except DataValidationError as error:
        logger.warning("planting check skipped: %s", error)
    print(f"wrote {len(table)} rows for {len(table.patients)} patients to {run_dir / COHORT_NAME}")
    return 0


def resolve_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults < json file < flags."""
    values = overlay(file_values(args), args, TRAIN_FLAGS)
    if args.out is not None:
        values["out"] = args.out
    if args.run_id is not None:
        values["run_id"] = args.run_id
    if values.get("cohort"):
        values["cohort"] = str(Path(values["cohort"]).resolve())
    if values.get("schema"):
        values["schema"] = str(Path(values["schema"]).resolve())
    return ExperimentConfig.from_dict(values)


def cmd_train(args: argparse.Namespace) -> int:
    """Train every configured method and seed."""
    config = resolve_experiment(args)
    summaries = run_training(config)
    for summary in summaries:
        print(
            f"{summary['method']} seed {summary['seed']}: best epoch {summary['best_epoch']} "
            f"val MAE {summary['best_val_mae']:.4f} ({summary['stop_reason']})"
        )
    print(f"run directory: {config.run_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    """Evaluate a run directory."""
    values = file_values(args)
    overrides = {key: values[key] for key in EVAL_OVERRIDES if key in values}
    for key in EVAL_OVERRIDES:
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if "showcase" in overrides:
        overrides["showcase"] = tuple(overrides["showcase"])
    reports = evaluate_run(Path(args.run_dir), overrides)
    for method, report in reports.items():
        print(f"{method}: RMSE {report.overall['rmse']:.4f} MAE {report.overall['mae']:.4f}")
    return 0


def cmd_importance(args: argparse.Namespace) -> int:
    """Write the importance table of a trained model."""
    table = compute_importance(
        Path(args.run_dir), args.method, args.seed, args.patient or (), args.part
    )
    ranking = table.ranking()
    print(f"importance over {len(table.days)} days, top features: {', '.join(ranking[:3])}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "importance": cmd_importance,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run a subcommand and map application errors to exit codes.

    :param argv: arguments, ``sys.argv[1:]`` when omitted
    :return: exit code
    """
    args = build_parser().parse_args(argv)
    settings.configure_logging(args.log_level or settings.LOG_LEVEL)
    settings.configure_sentry()
    settings.configure_torch()
    try:
        return COMMANDS[args.command](args)
    except AlbuminError as error:
        logger.error("%s: %s", type(error).__name__, error)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
