"""This file contains the tasks that will be executed by celery."""

from typing import Dict

import settings
from celery_app import app
from pipeline import ExperimentConfig, prepare, train_one


@app.task
def train_seed(config: Dict, method: str, seed: int, run_dir: str) -> Dict:
    """Train one (method, seed) of an experiment and write its artifacts.

    :param config: ExperimentConfig as a dict
    :param method: full, erm or entangled
    :param seed:
    :param run_dir: run directory shared with the dispatcher
    :return: summary of the run
    """
    settings.configure_torch()
    experiment = ExperimentConfig.from_dict(config)
    return train_one(experiment, prepare(experiment), method, seed, run_dir)
