"""Environment configuration loaded from the process environment and an optional .env file."""

import logging
import os

import sentry_sdk
import torch
from dotenv import load_dotenv

load_dotenv()

VERSION = "1.0.0"

OUTPUT_ROOT = os.getenv("ALBUMIN_OUTPUT_ROOT", "./runs")
REDIS_URL = os.getenv("REDIS_URL", "redis://localhost:6379/0")
SENTRY_DSN = os.getenv("SENTRY_DSN")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
DETERMINISTIC = os.getenv("ALBUMIN_DETERMINISTIC", "true").lower() in ("1", "true", "yes")


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Configure the root logger.

    :param level: logging level name
    :return: None
    """
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def configure_sentry() -> None:
    """Initialize sentry when a DSN is configured."""
    if SENTRY_DSN:
        sentry_sdk.init(
            dsn=SENTRY_DSN,
            traces_sample_rate=1.0,
            profiles_sample_rate=1.0,
        )


def configure_torch(deterministic: bool = DETERMINISTIC) -> None:
    """Pin torch to single-threaded deterministic execution.

    :param deterministic:
    :return: None
    """
    if deterministic:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)
