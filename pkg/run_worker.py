"""This file is used to run a worker for the celery app."""

import logging
import socket

import settings
from celery_app import app

if __name__ == "__main__":
    settings.configure_logging()
    logger = logging.getLogger(__name__)
    logger.info("starting worker")
    settings.configure_sentry()
    settings.configure_torch()
    worker_key = "training"
    worker = app.Worker(
        hostname=f"{worker_key}@{socket.gethostname()}",
        queues=[],
        optimization="default",
        detach=True,
        loglevel=settings.LOG_LEVEL,
        concurrency=2,
        max_tasks_per_child=10,
    )
    worker.start()
