"""
This module configures the Celery application that runs seed trainings asynchronously.

It utilizes the Celery library; the broker comes from the environment through settings.
"""

from celery import Celery

import settings  # noqa: F401  loads .env before the config module reads it

app = Celery("tasks")

default_config = "celery_config"

app.config_from_object(default_config)

app.conf.update({"imports": ["tasks"]})

app.conf.task_track_started = True
app.conf.task_send_sent_event = True
app.conf.worker_send_task_events = True
