"""Celery configuration file."""

from settings import REDIS_URL

accept_content = ["json"]
broker_url = REDIS_URL

task_serializer = "json"
task_acks_late = True

result_serializer = "json"
result_backend = REDIS_URL

worker_enable_remote_control = True
worker_send_task_events = True
worker_prefetch_multiplier = 1  # one training at a time per worker process

enable_utc = True
