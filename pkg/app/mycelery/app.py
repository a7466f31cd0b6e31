from celery import Celery
"""
Celery instance for long simulation runs.

- Broker and result backend come from app.core.config (MODE selects them).
- Tasks and results are serialized as JSON; scenario payloads are plain dicts.
- CELERY_TASK_ALWAYS_EAGER runs tasks in-process (tests, single-machine use);
  eager results are still stored so task polling works.
- Tasks are discovered from app.mycelery.worker.
"""
from app.core.config import CELERY_BROKER_URL_CASE, CELERY_RESULT_BACKEND_CASE, CELERY_TASK_ALWAYS_EAGER

celery_app = Celery(
    broker_url = CELERY_BROKER_URL_CASE,
    result_backend = CELERY_RESULT_BACKEND_CASE,
    task_serializer = 'json',
    result_serializer = 'json',
    accept_content = ['json'],
    task_always_eager = CELERY_TASK_ALWAYS_EAGER,
    task_eager_propagates = True,
    task_store_eager_result = True,
    task_track_started = True,
    include=["app.mycelery.worker"],
    broker_transport_options={
        'max_retries': 6,
        'visibility_timeout': 365*24*60*60,
    }
)
