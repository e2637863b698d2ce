import logging

from celery import Celery, signals
from celery.utils.log import get_task_logger

from helpers.config import settings
from helpers.logs import LOG_FORMAT, rotating_handler

TASK_MODULES = (
    "calculations.benchmarks",
    "calculations.validation",
    "calculations.orchestration",
)

app = Celery(__name__)
app.conf.broker_url = settings.broker_url
app.conf.result_backend = settings.result_backend
app.conf.worker_redirect_stdouts = False
app.conf.imports = TASK_MODULES

# one long benchmark at a time per worker process
app.conf.worker_prefetch_multiplier = 1
app.conf.task_acks_late = True
app.conf.task_reject_on_worker_lost = True
# result rows can be large for long ablations
app.conf.task_compression = 'gzip'
app.conf.result_compression = 'gzip'
app.conf.broker_connection_retry_on_startup = True
app.conf.broker_pool_limit = 10
app.conf.broker_connection_max_retries = 10
app.conf.task_serializer = 'json'
app.conf.result_serializer = 'json'
app.conf.accept_content = ['json']
app.conf.task_message_max_retries = 3
app.conf.result_expires = 24 * 3600
app.conf.task_routes = {
    # matvec plans and CG solves hold the coupling tensor and NUFFT grids
    "matvec_bench": {"queue": "heavy"},
    "solve_bench": {"queue": "heavy"},
    "validate": {"queue": "heavy"},
    # fan-out only
    "launch_ablation": {"queue": "light"},
}

logger = get_task_logger(__name__)


def create_celery_logger_handler(logger, propagate):
    handler = rotating_handler(settings.log_file or "logs/celery.log")
    logger.addHandler(handler)
    logger.setLevel(settings.log_level)
    logger.propagate = propagate


@signals.after_setup_task_logger.connect
def after_setup_celery_task_logger(logger, **kwargs):
    """ This function sets the 'celery.task' logger handler and formatter """
    create_celery_logger_handler(logger, True)


@signals.after_setup_logger.connect
def after_setup_celery_logger(logger, **kwargs):
    """ This function sets the 'celery' logger handler and formatter """
    for handler in logger.handlers:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    create_celery_logger_handler(logger, False)
