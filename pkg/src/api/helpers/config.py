import logging
import os

import psutil
from dotenv import load_dotenv

load_dotenv()  # will search for .env file in local folder and load variables

logger = logging.getLogger(__name__)

GIB = 1024 ** 3


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


class Settings:
    """Runtime configuration read from environment variables."""

    def __init__(self):
        self.oracle_cap = _env_int("NSMATVEC_ORACLE_CAP", 20000)
        self.coupling_memory_cap = _env_int("NSMATVEC_COUPLING_MEMORY_CAP", 2 * GIB)
        self.spread_cache_entries = _env_int("NSMATVEC_SPREAD_CACHE_ENTRIES", 2 ** 25)
        self.max_grid_points = _env_int("NSMATVEC_MAX_GRID_POINTS", 2 ** 22)
        self.threads = _env_int("NSMATVEC_THREADS", 0) or psutil.cpu_count(logical=False) or 1

        self.log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        self.log_file = os.getenv("LOG_FILE") or None

        self.broker_url = os.getenv("CELERY_BROKER_URL", "redis://localhost:6379")
        self.result_backend = os.getenv("CELERY_RESULT_BACKEND", "redis://localhost:6379")

        self._validate()

    def _validate(self):
        errors = []
        if self.oracle_cap < 1:
            errors.append("NSMATVEC_ORACLE_CAP must be positive")
        if self.coupling_memory_cap < 0:
            errors.append("NSMATVEC_COUPLING_MEMORY_CAP must be non-negative")
        if self.spread_cache_entries < 0:
            errors.append("NSMATVEC_SPREAD_CACHE_ENTRIES must be non-negative")
        if self.max_grid_points < 1:
            errors.append("NSMATVEC_MAX_GRID_POINTS must be positive")
        if self.threads < 1:
            errors.append("NSMATVEC_THREADS must be positive")
        if not isinstance(logging.getLevelName(self.log_level), int):
            errors.append(f"LOG_LEVEL {self.log_level!r} is not a logging level")

        if errors:
            for error in errors:
                logger.error(f"Configuration error: {error}")
            raise ValueError(f"Invalid configuration: {', '.join(errors)}")


settings = Settings()
