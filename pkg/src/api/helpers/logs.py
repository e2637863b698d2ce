import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# 209715200 is 1024 * 1024 * 200 or 200 MB
MAX_LOG_BYTES = 209715200
LOG_BACKUPS = 10


def rotating_handler(log_file):
    path = Path(log_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = RotatingFileHandler(path, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    return handler


def setup_logging(level="INFO", log_file=None):
    """Configure root logging to stdout and, optionally, a rotating file."""
    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file:
        handlers.append(rotating_handler(log_file))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
