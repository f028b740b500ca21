"""
GField - Common imports and utilities

    the global logger, timing, job ids, the serialization guard and the environment knobs
        GFIELD_LOG_LEVEL    DEBUG, INFO (default), WARNING, ...
        GFIELD_THREADS      upper bound on worker threads / processes
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import os
import sys
import time
import json
import logging
import platform
import itertools
import threading

from pathlib import Path
from functools import wraps


APP_NAME = "GField"

ENV_THREADS = 'GFIELD_THREADS'
ENV_LOG_LEVEL = 'GFIELD_LOG_LEVEL'

LOG_FORMAT = "%(asctime)s [%(processName)-14s] [%(threadName)-14s] [%(levelname)-5.5s] {%(relativepath)s->%(funcName)s:%(lineno)d}  %(message)s"


# Logging


class PackagePathFilter(logging.Filter):
    """Adds relativepath (record path relative to the closest sys.path entry) to log records"""

    def filter(self, record):
        record.relativepath = record.pathname
        roots = sorted((os.path.join(os.path.abspath(p), '') for p in sys.path), key=len, reverse=True)
        for root in roots:
            if record.pathname.startswith(root):
                record.relativepath = os.path.relpath(record.pathname, root)
                break
        return True


LEVEL_COLORS = {
    logging.DEBUG: '\x1b[34m',
    logging.INFO: '\x1b[36m',
    logging.WARNING: '\x1b[93m',
    logging.ERROR: '\x1b[31m',
    logging.CRITICAL: '\x1b[91;1m',
}
COLOR_RESET = '\x1b[0m'


class ColoredFormatter(logging.Formatter):
    """Wraps each record in the terminal color of its level"""

    def __init__(self, fmt: str):
        super().__init__(fmt)
        self.by_level = {level: logging.Formatter(color + fmt + COLOR_RESET) for level, color in LEVEL_COLORS.items()}

    def format(self, record):
        formatter = self.by_level.get(record.levelno)
        return formatter.format(record) if formatter is not None else super().format(record)


def get_log_level() -> int:
    """Level from GFIELD_LOG_LEVEL, INFO if unset or unknown"""
    level = logging.getLevelName(os.getenv(ENV_LOG_LEVEL, 'INFO').strip().upper())
    return level if isinstance(level, int) else logging.INFO


def setup_logging() -> logging.Logger:
    """Root logger printing to stderr; safe to call again (worker processes re-import this module)"""
    logger = logging.getLogger()
    logger.setLevel(get_log_level())
    if any(getattr(h, '_gfield_handler', False) for h in logger.handlers):
        return logger
    handler = logging.StreamHandler()
    handler.setFormatter(ColoredFormatter(LOG_FORMAT))
    handler.setLevel(logging.DEBUG)
    handler.addFilter(PackagePathFilter())
    handler._gfield_handler = True  # pylint: disable=protected-access
    logger.addHandler(handler)
    return logger


def set_log_level(level: int):
    log.setLevel(level)


log = setup_logging()
"""Global pointer to logging interface"""


# Everything else


class IdProvider:
    """Unique increasing ids, safe to share between threads"""

    def __init__(self, start: int = 1) -> None:
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def next_id(self) -> int:
        with self._lock:
            return next(self._counter)


# NOTE: on macOS, time_ns() always returns 000 as the last 3 digits, because it only ticks in microseconds


def time_nano() -> int:
    """Current time as integer nanoseconds (monotonic where the platform allows)"""
    if platform.system() == 'Windows':
        return time.time_ns()
    return time.monotonic_ns()


def time_nano_pretty(t: int) -> str:
    """Nanoseconds as s, ms or ns, whichever reads best, rounded to 4 places"""
    for scale, word in ((1e9, 's'), (1e6, 'ms')):
        if t > scale / 2:
            return f'{round(t / scale, 4)} {word}'
    return f'{t} ns'


class SerializabilityException(Exception):
    """Output that json.dumps() refuses"""


def ensure_serializable(func):
    """Decorator: the output of func must survive json.dumps()"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        output = func(*args, **kwargs)
        try:
            json.dumps(output)
        except (TypeError, ValueError) as ex:
            raise SerializabilityException(f'Output of {func.__qualname__} is not serializable: {ex}') from ex
        return output
    return wrapper


def get_worker_cap(requested: int) -> int:
    """Workers to actually use: at least 1, at most GFIELD_THREADS when that is a positive integer"""
    requested = max(1, int(requested))
    raw = os.getenv(ENV_THREADS, '').strip()
    if not raw:
        return requested
    try:
        cap = int(raw)
    except ValueError:
        log.warning(f'Ignoring {ENV_THREADS}={raw!r}, not an integer')
        return requested
    if cap < 1:
        log.warning(f'Ignoring {ENV_THREADS}={raw!r}, must be at least 1')
        return requested
    return min(requested, cap)


def get_version() -> str:
    """First line of VERSION next to the package, or UNKNOWN"""
    version_file = Path(__file__).resolve().parent.parent.joinpath('VERSION')
    try:
        return version_file.read_text(encoding='utf-8').splitlines()[0].strip()
    except (OSError, IndexError):
        return 'UNKNOWN'
