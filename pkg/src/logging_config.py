"""
Logging configuration for the in-orbit analytics toolkit.

This module provides centralized logging configuration with handlers,
formatters and log levels for every stage of the pipeline: profile
fitting, deployment planning, routing, simulation and ground-link analysis.
"""

import copy
import functools
import logging
import logging.config
import os
import time
from pathlib import Path
from typing import Any, Callable, Dict, Optional, TypeVar, cast

ROOT_LOGGER = 'orbital_analytics'
LOG_LEVEL_ENV = 'LOG_LEVEL'

F = TypeVar('F', bound=Callable[..., Any])

# Console only; file handlers are added when a log directory is given
DEFAULT_LOGGING_CONFIG: Dict[str, Any] = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'detailed': {
            'format': '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
            'datefmt': '%Y-%m-%d %H:%M:%S'
        },
        'simple': {
            'format': '%(levelname)s - %(name)s - %(message)s'
        },
        'json': {
            '()': 'pythonjsonlogger.jsonlogger.JsonFormatter',
            'format': '%(asctime)s %(name)s %(levelname)s %(funcName)s %(lineno)d %(message)s'
        }
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'level': 'DEBUG',
            'formatter': 'simple',
            'stream': 'ext://sys.stderr'
        }
    },
    'loggers': {
        ROOT_LOGGER: {
            'level': 'WARNING',
            'handlers': ['console'],
            'propagate': False
        }
    }
}


def _file_handlers(log_path: Path) -> Dict[str, Any]:
    return {
        'file': {
            'class': 'logging.handlers.RotatingFileHandler',
            'level': 'DEBUG',
            'formatter': 'json',
            'filename': str(log_path / 'orbital_analytics.log'),
            'maxBytes': 10485760,  # 10MB
            'backupCount': 5,
            'encoding': 'utf8'
        },
        'error_file': {
            'class': 'logging.handlers.RotatingFileHandler',
            'level': 'ERROR',
            'formatter': 'detailed',
            'filename': str(log_path / 'errors.log'),
            'maxBytes': 10485760,
            'backupCount': 5,
            'encoding': 'utf8'
        }
    }


def setup_logging(
    log_level: Optional[str] = None,
    log_dir: Optional[str] = None
) -> logging.Logger:
    """
    Set up logging for the toolkit.

    Args:
        log_level: Level name; falls back to the ``LOG_LEVEL`` environment
            variable, then to WARNING
        log_dir: Directory for rotating log files; console only when None

    Returns:
        The toolkit's root logger
    """
    level = (log_level or os.environ.get(LOG_LEVEL_ENV) or 'WARNING').upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ValueError(f"Unknown log level: {level}")

    config = copy.deepcopy(DEFAULT_LOGGING_CONFIG)
    config['loggers'][ROOT_LOGGER]['level'] = level

    if log_dir is not None:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        config['handlers'].update(_file_handlers(log_path))
        config['loggers'][ROOT_LOGGER]['handlers'] = ['console', 'file', 'error_file']

    logging.config.dictConfig(config)

    logger = logging.getLogger(ROOT_LOGGER)
    logger.debug("Logging configured at %s (log_dir=%s)", level, log_dir)
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger for a module inside the toolkit namespace.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Logger instance
    """
    if name is None:
        return logging.getLogger(ROOT_LOGGER)

    if name.startswith('src.'):
        name = name[len('src.'):]
    if not name.startswith(ROOT_LOGGER):
        name = f'{ROOT_LOGGER}.main' if name == '__main__' else f'{ROOT_LOGGER}.{name}'

    return logging.getLogger(name)


def log_function_call(func: F) -> F:
    """
    Decorator logging entry and execution time of a function at DEBUG.

    Args:
        func: Function to decorate

    Returns:
        Decorated function
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        logger = get_logger(func.__module__)
        logger.debug("Entering %s", func.__name__)

        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(
                "Error in %s after %.3fs: %s",
                func.__name__, time.perf_counter() - start_time, e
            )
            raise

        logger.debug("Completed %s in %.3fs", func.__name__, time.perf_counter() - start_time)
        return result

    return cast(F, wrapper)


class LogContext:
    """Context manager for logging operation blocks."""

    def __init__(self, operation: str, logger: Optional[logging.Logger] = None,
                 level: str = 'INFO'):
        self.operation = operation
        self.logger = logger or get_logger()
        self.level = getattr(logging, level.upper())
        self.start_time = 0.0

    def __enter__(self) -> 'LogContext':
        self.start_time = time.perf_counter()
        self.logger.log(self.level, "Starting %s", self.operation)
        return self

    @property
    def elapsed(self) -> float:
        """Seconds since the block was entered."""
        return time.perf_counter() - self.start_time

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> bool:
        if exc_type is None:
            self.logger.log(self.level, "Completed %s in %.2fs", self.operation, self.elapsed)
        else:
            self.logger.error("Failed %s after %.2fs: %s", self.operation, self.elapsed, exc_val)

        return False
