"""
Logging for the library and the command line
"""

import logging
import sys
from typing import Optional, TextIO

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _below_error(record: logging.LogRecord) -> bool:
    return record.levelno < logging.ERROR


def get_logger(name: str = "default") -> logging.Logger:
    """Get a logger
    Errors go to stderr and less severe records to stdout. Asking twice for the same name
    returns the configured logger without adding handlers again.
    """
    result_logger = logging.getLogger(name)
    if result_logger.handlers:
        return result_logger
    result_logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(LOG_FORMAT)

    for stream, level in ((sys.stdout, logging.DEBUG), (sys.stderr, logging.ERROR)):
        handler = logging.StreamHandler(stream)
        handler.setFormatter(formatter)
        handler.setLevel(level)
        if stream is sys.stdout:
            handler.addFilter(_below_error)
        result_logger.addHandler(handler)

    return result_logger


def route_progress(stream: TextIO, target: Optional[logging.Logger] = None) -> TextIO:
    """Send records below ERROR to `stream` and return the stream they went to before"""
    previous = stream
    for handler in (target or logger).handlers:
        if isinstance(handler, logging.StreamHandler) and _below_error in handler.filters:
            previous = handler.stream
            # the old stream may be closed, so no setStream (it flushes)
            handler.stream = stream
    return previous


def set_log_level(level: str, target: Optional[logging.Logger] = None) -> None:
    """Only emit records at `level` or above; `level` is one of LOG_LEVELS"""
    if level.upper() not in LOG_LEVELS:
        raise ValueError(f"Unknown log level {level!r}, expected one of {LOG_LEVELS}")
    (target or logger).setLevel(level.upper())


logger = get_logger(name="circoal")
