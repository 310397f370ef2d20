import atexit
import logging
import os
import weakref
from typing import Dict, Optional

# Loggers already configured, keyed by log file ("" when file logging is off)
_loggers: Dict[str, logging.Logger] = {}

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def setup_logging(log_file_name: Optional[str], level: str = "INFO") -> logging.Logger:
    """
    Set up the package logger with a console handler and an optional file handler

    Records from every ``src.*`` module propagate to this logger.

    Args:
        log_file_name: Log file path; empty or None disables file logging
        level: Level name such as INFO or DEBUG

    Returns:
        logging.Logger: Configured logger
    """
    key = log_file_name or ""
    if key in _loggers:
        return _loggers[key]

    logger = logging.getLogger("src")
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))

    # Clear existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        handler.close()
        logger.removeHandler(handler)

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(stream_handler)
    handlers = [stream_handler]

    if log_file_name:
        log_dir = os.path.dirname(log_file_name)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        file_handler = logging.FileHandler(log_file_name)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)
        handlers.append(file_handler)

    tracked = weakref.WeakSet(handlers)

    def cleanup():
        for handler in tracked:
            try:
                handler.close()
                logger.removeHandler(handler)
            except Exception:
                pass

    atexit.register(cleanup)
    _loggers[key] = logger
    return logger
