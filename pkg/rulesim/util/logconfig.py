"""Replay the parent's root-logger setup inside sweep worker processes.

File handlers are redirected to ``logs_subprocesses/<job>.log`` next to the
parent's log file, one file per job.
"""
from copy import deepcopy
from typing import Dict, Optional
import logging
import logging.config
import os

WORKER_LOG_DIR = "logs_subprocesses"


def _formatter_entry(formatter: Optional[logging.Formatter]) -> Optional[Dict]:
    if formatter is None:
        return None
    # pylint: disable=protected-access
    return {"format": formatter._fmt, "datefmt": formatter.datefmt}


def _handler_entry(handler: logging.Handler) -> Optional[Dict]:
    # FileHandler is a StreamHandler, test it first
    if isinstance(handler, logging.FileHandler):
        return {
            "class": "logging.FileHandler",
            "level": handler.level,
            "filename": handler.baseFilename,
            "mode": handler.mode,
        }
    if isinstance(handler, logging.StreamHandler):
        return {"class": "logging.StreamHandler", "level": handler.level}
    return None


def get_logging_config_dict() -> Dict:
    """Snapshot of the root logger as a ``dictConfig`` dict.

    Unnamed handlers are called ``handler<i>`` after their position on the
    root logger. Handler types other than file and stream are skipped.
    """
    handlers, formatters = {}, {}
    for index, handler in enumerate(logging.root.handlers):
        entry = _handler_entry(handler)
        if entry is None:
            continue
        name = handler.name or f"handler{index}"
        formatter = _formatter_entry(handler.formatter)
        if formatter is not None:
            formatters[name] = formatter
            entry["formatter"] = name
        handlers[name] = entry
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": formatters,
        "handlers": handlers,
        "root": {"level": logging.root.level, "handlers": list(handlers)},
    }


def configure_worker_logging(log_config_dict: Dict, job_name: str) -> Dict:
    """Apply a snapshot in a worker with its file output moved to the job's own log."""
    worker_config = deepcopy(log_config_dict)
    for handler in worker_config["handlers"].values():
        if "filename" not in handler:
            continue
        log_dir = os.path.join(os.path.dirname(handler["filename"]), WORKER_LOG_DIR)
        os.makedirs(log_dir, exist_ok=True)
        handler["filename"] = os.path.join(log_dir, f"{job_name}.log")
    logging.config.dictConfig(worker_config)
    return worker_config
