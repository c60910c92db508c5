"""
Logging and timing utilities for the DWPI toolkit
"""

import logging
import sys
import time
from types import TracebackType
from typing import Any, Optional

import structlog

from src.config import Settings

logger = structlog.get_logger(__name__)


def stderr_logger_factory(*args: Any) -> structlog.PrintLogger:
    """Print logger bound to whatever sys.stderr is when the logger is created"""
    return structlog.PrintLogger(file=sys.stderr)


def configure_logging(settings: Settings) -> None:
    """
    Configure structured logging

    Logs go to stderr so that stdout stays machine-readable.

    Args:
        settings: Process settings (log level and renderer)
    """
    renderer: Any
    if settings.log_format == "json":
        renderer = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.TimeStamper(fmt="ISO"),
            structlog.processors.add_log_level,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            getattr(logging, settings.log_level.upper())
        ),
        context_class=dict,
        logger_factory=stderr_logger_factory,
        cache_logger_on_first_use=False,
    )


class Stopwatch:
    """
    Monotonic wall-clock timer usable as a context manager

    Example:
        with Stopwatch("train_agent") as sw:
            ...
        sw.seconds
    """

    def __init__(self, label: Optional[str] = None, log: bool = True):
        self.label = label
        self.log = log
        self.seconds = 0.0
        self._start: Optional[float] = None

    def __enter__(self) -> "Stopwatch":
        self._start = time.perf_counter()
        return self

    def __exit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType],
    ) -> None:
        assert self._start is not None
        self.seconds = time.perf_counter() - self._start
        if self.log and self.label and exc_type is None:
            logger.info("Stage finished", stage=self.label, seconds=round(self.seconds, 4))
