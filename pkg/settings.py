"""Environment settings and structlog setup."""
import logging
import os
import sys

import structlog
from dotenv import load_dotenv

load_dotenv()

DEFAULT_PRECISION = 50
DEFAULT_LOG_LEVEL = "WARNING"


class StderrLoggerFactory:
    """PrintLogger on whatever sys.stderr is when the logger is bound."""

    def __call__(self, *args) -> structlog.PrintLogger:
        return structlog.PrintLogger(sys.stderr)


def configure_logging(level: str | None = None) -> None:
    """Route structured logs to stderr (stdout carries report data)."""
    name = (level or os.getenv("MTLAB_LOG_LEVEL", DEFAULT_LOG_LEVEL)).upper()
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.getLevelNamesMapping().get(name, logging.WARNING)
        ),
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(),
        ],
        logger_factory=StderrLoggerFactory(),
        cache_logger_on_first_use=False,
    )


def precision_from_env() -> int:
    """Decimal digits for extended-precision constants (MTLAB_PRECISION)."""
    raw = os.getenv("MTLAB_PRECISION", str(DEFAULT_PRECISION))
    try:
        digits = int(raw)
    except ValueError:
        return DEFAULT_PRECISION
    return max(digits, 20)


def workers_from_env() -> int:
    """Worker threads for sweeps (MTLAB_WORKERS)."""
    try:
        return max(int(os.getenv("MTLAB_WORKERS", "1")), 1)
    except ValueError:
        return 1


configure_logging()
