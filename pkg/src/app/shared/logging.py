"""Logging configuration for prolate spectrum computations.

Suites, tables and figures log through ``run_logger`` so every line names the
run it belongs to, e.g. ``[table table2] pass in 0.4s``.
"""

import logging
import sys
from typing import Any, MutableMapping, Optional, Tuple

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "prolate_spectrum"


class RunLogger(logging.LoggerAdapter):
    """Prefixes each message with the run (suite, table or figure) it comes from."""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping[str, Any]]:
        extra = dict(self.extra or {})
        kwargs.setdefault("extra", {}).update(extra)
        return f"[{extra['run_kind']} {extra['run_name']}] {msg}", kwargs


def run_logger(kind: str, name: str) -> RunLogger:
    """Child logger of the package logger for one suite, table or figure run."""
    return RunLogger(
        logging.getLogger(f"{LOGGER_NAME}.{kind}"),
        {"run_kind": kind, "run_name": name},
    )


def setup_logging(
    level: str = "INFO",
    format_string: Optional[str] = None,
    use_rich: bool = True
) -> logging.Logger:
    """Set up logging with optional Rich formatting."""

    # Remove existing handlers
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    log_level = getattr(logging, level.upper(), logging.INFO)
    root_logger.setLevel(log_level)

    if use_rich:
        console = Console(stderr=True)
        handler = RichHandler(
            console=console,
            show_time=True,
            show_path=False,
            rich_tracebacks=True
        )
    else:
        handler = logging.StreamHandler(sys.stderr)
        if format_string is None:
            format_string = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        handler.setFormatter(logging.Formatter(format_string))

    root_logger.addHandler(handler)

    # numpy RuntimeWarnings from the kernels go through the same handler
    logging.captureWarnings(True)

    return logging.getLogger(LOGGER_NAME)


logger = setup_logging()
