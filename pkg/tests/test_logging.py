"""Tests for the run-scoped loggers."""

import logging

from src.app.core.validation import run_suite
from src.app.shared.logging import LOGGER_NAME, RunLogger, run_logger


class TestRunLogger:
    """Test that suite and table runs label their log lines."""

    def test_prefix_and_extra(self, caplog):
        caplog.set_level(logging.INFO, logger=LOGGER_NAME)
        log = run_logger("table", "table2")
        assert isinstance(log, RunLogger)
        log.info("pass in 0.1s")
        record = caplog.records[-1]
        assert record.getMessage() == "[table table2] pass in 0.1s"
        assert record.name == f"{LOGGER_NAME}.table"
        assert record.run_name == "table2"

    def test_suite_run_is_labelled(self, caplog):
        caplog.set_level(logging.INFO, logger=LOGGER_NAME)
        result = run_suite("elliptic")
        messages = [r.getMessage() for r in caplog.records if r.name == f"{LOGGER_NAME}.suite"]
        assert messages[0] == "[suite elliptic] started"
        assert messages[-1] == f"[suite elliptic] {result.checks} checks, {len(result.failures)} failures"
