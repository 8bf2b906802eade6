"""Tests for the invariant suites."""

import pytest

from src.app.core.validation import SUITES, _Checker, run_suite, validate_all


class TestChecker:
    """Test check bookkeeping."""

    def test_counts_and_failures(self):
        ck = _Checker("demo")
        ck.check(True, "fine")
        ck.check(False, "broken")
        ck.close(1.0, 1.0 + 1e-12, 1e-10, "close enough")
        ck.close(2.0, 1.0, 1e-3, "far", relative=True)
        assert ck.result.checks == 4
        assert ck.result.failures[0] == "broken"
        assert ck.result.failures[1].startswith("far:")
        assert not ck.result.passed


class TestSuites:
    """Test suite dispatch."""

    def test_registered_names(self):
        assert list(SUITES) == ["elliptic", "linalg", "oracle", "approx", "repro"]

    @pytest.mark.parametrize("name", ["elliptic", "linalg"])
    def test_fast_suites_pass(self, name):
        result = run_suite(name)
        assert result.checks > 0
        assert result.passed, result.failures or result.error

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("bogus")

    def test_summary(self):
        summary = validate_all(["elliptic"])
        assert [s.name for s in summary.suites] == ["elliptic"]
        assert summary.failing == 0

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["oracle", "approx", "repro"])
    def test_slow_suites_pass(self, name):
        result = run_suite(name)
        assert result.passed, result.failures or result.error
