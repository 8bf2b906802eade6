"""Tests for table and figure reproduction, queries and sweeps."""

import math

import pytest

from src.app.core.reproduction import (
    ENVELOPE,
    default_figure_range,
    query,
    run_figure,
    run_table,
    sweep,
)
from src.app.shared.models import LambdaMethod, TableId


class TestTables:
    """Test recomputation of the reference tables."""

    def test_table2(self):
        report = run_table(TableId.TABLE2)
        assert len(report.rows) == 12
        assert report.passed, [row.reason for row in report.rows if not row.passed]

    def test_table2_columns(self):
        report = run_table(TableId.TABLE2, with_oracle=False)
        assert report.columns == [
            "label", "c", "n",
            "sqrt_q_tilde", "ref_sqrt_q_tilde", "dev_sqrt_q_tilde",
            "sqrt_q", "ref_sqrt_q", "dev_sqrt_q",
            "passed", "reason",
        ]
        assert all(row.computed["sqrt_q"] is None for row in report.rows)
        assert report.passed

    def test_table3_closed_form(self):
        report = run_table(TableId.TABLE3, with_oracle=False)
        assert len(report.rows) == 15
        assert report.passed, [row.reason for row in report.rows if not row.passed]

    def test_tolerance_override(self):
        report = run_table(TableId.TABLE2, with_oracle=False, tolerances={"sqrt_q_tilde": 1e-30})
        assert not report.passed
        # the first row carries its own looser printed-precision tolerance
        assert report.rows[0].passed
        assert "sqrt_q_tilde" in report.rows[1].reason
        assert report.tolerances["sqrt_q_tilde"] == 1e-30

    def test_corrected_rows(self):
        report = run_table(TableId.TABLE2, with_oracle=False)
        rows = {row.label: row for row in report.rows}
        assert "c=50,n=33" not in rows
        assert rows["c=50,n=32"].deviations["sqrt_q_tilde"] < 1e-8
        first = rows["c=10,n=6"]
        assert 1e-8 < first.deviations["sqrt_q_tilde"] < 5e-8
        assert first.passed

    def test_corrected_row_oracle(self):
        report = run_table(TableId.TABLE2)
        row = next(row for row in report.rows if row.label == "c=50,n=32")
        assert row.computed["sqrt_q"] == pytest.approx(0.9943009823, abs=1e-9)

    def test_rejects_figure_id(self):
        with pytest.raises(ValueError):
            run_table(TableId.FIGURE1)

    @pytest.mark.slow
    def test_table1(self):
        report = run_table(TableId.TABLE1)
        assert [row.inputs["n_c"] for row in report.rows] == [20.0, 40.0, 60.0, 80.0]
        assert report.passed, [row.reason for row in report.rows if not row.passed]
        last = report.rows[-1]
        assert last.deviations["kappa_c"] == pytest.approx(0.046, abs=2e-3)
        assert all(row.deviations["delta_kappa_c"] is not None for row in report.rows)

    @pytest.mark.slow
    def test_table3_oracle_rows(self):
        report = run_table(TableId.TABLE3)
        with_oracle = [row for row in report.rows if row.computed["mu"] is not None]
        assert len(with_oracle) == 6
        assert report.passed, [row.reason for row in report.rows if not row.passed]


class TestFigures:
    """Test the per-n figure data."""

    def test_default_range(self):
        ns = default_figure_range(10 * math.pi)
        assert ns[0] == 0
        assert ns[-1] == 60

    def test_figure1_columns(self):
        report = run_figure(TableId.FIGURE1, 10.0, range(0, 12))
        assert "ln_lambda_widom" in report.columns
        assert "ln_ratio" not in report.columns
        assert len(report.rows) == 12
        assert all(row.method is not None for row in report.rows)

    def test_undefined_rows_are_marked(self):
        report = run_figure(TableId.FIGURE2, 10.0, range(0, 8))
        # 2c/(pi(n+1/2)) > 1 for n <= 5 at c = 10
        for row in report.rows[:6]:
            assert row.computed["q_valid"] == 0.0
            assert row.computed["ln_ratio"] is None
            assert row.passed and "undefined" in row.reason
        assert report.rows[6].computed["q_valid"] == 1.0

    def test_ratio_inside_envelope(self):
        report = run_figure(TableId.FIGURE2, 10.0, range(10, 20))
        assert report.passed
        for row in report.rows:
            assert abs(row.computed["ln_ratio"]) <= ENVELOPE

    def test_log_values_decrease(self):
        report = run_figure(TableId.FIGURE1, 10.0, range(0, 20))
        logs = [row.computed["ln_lambda"] for row in report.rows]
        assert logs == sorted(logs, reverse=True)

    def test_rejects_table_id(self):
        with pytest.raises(ValueError):
            run_figure(TableId.TABLE1, 10.0)


class TestQuery:
    """Test single-point queries."""

    def test_fields(self):
        record = query(12, 10.0)
        assert record.chi is not None and record.sqrt_q is not None
        assert record.flags["q_tilde_valid"]
        assert record.flags["q_below_one"]
        assert record.lambda_method is not None
        assert record.log_mu == pytest.approx(0.5 * (math.log(2 * math.pi / 10.0) + record.log_lambda))
        assert record.mu_hat_rel_deviation < 1.0
        assert not record.errors

    def test_outside_validity(self):
        record = query(2, 10.0)
        assert not record.flags["q_tilde_valid"]
        assert record.bundle.log_lambda_hat is None
        assert record.mu_hat_rel_deviation is None
        assert "kappa_condition" not in record.flags

    def test_forced_tier_below_floor(self):
        record = query(30, 10.0, tier=LambdaMethod.NYSTROM)
        assert "lambda" in record.errors
        assert record.log_lambda is None
        assert record.chi is not None

    def test_forced_ratio_tier(self):
        record = query(8, 10.0, tier=LambdaMethod.RATIO)
        assert record.lambda_method == LambdaMethod.RATIO

    @pytest.mark.slow
    def test_deep_point(self):
        record = query(89, 10 * math.pi)
        assert math.exp(record.log_mu) == pytest.approx(8.64288e-57, rel=1e-3)
        assert record.mu_hat_rel_deviation < 3 * 7.71e-5

    @pytest.mark.slow
    def test_deep_point_neighbour(self):
        # the published value sits one index below the label it carries
        record = query(90, 10 * math.pi)
        assert math.exp(record.log_mu) == pytest.approx(7.544039206e-58, rel=1e-3)


class TestSweep:
    """Test per-n sweeps."""

    def test_rows(self):
        report = sweep(10.0, 8, 12)
        assert report.table_id == TableId.SWEEP
        assert [row.label for row in report.rows] == [f"n={n}" for n in range(8, 13)]
        assert all(row.computed["chi"] is not None for row in report.rows)
        assert "ln_lambda_widom" in report.columns

    def test_rejects_empty_range(self):
        with pytest.raises(ValueError):
            sweep(10.0, 5, 4)
