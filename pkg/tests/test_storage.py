"""Tests for reference table loading and report rendering."""

import io
import json

import pandas as pd
import pytest

from src.app.adapters.storage import LocalStorageAdapter
from src.app.shared.errors import DomainError
from src.app.shared.models import LambdaMethod, ReproReport, ReproRow, TableId


class TestReferenceTables:
    """Test the shipped reference YAML files."""

    def setup_method(self):
        self.storage = LocalStorageAdapter()

    @pytest.mark.parametrize(
        "table_id,rows,columns",
        [
            (TableId.TABLE1, 4, ["kappa_c", "delta_kappa_c", "max_delta"]),
            (TableId.TABLE2, 12, ["sqrt_q_tilde", "sqrt_q"]),
            (TableId.TABLE3, 15, ["q_tilde", "kappa_proxy", "mu_hat", "mu"]),
        ],
    )
    def test_shapes(self, table_id, rows, columns):
        table = self.storage.load_reference_table(table_id)
        assert len(table.rows) == rows
        assert table.columns == columns
        for row in table.rows:
            assert all(column in row for column in columns)

    def test_tolerances(self):
        table = self.storage.load_reference_table(TableId.TABLE2)
        assert table.tolerance("sqrt_q") == {"kind": "absolute", "value": 5.0e-6}
        assert table.tolerance("unknown")["kind"] == "relative"

    def test_row_tolerance(self):
        table = self.storage.load_reference_table(TableId.TABLE2)
        first = table.rows[0]
        assert table.tolerance("sqrt_q_tilde", first)["value"] == 5.0e-8
        assert table.tolerance("sqrt_q_tilde", table.rows[1])["value"] == 1.0e-8
        assert table.tolerance("sqrt_q", first)["value"] == 5.0e-6

    def test_reported_columns(self):
        table = self.storage.load_reference_table(TableId.TABLE1)
        assert table.tolerance("delta_kappa_c")["kind"] == "report"
        assert table.tolerance("kappa_c", table.rows[0])["kind"] == "absolute"
        assert table.tolerance("kappa_c", table.rows[-1]) == {"kind": "report", "value": 2.0e-3}

    def test_row_tolerance_never_tightens(self):
        table = self.storage.load_reference_table(TableId.TABLE2)
        row = {"tolerances": {"sqrt_q": {"kind": "absolute", "value": 1e-9}}}
        assert table.tolerance("sqrt_q", row)["value"] == 5.0e-6

    def test_extras(self):
        table = self.storage.load_reference_table(TableId.TABLE3)
        assert table.extras["oracle_max_c"] == 1000

    def test_verbatim_values(self):
        table = self.storage.load_reference_table(TableId.TABLE3)
        first = table.rows[0]
        assert first["c"] == 250 and first["n"] == 179
        assert first["mu"] == pytest.approx(0.18854e-07)

    def test_missing_table(self, tmp_path):
        with pytest.raises(DomainError):
            LocalStorageAdapter(reference_dir=tmp_path).load_reference_table(TableId.TABLE1)


class TestRendering:
    """Test CSV and JSON output."""

    def setup_method(self):
        self.storage = LocalStorageAdapter()
        self.report = ReproReport(
            table_id=TableId.TABLE2,
            rows=[
                ReproRow(
                    label="c=10,n=6",
                    inputs={"c": 10.0, "n": 6.0},
                    computed={"sqrt_q": 0.1234567890123456789},
                    reference={"sqrt_q": 0.12345},
                    deviations={"sqrt_q": 6.789e-6},
                    passed=False,
                    reason="outside tolerance: sqrt_q",
                ),
                ReproRow(label="c=25,n=16", inputs={"c": 25.0, "n": 16.0}, method=LambdaMethod.RATIO),
            ],
            columns=["label", "c", "n", "sqrt_q", "ref_sqrt_q", "dev_sqrt_q", "passed", "reason"],
        )

    def test_column_order(self):
        frame = self.storage.report_to_frame(self.report)
        assert list(frame.columns) == self.report.columns

    def test_csv_precision(self):
        text = self.storage.render_csv(self.report, digits=17)
        frame = pd.read_csv(io.StringIO(text))
        assert frame.loc[0, "sqrt_q"] == pytest.approx(0.1234567890123456789, rel=1e-15)
        assert "\r" not in text

    def test_csv_digits(self):
        text = self.storage.render_csv(self.report, digits=3)
        assert "0.123," in text

    def test_csv_stable(self):
        assert self.storage.render_csv(self.report) == self.storage.render_csv(self.report)

    def test_json(self):
        payload = json.loads(self.storage.render_json(self.report))
        assert payload["table_id"] == "table2"
        assert payload["passed"] is False
        assert payload["rows"][1]["method"] == "ratio"

    def test_save_text(self, tmp_path):
        target = tmp_path / "nested" / "out.csv"
        self.storage.save_text("a,b\n1,2\n", target)
        assert target.read_text() == "a,b\n1,2\n"
