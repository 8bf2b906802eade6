"""Storage adapters for reference tables and reproduction reports."""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import yaml

from ..core.config import settings
from ..shared.errors import DomainError
from ..shared.logging import logger
from ..shared.models import ReproReport, TableId


class ReferenceTable:
    """Published reference rows with their per-column tolerances."""

    def __init__(self, table_id: str, rows: List[Dict[str, Any]], tolerances: Dict[str, Dict[str, Any]],
                 columns: List[str], extras: Optional[Dict[str, Any]] = None):
        self.table_id = table_id
        self.rows = rows
        self.tolerances = tolerances
        self.columns = columns
        self.extras = extras or {}

    def tolerance(self, column: str, row: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Column tolerance, loosened by a row-level entry where the printed digits are coarser.

        Kind "report" keeps the deviation in the output without gating the row.
        """
        base = self.tolerances.get(column, {"kind": "relative", "value": 1e-3})
        override = ((row or {}).get("tolerances") or {}).get(column)
        if override is None:
            return base
        if override.get("kind") == "report":
            return {**base, **override}
        if override.get("kind", base["kind"]) != base["kind"]:
            return base
        return {**base, "value": max(float(base["value"]), float(override["value"]))}


class LocalStorageAdapter:
    """Local filesystem storage for reference data and report output."""

    def __init__(self, reference_dir: Optional[Path] = None):
        self.reference_dir = reference_dir or settings.reference_dir

    def load_reference_table(self, table_id: TableId) -> ReferenceTable:
        """Load reference_tables/<table_id>.yaml."""
        file_path = self.reference_dir / f"{table_id.value}.yaml"
        if not file_path.exists():
            raise DomainError(f"no reference data for {table_id.value} at {file_path}")

        with open(file_path, 'r') as f:
            data = yaml.safe_load(f)

        rows = data.get("rows", [])
        logger.debug(f"Loaded {len(rows)} reference rows from {file_path}")
        return ReferenceTable(
            table_id=data.get("table_id", table_id.value),
            rows=rows,
            tolerances=data.get("tolerances", {}),
            columns=data.get("columns", []),
            extras={k: v for k, v in data.items() if k not in ("table_id", "rows", "tolerances", "columns")},
        )

    def report_to_frame(self, report: ReproReport) -> pd.DataFrame:
        """Flatten a report into one row per table row, restricted to the report columns."""
        records = []
        for row in report.rows:
            record: Dict[str, Any] = {"label": row.label}
            record.update(row.inputs)
            if row.method is not None:
                record["method"] = row.method.value
            record.update(row.computed)
            for key, value in row.reference.items():
                record[f"ref_{key}"] = value
            for key, value in row.deviations.items():
                record[f"dev_{key}"] = value
            record["passed"] = row.passed
            record["reason"] = row.reason or ""
            records.append(record)

        frame = pd.DataFrame.from_records(records)
        if report.columns:
            frame = frame[[c for c in report.columns if c in frame.columns]]
        return frame

    def render_csv(self, report: ReproReport, digits: Optional[int] = None) -> str:
        digits = digits or settings.digits
        frame = self.report_to_frame(report)
        return frame.to_csv(index=False, float_format=f"%.{digits}g", lineterminator="\n")

    def render_json(self, payload: Any) -> str:
        if hasattr(payload, "model_dump"):
            return json.dumps(payload.model_dump(mode="json"), indent=2, default=str)
        return json.dumps(payload, indent=2, default=str)

    def save_text(self, text: str, file_path: Path) -> str:
        """Write rendered output to file_path, creating parent directories."""
        file_path.parent.mkdir(parents=True, exist_ok=True)

        with open(file_path, 'w', newline="") as f:
            f.write(text)

        logger.info(f"Saved output to {file_path}")
        return str(file_path)
