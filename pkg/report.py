"""Run reports: deterministic JSON, CSV and text renderings of one op result."""
import csv
import io
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

import mpmath
import numpy as np
import structlog

log = structlog.get_logger()

VERSION = "0.1.0"
SCHEMA_LINE = "# mtlab-schema v1"
MPF_DIGITS = 20

OutputFormat = Literal["csv", "json", "table"]


def _plain(value: Any) -> Any:
    """JSON-safe copy; non-finite floats become strings, Fractions become 'p/q'."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, MPF_DIGITS)
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _flatten(record: dict, prefix: str = "") -> list[list]:
    rows = []
    for key in sorted(record):
        value = record[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, f"{name}."))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                rows.extend(_flatten(item, f"{name}.{i}."))
        else:
            rows.append([name, value])
    return rows


class RunReport:
    """Collects the config echo and the result of a single CLI run."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.version = VERSION
        self.record: dict = {}
        self.columns: list[str] = []
        self.rows: list[list] = []
        self.errors: dict = {}
        self.error: dict | None = None
        self._started = time.perf_counter()

    def add_result(self, result: dict) -> None:
        """Take the dict returned by ops.execute_op."""
        if "error" in result:
            self.error = result["error"]
            return
        self.record = result.get("record", {})
        self.columns = result.get("columns", [])
        self.rows = result.get("rows", [])
        self.errors = result.get("errors", {})

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def wall_time(self) -> float:
        return time.perf_counter() - self._started

    def to_dict(self) -> dict:
        """Report body, without wall time."""
        body = {
            "version": self.version,
            "command": self.command,
            "config": self.config,
        }
        if self.error is not None:
            body["error"] = self.error
        else:
            body["record"] = self.record
            body["errors"] = self.errors
            body["table"] = {"columns": self.columns, "rows": self.rows}
        return _plain(body)

    # ============================================
    # Renderers
    # ============================================

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def _table(self) -> tuple[list[str], list[list]]:
        body = self.to_dict()
        if self.columns:
            return body["table"]["columns"], body["table"]["rows"]
        return ["key", "value"], _flatten(body["record"])

    def to_csv(self) -> str:
        """Schema line, the record as one compact JSON comment, header, rows."""
        buffer = io.StringIO()
        buffer.write(SCHEMA_LINE + "\n")
        columns, rows = self._table()
        if self.columns:
            record = json.dumps(self.to_dict()["record"], sort_keys=True, separators=(",", ":"))
            buffer.write(f"# record {record}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        return buffer.getvalue()

    def to_text(self) -> str:
        columns, rows = self._table()
        cells = [[str(c) for c in columns]] + [["" if v is None else str(v) for v in row] for row in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
        lines = [f"mtlab {self.version} {self.command}"]
        lines += ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in cells]
        return "\n".join(lines) + "\n"

    def render(self, fmt: OutputFormat) -> str:
        """Errors always render as JSON so they stay machine-readable."""
        if self.error is not None or fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        return self.to_text()

    def footer(self) -> None:
        """Wall time goes to stderr, outside the report body."""
        print(f"# {self.command} finished in {self.wall_time:.3f}s", file=sys.stderr)

    def save_sync(self, path: Path, fmt: OutputFormat = "json") -> Path:
        """Write the rendered report to a file."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(fmt))
        log.info("report_saved", path=str(path), command=self.command, ok=self.ok)
        return path
