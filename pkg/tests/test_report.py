"""Tests for run reports."""
import json
import math
from fractions import Fraction

import mpmath
import numpy as np

from report import SCHEMA_LINE, RunReport, _plain


def _report(result: dict | None = None) -> RunReport:
    report = RunReport("bm", {"n": 2})
    report.add_result(result or {
        "record": {"mass": 2.25, "admissible": True},
        "columns": ["s", "v"],
        "rows": [[0.0, 1.0], [1.0, 0.5]],
        "errors": {},
    })
    return report


class TestPlain:
    """Tests for JSON-safe conversion."""

    def test_non_finite_floats(self):
        """Test inf and nan become strings."""
        assert _plain([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_fraction(self):
        """Test exact rationals render as p/q."""
        assert _plain(Fraction(81, 32)) == "81/32"

    def test_numpy_values(self):
        """Test numpy scalars and arrays become Python values."""
        assert _plain({"a": np.float64(0.5), "b": np.arange(3)}) == {"a": 0.5, "b": [0, 1, 2]}

    def test_mpf(self):
        """Test mpf values render as decimal strings."""
        assert _plain(mpmath.mpf(1) / 4) == "0.25"

    def test_dict_keys_are_strings(self):
        """Test numeric keys become strings."""
        assert _plain({0.5: 1}) == {"0.5": 1}


class TestRunReport:
    """Tests for RunReport renderings."""

    def test_json_is_deterministic(self):
        """Test the JSON body has no wall time and sorted keys."""
        first, second = _report().to_json(), _report().to_json()
        assert first == second
        body = json.loads(first)
        assert body["command"] == "bm"
        assert body["record"]["mass"] == 2.25
        assert body["table"]["columns"] == ["s", "v"]
        assert "wall_time" not in body

    def test_csv_layout(self):
        """Test schema line, record comment, header and rows."""
        lines = _report().to_csv().splitlines()
        assert lines[0] == SCHEMA_LINE
        assert lines[1].startswith("# record ")
        assert json.loads(lines[1][len("# record "):]) == {"admissible": True, "mass": 2.25}
        assert lines[2] == "s,v"
        assert lines[3:] == ["0.0,1.0", "1.0,0.5"]

    def test_csv_without_table(self):
        """Test a record-only result renders as key,value rows."""
        report = _report({"record": {"b": {"x": 1}, "a": 2}})
        lines = report.to_csv().splitlines()
        assert lines[1] == "key,value"
        assert lines[2:] == ["a,2", "b.x,1"]

    def test_text_table(self):
        """Test the text rendering carries the command and header."""
        text = _report().render("table")
        assert text.startswith("mtlab ")
        assert "s" in text.splitlines()[1]

    def test_error_renders_as_json(self):
        """Test errors are JSON whatever the format."""
        report = _report({"error": {"kind": "usage", "type": "UsageError", "message": "x", "details": {}}})
        assert not report.ok
        body = json.loads(report.render("csv"))
        assert body["error"]["kind"] == "usage"
        assert "record" not in body

    def test_save(self, tmp_path):
        """Test saving writes the rendered report."""
        path = _report().save_sync(tmp_path / "out" / "r.json", "json")
        assert json.loads(path.read_text())["config"] == {"n": 2}

    def test_footer_goes_to_stderr(self, capsys):
        """Test the wall-time footer stays off stdout."""
        _report().footer()
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "finished in" in captured.err
