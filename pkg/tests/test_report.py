"""Tests for output rendering."""

import io
import json
from fractions import Fraction

from lace_perc import __version__
from lace_perc.config import RunConfig
from lace_perc.engine import RunResult
from lace_perc.report import format_value, print_summary, render_csv, render_json, write_result


def _result():
    rows = [{"k": 2, "omega_pc": Fraction(7, 2), "pi_hat": Fraction(-5, 2)}]
    return RunResult("derive-series", rows, ["Ωp_c = [1, 1, 7/2] in powers of 1/Ω"])


def _pi_row():
    return {
        "graph": "q2",
        "levels": 0,
        "part": "total",
        "polynomial": "3/1 p",
        "coefficients": ["0/1", "3/1"],
    }


CONFIG = RunConfig("derive-series", {"order": 2, "seed": 0})


class TestFormatValue:
    """Tests for cell formatting."""

    def test_values(self):
        assert format_value(Fraction(3, 1)) == "3/1"
        assert format_value(Fraction(-5, 2)) == "-5/2"
        assert format_value(0.1) == "0.1"
        assert format_value(True) == "true"
        assert format_value(False) == "false"
        assert format_value(7) == "7"
        assert format_value("") == ""

    def test_sequences_as_json_arrays(self):
        assert format_value(["0/1", "3/1"]) == '["0/1", "3/1"]'
        assert format_value([]) == "[]"

    def test_infinite_stderr(self):
        assert format_value(float("inf")) == "inf"


class TestRenderCsv:
    """Tests for CSV output."""

    def test_header_then_data(self):
        lines = render_csv(_result(), CONFIG).splitlines()
        assert lines[0] == f"# lace-perc {__version__}"
        assert lines[1] == "# schema: derive-series/1"
        assert "# config.order = 2" in lines
        data = [line for line in lines if not line.startswith("#")]
        assert data == ["k,omega_pc,pi_hat", "2,7/2,-5/2"]

    def test_deterministic(self):
        assert render_csv(_result(), CONFIG) == render_csv(_result(), CONFIG)


class TestRenderJson:
    """Tests for JSON output."""

    def test_document(self):
        document = json.loads(render_json(_result(), CONFIG))
        assert document["schema"] == "derive-series/1"
        assert document["config"]["order"] == 2
        assert document["rows"] == [{"k": 2, "omega_pc": "7/2", "pi_hat": "-5/2"}]

    def test_nan_becomes_null(self):
        result = RunResult("fit", [{"term": "b0", "value": float("nan")}])
        document = json.loads(render_json(result, CONFIG))
        assert document["rows"][0]["value"] is None

    def test_infinite_stderr_written_as_text(self):
        result = RunResult("fit", [{"term": "b0", "value": float("inf")}])
        document = json.loads(render_json(result, CONFIG))
        assert document["rows"][0]["value"] == "inf"

    def test_coefficient_list_stays_array(self):
        result = RunResult("pi-exact", [_pi_row()])
        document = json.loads(render_json(result, CONFIG))
        assert document["rows"][0]["coefficients"] == ["0/1", "3/1"]

    def test_coefficient_list_quoted_in_csv(self):
        result = RunResult("pi-exact", [_pi_row()])
        data = [line for line in render_csv(result, CONFIG).splitlines() if not line.startswith("#")]
        assert data[1] == 'q2,0,total,3/1 p,"[""0/1"", ""3/1""]"'


class TestWriteResult:
    """Tests for writing to files and stdout."""

    def test_file(self, tmp_path):
        path = tmp_path / "out.csv"
        write_result(_result(), CONFIG, "csv", str(path))
        assert path.read_text(encoding="utf-8") == render_csv(_result(), CONFIG)

    def test_stdout(self, capsys):
        write_result(_result(), CONFIG, "json", None)
        assert json.loads(capsys.readouterr().out)["tool"] == "lace-perc"

    def test_summary(self):
        stream = io.StringIO()
        print_summary(_result(), stream)
        assert "7/2" in stream.getvalue()
        assert "derive-series/1" in stream.getvalue()
