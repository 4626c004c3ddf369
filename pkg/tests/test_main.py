"""Tests for the main entry point (__main__.py)."""

import json
from unittest.mock import patch

import pytest

from lace_perc.__main__ import main
from lace_perc.errors import ResourceLimitError, TruncationError


def _data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


class TestMain:
    """Tests for the main function."""

    def test_predict(self, capsys):
        assert main(["predict", "--omega", "12", "--quiet"]) == 0
        out = capsys.readouterr().out
        assert "0.0923032" in out

    def test_pi_exact(self, capsys):
        assert main(["pi-exact", "--graph", "q2", "--levels", "0", "--quiet"]) == 0
        assert "3/1 p^4" in capsys.readouterr().out

    def test_pi_exact_json_coefficients(self, capsys):
        assert main(["pi-exact", "--graph", "q2", "--levels", "0", "--format", "json", "--quiet"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["rows"][0]["coefficients"] == ["0/1", "0/1", "0/1", "0/1", "3/1"]

    def test_derive_series(self, capsys):
        assert main(["derive-series", "--quiet"]) == 0
        assert _data_lines(capsys.readouterr().out) == [
            "k,omega_pc,pi_hat",
            "0,1/1,0/1",
            "1,1/1,-1/1",
            "2,7/2,-5/2",
        ]

    def test_status_and_summary_on_stderr(self, capsys):
        assert main(["derive-series"]) == 0
        err = capsys.readouterr().err
        assert "[*] derive-series" in err
        assert "7/2" in err

    def test_quiet_suppresses_status(self, capsys):
        main(["derive-series", "--quiet"])
        assert capsys.readouterr().err == ""

    def test_invalid_argument_exits(self):
        with pytest.raises(SystemExit) as exc:
            main(["chi", "--graph", "q2", "--p", "2"])
        assert exc.value.code == 2

    @patch("lace_perc.__main__.run_command")
    def test_resource_guard_returns_three(self, mock_run, capsys):
        mock_run.side_effect = ResourceLimitError("too many bonds")
        assert main(["pi-exact", "--graph", "q4", "--levels", "2"]) == 3
        assert "resource guard" in capsys.readouterr().err

    @patch("lace_perc.__main__.run_command")
    def test_truncation_returns_two(self, mock_run):
        mock_run.side_effect = TruncationError("N_max too small")
        assert main(["identity-check", "--graph", "q1", "--max-order", "4"]) == 2

    def test_value_error_returns_two(self, capsys):
        assert main(["pi-exact", "--graph", "q1", "--levels", "1", "--split"]) == 2
        assert "Error:" in capsys.readouterr().err

    def test_identity_truncation_returns_two(self):
        assert main(["identity-check", "--graph", "q1", "--max-order", "4", "--n-max", "1", "--quiet"]) == 2

    def test_output_file(self, tmp_path, capsys):
        path = tmp_path / "series.json"
        assert main(["derive-series", "--format", "json", "--output", str(path)]) == 0
        document = json.loads(path.read_text(encoding="utf-8"))
        assert document["schema"] == "derive-series/1"
        assert document["rows"][2]["omega_pc"] == "7/2"
        assert "Wrote 3 row(s)" in capsys.readouterr().err

    def test_same_seed_same_data_across_workers(self, capsys):
        argv = ["sweep", "--graph", "q3", "--p-grid", "0.2,0.4", "--samples", "400", "--quiet"]
        assert main(argv + ["--workers", "1"]) == 0
        first = capsys.readouterr().out
        assert main(argv + ["--workers", "3"]) == 0
        second = capsys.readouterr().out
        assert _data_lines(first) == _data_lines(second)
        assert first != second

    def test_warnings_reported(self, capsys):
        assert main(["chi", "--graph", "q3", "--p", "1.0", "--samples", "10", "--cap", "2"]) == 0
        assert "[!]" in capsys.readouterr().err
