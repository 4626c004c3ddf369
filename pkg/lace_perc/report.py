"""Self-describing CSV/JSON output and the terminal summary."""

from __future__ import annotations

import csv
import io
import json
import sys
from fractions import Fraction

from lace_perc import __version__
from lace_perc.config import RunConfig
from lace_perc.engine import RunResult

TOOL_NAME = "lace-perc"


def format_value(value) -> str:
    """Cell text: rationals as ``num/den``, floats by shortest round-trip repr."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return json.dumps(list(value))
    return str(value)


def _json_value(value):
    if isinstance(value, Fraction):
        return format_value(value)
    if isinstance(value, float) and value != value:
        return None
    if isinstance(value, float) and value in (float("inf"), float("-inf")):
        return format_value(value)
    return value


def header_lines(result: RunResult, config: RunConfig) -> list[str]:
    lines = [f"# {TOOL_NAME} {__version__}", f"# schema: {result.schema_id}"]
    lines += [f"# config.{key} = {value}" for key, value in config.header_items()]
    return lines


def render_csv(result: RunResult, config: RunConfig) -> str:
    buffer = io.StringIO()
    for line in header_lines(result, config):
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(row[col]) for col in result.columns])
    return buffer.getvalue()


def render_json(result: RunResult, config: RunConfig) -> str:
    document = {
        "tool": TOOL_NAME,
        "version": __version__,
        "schema": result.schema_id,
        "config": config.as_dict(),
        "columns": list(result.columns),
        "rows": [{col: _json_value(row[col]) for col in result.columns} for row in result.rows],
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def render(result: RunResult, config: RunConfig, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(result, config)
    if fmt == "json":
        return render_json(result, config)
    raise ValueError(f"Unknown output format: {fmt!r}")


def write_result(result: RunResult, config: RunConfig, fmt: str, path: str | None = None) -> None:
    """Write to ``path``, or to stdout when no path is given."""
    text = render(result, config, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def print_summary(result: RunResult, stream=None) -> None:
    """Print the human-readable summary block."""
    stream = sys.stderr if stream is None else stream
    banner = "=" * 60
    print(f"\n{banner}", file=stream)
    print(f"  {TOOL_NAME} — {result.schema_id}", file=stream)
    print(banner, file=stream)
    for line in result.summary:
        print(f"  {line}", file=stream)
    print(f"{banner}\n", file=stream)
