"""Run configuration: graph and grid specs, config files, environment overrides."""

from __future__ import annotations

import json
import os

from lace_perc.graphs import NAMED_GRAPHS, GraphModel, build_graph

ENV_OUTPUT_DIR = "LACE_PERC_OUTPUT_DIR"
ENV_WORKERS = "LACE_PERC_WORKERS"

DEFAULT_TORUS_SIDE = 6
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1
DEFAULT_FORMAT = "csv"
FORMATS = ("csv", "json")


class RunConfig:
    """Resolved settings of one subcommand run."""

    __slots__ = ("command", "values")

    def __init__(self, command: str, values: dict) -> None:
        self.command = command
        self.values = dict(values)

    @classmethod
    def from_namespace(cls, args) -> RunConfig:
        values = {k: v for k, v in vars(args).items() if k != "command"}
        return cls(args.command, values)

    def header_items(self) -> list[tuple[str, str]]:
        """Sorted (key, JSON value) pairs for the output header."""
        items = [("command", json.dumps(self.command))]
        for key in sorted(self.values):
            items.append((key, json.dumps(self.values[key], sort_keys=True, default=str)))
        return items

    def as_dict(self) -> dict:
        return {k: json.loads(v) for k, v in self.header_items()}

    def __repr__(self) -> str:
        return f"RunConfig(command={self.command!r}, keys={len(self.values)})"


def parse_graph_spec(text: str) -> GraphModel:
    """Parse ``q1``..``q4``, ``hypercube:N`` or ``torus:N[:M]``.

    Raises:
        ValueError: If the graph spec is malformed or the graph is invalid.
    """
    spec = text.strip().lower()
    if spec in NAMED_GRAPHS:
        return build_graph(spec)
    parts = spec.split(":")
    try:
        numbers = [int(part) for part in parts[1:]]
    except ValueError:
        raise ValueError(f"Malformed graph spec: {text!r}") from None
    if parts[0] == "hypercube" and len(numbers) == 1:
        return build_graph("hypercube", numbers[0])
    if parts[0] == "torus" and len(numbers) in (1, 2):
        side = numbers[1] if len(numbers) == 2 else DEFAULT_TORUS_SIDE
        return build_graph("torus", numbers[0], side)
    raise ValueError(
        f"Malformed graph spec: {text!r} (expected q1..q4, hypercube:N or torus:N[:M])"
    )


def parse_p_grid(text: str) -> list[float]:
    """Parse ``0.1,0.2,0.3`` or an inclusive range ``start:stop:step``."""
    spec = text.strip()
    try:
        if ":" in spec:
            start, stop, step = (float(part) for part in spec.split(":"))
            if step <= 0:
                raise ValueError(f"Grid step must be > 0, got {step}")
            count = int(round((stop - start) / step))
            if count < 0:
                raise ValueError(f"Empty grid range: {text!r}")
            grid = [round(start + k * step, 12) for k in range(count + 1)]
        else:
            grid = [float(part) for part in spec.split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"Malformed p grid {text!r}: {exc}") from None
    if not grid:
        raise ValueError(f"Empty p grid: {text!r}")
    for p in grid:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Grid values must lie in [0, 1], got {p}")
    return grid


def parse_pairs(text: str) -> list[tuple[int, int]]:
    """Parse ``2:3,0:3`` into [(2, 3), (0, 3)]."""
    pairs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            i, j = (int(x) for x in part.split(":"))
        except ValueError:
            raise ValueError(f"Malformed (i, j) pair: {part!r}") from None
        if i < 0 or j < 0:
            raise ValueError(f"Pair entries must be >= 0, got {part!r}")
        pairs.append((i, j))
    if not pairs:
        raise ValueError(f"No (i, j) pairs in {text!r}")
    return pairs


def load_config_file(path: str) -> dict:
    """Load a JSON object of flag destinations from ``path``.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file is not a JSON object.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"Config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError(f"Config file {path!r} must hold a JSON object")
    return {key.replace("-", "_"): value for key, value in data.items()}


def env_workers(environ=None) -> int | None:
    """Worker count from the environment, if set."""
    environ = os.environ if environ is None else environ
    raw = environ.get(ENV_WORKERS)
    if raw is None or not raw.strip():
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_WORKERS} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{ENV_WORKERS} must be >= 1, got {value}")
    return value


def resolve_output_path(path: str | None, environ=None) -> str | None:
    """Place relative output paths under the configured output directory."""
    if path is None or path == "-":
        return None
    environ = os.environ if environ is None else environ
    base = environ.get(ENV_OUTPUT_DIR)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path
