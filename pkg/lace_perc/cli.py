"""Command-line interface: subcommand parsers, config-file defaults, validation."""

import argparse
import os
import sys
from typing import NoReturn

from lace_perc import __version__
from lace_perc.config import (
    DEFAULT_FORMAT,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    FORMATS,
    env_workers,
    load_config_file,
    parse_graph_spec,
    parse_p_grid,
    parse_pairs,
    resolve_output_path,
)
from lace_perc.diagrams import DEFAULT_PROXY_CONSTANT
from lace_perc.montecarlo import (
    DEFAULT_BUDGET,
    DEFAULT_CLUSTER_CAP,
    DEFAULT_CONFIDENCE,
    DEFAULT_STREAMS,
    DEFAULT_TARGET,
    DEFAULT_TOLERANCE,
    INITIAL_BISECTION_SAMPLES,
    MAX_MC_LEVEL,
)
from lace_perc.oracle import DEFAULT_MAX_ORDER

DEFAULT_SAMPLES = 10_000
DEFAULT_N_MAX = 2
DEFAULT_IDENTITY_ORDER = 3


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("run options")
    group.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Base seed (default: 0).")
    group.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker threads (default: $LACE_PERC_WORKERS or 1). Results do not depend on it.",
    )
    group.add_argument(
        "--format", choices=FORMATS, default=DEFAULT_FORMAT, help="Output format (default: csv)."
    )
    group.add_argument(
        "--output",
        default=None,
        help="Output file (default: stdout). Relative paths go under $LACE_PERC_OUTPUT_DIR.",
    )
    group.add_argument("--config", default=None, help="JSON file of flag defaults; flags win.")
    group.add_argument("--quiet", action="store_true", help="Suppress [*] status lines.")
    return parent


def _add_graph(sub: argparse.ArgumentParser, required: bool = True) -> None:
    sub.add_argument(
        "--graph",
        required=required,
        help="q1..q4, hypercube:N, or torus:N[:M] (torus side defaults to 6).",
    )


def _add_sampling(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="Cluster samples.")
    sub.add_argument(
        "--streams", type=int, default=DEFAULT_STREAMS, help="Sample streams (default: 16)."
    )
    sub.add_argument(
        "--cap", type=int, default=DEFAULT_CLUSTER_CAP, help="Cluster size cap (default: 10^7)."
    )


def build_parser(file_defaults: dict | None = None, command: str | None = None) -> argparse.ArgumentParser:
    """Build the argument parser.

    Args:
        file_defaults: Defaults loaded from ``--config``; applied to the
            sub-parser of ``command`` so explicit flags still win. Flags
            they supply are no longer required on the command line.
        command: Subcommand the defaults belong to.

    Raises:
        ValueError: If ``file_defaults`` names a flag ``command`` lacks.
    """
    parser = argparse.ArgumentParser(
        prog="lace-perc",
        description=(
            "lace-perc v{ver} — exact lace-expansion coefficients and Monte Carlo\n"
            "critical points for bond percolation on hypercubes Q_n and tori."
        ).format(ver=__version__),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "Examples:\n"
            "  lace-perc predict --omega 12 --order 3\n"
            "  lace-perc pi-exact --graph q2 --levels 0\n"
            "  lace-perc derive-series\n"
            "  lace-perc solve-pc --graph hypercube:12 --target 200 --workers 4\n"
            "  lace-perc identity-check --graph q3 --max-order 3 --n-max 2\n"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parent = _common_parent()
    subs = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub = subs.add_parser("predict", parents=[parent], help="Evaluate the 1/Ω expansion of p_c.")
    sub.add_argument("--omega", type=float, required=True, help="Degree Ω.")
    sub.add_argument("--order", type=int, default=3, help="Terms of the p_c series (1..3).")
    sub.add_argument("--graph-kind", choices=("hypercube", "torus"), default="hypercube")

    sub = subs.add_parser("chi", parents=[parent], help="Estimate χ(p) by Monte Carlo.")
    _add_graph(sub)
    sub.add_argument("--p", type=float, required=True, help="Bond density.")
    _add_sampling(sub)

    sub = subs.add_parser("sweep", parents=[parent], help="χ on a p grid with shared randomness.")
    _add_graph(sub)
    sub.add_argument("--p-grid", required=True, help="Comma list or start:stop:step.")
    _add_sampling(sub)

    sub = subs.add_parser("solve-pc", parents=[parent], help="Solve χ(p) = T by stochastic bisection.")
    _add_graph(sub)
    sub.add_argument("--target", type=float, default=DEFAULT_TARGET, help="Target χ (default: 200).")
    sub.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE, help="Relative tolerance on χ.")
    sub.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="Total cluster samples.")
    sub.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    sub.add_argument("--initial-samples", type=int, default=INITIAL_BISECTION_SAMPLES)
    sub.add_argument("--streams", type=int, default=DEFAULT_STREAMS)
    sub.add_argument("--cap", type=int, default=DEFAULT_CLUSTER_CAP)

    sub = subs.add_parser("pi-exact", parents=[parent], help="Exact Π̂⁽ᴺ⁾ polynomial.")
    _add_graph(sub)
    sub.add_argument("--levels", type=int, default=0, help="Expansion level N.")
    sub.add_argument("--split", action="store_true", help="For N = 0, split by 4-cycles.")

    sub = subs.add_parser("pi-series", parents=[parent], help="Π̂⁽ᴺ⁾ exact through p^max-order.")
    _add_graph(sub)
    sub.add_argument("--levels", type=int, default=0)
    sub.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER)

    sub = subs.add_parser("pi-mc", parents=[parent], help="Nested Monte Carlo estimate of Π̂⁽ᴺ⁾.")
    _add_graph(sub)
    sub.add_argument("--levels", type=int, default=0)
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sub.add_argument("--streams", type=int, default=DEFAULT_STREAMS)

    sub = subs.add_parser("identity-check", parents=[parent], help="Check the lace identity in p.")
    _add_graph(sub)
    sub.add_argument("--max-order", type=int, default=DEFAULT_IDENTITY_ORDER)
    sub.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    sub.add_argument(
        "--p", type=float, default=None, help="Report recursion residuals at this p instead."
    )

    sub = subs.add_parser("diagrams", parents=[parent], help="Tabulate T_p^(i,j) on Q_n.")
    _add_graph(sub)
    sub.add_argument("--p-grid", default="0.1", help="Comma list or start:stop:step.")
    sub.add_argument("--pairs", default="2:3", help="(i, j) pairs as i:j,i:j.")
    sub.add_argument("--chi", type=float, default=None, help="χ value for the infrared proxy.")
    sub.add_argument("--proxy-c", type=float, default=DEFAULT_PROXY_CONSTANT)
    sub.add_argument("--refinement", type=float, default=1.0)

    sub = subs.add_parser("derive-series", parents=[parent], help="Bootstrap Ωp_c in 1/Ω.")
    sub.add_argument("--order", type=int, default=2)
    sub.add_argument("--omega-prime-offset", type=int, choices=(1, 2), default=1)

    sub = subs.add_parser("fit", parents=[parent], help="Fit b0 + b1/Ω + b2/Ω² + b3/Ω³.")
    sub.add_argument("--input", required=True, help="CSV with omega and value/error columns.")
    sub.add_argument("--value-column", default="corrected_omega_p")
    sub.add_argument("--error-column", default="omega_p_stderr")

    if file_defaults and command in subs.choices:
        sub = subs.choices[command]
        known = {action.dest for action in sub._actions} - {"help", "config"}
        unknown = sorted(set(file_defaults) - known)
        if unknown:
            raise ValueError(f"Unknown keys in config file for '{command}': {', '.join(unknown)}")
        for action in sub._actions:
            if action.dest in file_defaults:
                action.required = False
        sub.set_defaults(**file_defaults)
    return parser


def _fail(message: str) -> NoReturn:
    print(f"Error: {message}", file=sys.stderr)
    sys.exit(2)


def validate_args(args: argparse.Namespace) -> None:
    """Validate parsed CLI arguments.

    Raises:
        SystemExit: With code 2 on the first invalid argument.
    """
    if args.workers is not None and args.workers < 1:
        _fail(f"--workers must be >= 1, got {args.workers}")
    if args.seed < 0:
        _fail(f"--seed must be >= 0, got {args.seed}")

    graph_spec = getattr(args, "graph", None)
    if graph_spec is not None:
        try:
            parse_graph_spec(graph_spec)
        except ValueError as exc:
            _fail(str(exc))

    p = getattr(args, "p", None)
    if p is not None and not 0.0 <= p <= 1.0:
        _fail(f"--p must lie in [0, 1], got {p}")
    for flag in ("samples", "streams", "cap", "budget", "initial_samples"):
        value = getattr(args, flag, None)
        if value is not None and value < 1:
            _fail(f"--{flag.replace('_', '-')} must be >= 1, got {value}")
    for flag in ("levels", "max_order", "n_max"):
        value = getattr(args, flag, None)
        if value is not None and value < 0:
            _fail(f"--{flag.replace('_', '-')} must be >= 0, got {value}")
    if args.command == "pi-mc" and args.levels > MAX_MC_LEVEL:
        _fail(f"pi-mc supports --levels up to {MAX_MC_LEVEL}")
    if getattr(args, "p_grid", None) is not None:
        try:
            parse_p_grid(args.p_grid)
        except ValueError as exc:
            _fail(str(exc))
    if getattr(args, "pairs", None) is not None:
        try:
            parse_pairs(args.pairs)
        except ValueError as exc:
            _fail(str(exc))
    if args.command == "predict" and args.omega < 1:
        _fail(f"--omega must be >= 1, got {args.omega}")
    if args.command == "fit" and not os.path.isfile(args.input):
        _fail(f"Fit input not found: '{args.input}'")

    if args.output is not None:
        directory = os.path.dirname(os.path.abspath(args.output)) or "."
        if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
            _fail(f"Output directory is not writable: '{directory}'")


def _config_request(argv: list[str] | None) -> tuple[str | None, str | None]:
    """Subcommand and ``--config`` path, read before the full parse."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    return known.command, known.config


def parse_cli(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse, merge config-file defaults, resolve environment overrides, validate.

    Args:
        argv: Optional list of arguments (defaults to sys.argv).

    Returns:
        Parsed and validated argument namespace.
    """
    command, config_path = _config_request(argv)
    file_defaults = None
    if config_path and command:
        try:
            file_defaults = load_config_file(config_path)
        except (OSError, ValueError) as exc:
            _fail(f"Cannot load config file: {exc}")
    try:
        parser = build_parser(file_defaults, command)
    except ValueError as exc:
        _fail(str(exc))
    args = parser.parse_args(argv)

    if args.workers is None:
        try:
            args.workers = env_workers() or DEFAULT_WORKERS
        except ValueError as exc:
            _fail(str(exc))
    args.output = resolve_output_path(args.output)
    validate_args(args)
    return args
