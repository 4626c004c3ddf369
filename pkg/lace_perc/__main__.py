"""lace-perc: main entry point.

Ties together the CLI, engine and report modules.
"""

import sys
import warnings

from lace_perc.cli import parse_cli
from lace_perc.config import RunConfig
from lace_perc.engine import run_command
from lace_perc.errors import ResourceLimitError, TruncationError
from lace_perc.report import print_summary, write_result


def main(argv: list[str] | None = None) -> int:
    """Run one lace-perc subcommand.

    Args:
        argv: Optional argument list (defaults to sys.argv).

    Returns:
        Exit code (0 = success, 2 = invalid input or truncation, 3 = resource guard).
    """
    args = parse_cli(argv)
    config = RunConfig.from_namespace(args)

    def status(line: str) -> None:
        if not args.quiet:
            print(line, file=sys.stderr)

    status(f"[*] {args.command} (seed {args.seed}, {args.workers} worker(s))")
    if getattr(args, "graph", None):
        status(f"    Graph  : {args.graph}")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = run_command(args)
        except ResourceLimitError as exc:
            print(f"Error: resource guard: {exc}", file=sys.stderr)
            return 3
        except TruncationError as exc:
            print(f"Error: truncation: {exc}", file=sys.stderr)
            return 2
        except (ValueError, OSError) as exc:
            print(f"Error: {exc}", file=sys.stderr)
            return 2

    seen = set()
    for warning in caught:
        text = str(warning.message)
        if text not in seen:
            seen.add(text)
            status(f"[!] {warning.category.__name__}: {text}")

    try:
        write_result(result, config, args.format, args.output)
    except OSError as exc:
        print(f"Error writing output: {exc}", file=sys.stderr)
        return 2
    if args.output:
        status(f"[*] Wrote {len(result.rows)} row(s) to {args.output}")

    if not args.quiet:
        print_summary(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
