"""Subcommand execution.

Each handler takes the parsed argument namespace, calls into the library and
returns a :class:`RunResult` whose rows follow the fixed column schema of
that subcommand.
"""

from __future__ import annotations

import csv

from lace_perc import diagrams, montecarlo, oracle, series
from lace_perc.config import parse_graph_spec, parse_p_grid, parse_pairs

SCHEMA_VERSION = 1

SCHEMAS: dict[str, tuple[str, ...]] = {
    "predict": ("omega", "graph_kind", "order", "p_c", "omega_p_c"),
    "chi": ("graph_kind", "n", "m", "p", "samples", "chi_mean", "chi_stderr", "seed"),
    "sweep": ("graph_kind", "n", "m", "p", "samples", "chi_mean", "chi_stderr", "seed"),
    "solve-pc": (
        "n",
        "omega",
        "target",
        "p_hat",
        "omega_p_hat",
        "corrected_omega_p",
        "predicted_3term",
        "abs_deviation",
        "chi_mean",
        "chi_stderr",
        "omega_p_stderr",
        "samples_spent",
        "budget_exhausted",
        "p_lo",
        "p_hi",
    ),
    "pi-exact": ("graph", "levels", "part", "polynomial", "coefficients"),
    "pi-series": ("graph", "levels", "max_order", "lowest_order", "polynomial", "coefficients"),
    "pi-mc": ("graph", "levels", "p", "samples", "mean", "stderr", "seed"),
    "identity-check": ("graph", "max_order", "n_max", "is_zero", "residual", "coefficients"),
    "recursion": ("graph", "p", "n_max", "residual"),
    "diagrams": ("n", "omega", "i", "j", "p", "method", "value", "scaled_value"),
    "derive-series": ("k", "omega_pc", "pi_hat"),
    "fit": ("term", "value"),
}


class RunResult:
    """Rows of one run plus human-readable summary lines."""

    __slots__ = ("schema", "columns", "rows", "summary")

    def __init__(self, schema: str, rows: list[dict], summary: list[str] | None = None) -> None:
        self.schema = schema
        self.columns = SCHEMAS[schema]
        self.rows = rows
        self.summary = summary or []

    @property
    def schema_id(self) -> str:
        return f"{self.schema}/{SCHEMA_VERSION}"

    def __repr__(self) -> str:
        return f"RunResult(schema={self.schema_id!r}, rows={len(self.rows)})"


def _graph_columns(graph) -> dict:
    return {"graph_kind": graph.kind, "n": graph.n, "m": graph.m if graph.m is not None else ""}


def _polynomial_row(poly) -> dict:
    return {"polynomial": str(poly), "coefficients": poly.to_strings()}


def run_predict(args) -> RunResult:
    p_c = series.predict_pc(args.omega, args.graph_kind, args.order)
    row = {
        "omega": args.omega,
        "graph_kind": args.graph_kind,
        "order": args.order,
        "p_c": p_c,
        "omega_p_c": args.omega * p_c,
    }
    return RunResult("predict", [row], [f"p_c(Ω={args.omega}) ≈ {p_c:.10f}"])


def _chi_row(graph, p, estimate) -> dict:
    return {
        **_graph_columns(graph),
        "p": p,
        "samples": estimate.samples,
        "chi_mean": estimate.mean,
        "chi_stderr": estimate.stderr,
        "seed": estimate.seed,
    }


def run_chi(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    estimate = montecarlo.chi_estimate(
        graph, args.p, args.samples, args.seed, args.streams, args.workers, args.cap
    )
    summary = [f"χ({args.p}) on {graph.label}: {estimate.mean:.6g} ± {estimate.stderr:.3g}"]
    return RunResult("chi", [_chi_row(graph, args.p, estimate)], summary)


def run_sweep(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    grid = parse_p_grid(args.p_grid)
    estimates = montecarlo.sweep_chi(
        graph, grid, args.samples, args.seed, args.streams, args.workers, args.cap
    )
    rows = [_chi_row(graph, p, est) for p, est in zip(grid, estimates)]
    return RunResult("sweep", rows, [f"{len(rows)} grid points on {graph.label}"])


def run_solve_pc(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    result = montecarlo.solve_chi_target(
        graph,
        target=args.target,
        tol=args.tol,
        budget=args.budget,
        seed=args.seed,
        confidence=args.confidence,
        initial_samples=args.initial_samples,
        stream_count=args.streams,
        workers=args.workers,
        cap=args.cap,
    )
    predicted = series.predict_omega_pc(graph.omega, 2, graph.kind)
    chi = result.chi_at_p_hat
    row = {
        "n": graph.n,
        "omega": graph.omega,
        "target": args.target,
        "p_hat": result.p_hat,
        "omega_p_hat": result.omega_p_hat,
        "corrected_omega_p": result.corrected_omega_p,
        "predicted_3term": predicted,
        "abs_deviation": abs(result.corrected_omega_p - predicted),
        "chi_mean": chi.mean,
        "chi_stderr": chi.stderr,
        # δ(1/χ) ≈ δχ/χ² carries over to Ωp through the recursion.
        "omega_p_stderr": chi.stderr / (chi.mean * chi.mean),
        "samples_spent": result.budget_spent,
        "budget_exhausted": result.budget_exhausted,
        "p_lo": result.p_lo,
        "p_hi": result.p_hi,
    }
    summary = [
        f"p_hat = {result.p_hat:.8f} after {result.steps} bisection steps",
        f"Ω·p_hat + 1/T = {result.corrected_omega_p:.6f} (three-term prediction {predicted:.6f})",
    ]
    if result.budget_exhausted:
        summary.append(
            "sample budget exhausted before the tolerance was met; "
            f"p_c bracket [{result.p_lo:.8f}, {result.p_hi:.8f}]"
        )
    return RunResult("solve-pc", [row], summary)


def run_pi_exact(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    poly = oracle.piN_exact(graph, args.levels)
    rows = [{"graph": graph.label, "levels": args.levels, "part": "total", **_polynomial_row(poly)}]
    if args.split:
        if args.levels != 0:
            raise ValueError("--split applies to --levels 0 only")
        short, long_ = oracle.pi0_cycle_split(graph)
        for part, piece in (("four-cycle", short), ("longer", long_)):
            rows.append({"graph": graph.label, "levels": 0, "part": part, **_polynomial_row(piece)})
    return RunResult("pi-exact", rows, [f"Π̂⁽{args.levels}⁾({graph.label}) = {poly}"])


def run_pi_series(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    poly = oracle.piN_series(graph, args.levels, args.max_order)
    row = {
        "graph": graph.label,
        "levels": args.levels,
        "max_order": args.max_order,
        "lowest_order": "" if poly.lowest_order() is None else poly.lowest_order(),
        **_polynomial_row(poly),
    }
    return RunResult("pi-series", [row], [f"Π̂⁽{args.levels}⁾({graph.label}) = {poly} + O(p^{args.max_order + 1})"])


def run_pi_mc(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    estimate = montecarlo.piN_mc(
        graph, args.levels, args.p, args.samples, args.seed, args.streams, args.workers
    )
    row = {
        "graph": graph.label,
        "levels": args.levels,
        "p": args.p,
        "samples": estimate.samples,
        "mean": estimate.mean,
        "stderr": estimate.stderr,
        "seed": estimate.seed,
    }
    return RunResult("pi-mc", [row], [f"Π̂⁽{args.levels}⁾({args.p}) ≈ {estimate.mean:.6g} ± {estimate.stderr:.3g}"])


def run_identity_check(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    if args.p is not None:
        residuals = oracle.recursion_residuals(graph, args.p, args.n_max)
        rows = [
            {"graph": graph.label, "p": args.p, "n_max": n, "residual": value}
            for n, value in enumerate(residuals)
        ]
        return RunResult("recursion", rows, [f"|Ωp + 1/χ − 1/(1+Π̂)| at N_max={args.n_max}: {residuals[-1]:.3e}"])
    residual = oracle.identity_residual_series(graph, args.max_order, args.n_max)
    row = {
        "graph": graph.label,
        "max_order": args.max_order,
        "n_max": args.n_max,
        "is_zero": residual.is_zero(),
        "residual": str(residual),
        "coefficients": residual.to_strings(),
    }
    verdict = "holds" if residual.is_zero() else "FAILS"
    return RunResult("identity-check", [row], [f"identity through p^{args.max_order} {verdict} on {graph.label}"])


def run_diagrams(args) -> RunResult:
    graph = parse_graph_spec(args.graph)
    table = diagrams.diagram_table(
        graph,
        parse_p_grid(args.p_grid),
        parse_pairs(args.pairs),
        chi_value=args.chi,
        c=args.proxy_c,
        refinement=args.refinement,
    )
    rows = [
        {
            "n": graph.n,
            "omega": graph.omega,
            "i": entry.i,
            "j": entry.j,
            "p": entry.p,
            "method": entry.method,
            "value": entry.value,
            "scaled_value": entry.scaled_value,
        }
        for entry in table
    ]
    return RunResult("diagrams", rows, [f"{len(rows)} diagram entries on {graph.label}"])


def run_derive_series(args) -> RunResult:
    omega_pc, pi_hat = series.derive_pc_series(args.order, args.omega_prime_offset)
    rows = [
        {"k": k, "omega_pc": omega_pc[k], "pi_hat": pi_hat[k]} for k in range(omega_pc.order + 1)
    ]
    text = ", ".join(str(c) for c in omega_pc.coeffs)
    return RunResult("derive-series", rows, [f"Ωp_c = [{text}] in powers of 1/Ω"])


def load_fit_data(path: str, value_column: str, error_column: str) -> list[tuple[float, float, float]]:
    """Read (omega, value, stderr) triples from a CSV file, skipping ``#`` lines."""
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip() and not line.startswith("#")]
    reader = csv.DictReader(lines)
    data = []
    for record in reader:
        try:
            data.append((float(record["omega"]), float(record[value_column]), float(record[error_column])))
        except KeyError as exc:
            raise ValueError(f"Fit input {path!r} lacks column {exc.args[0]!r}") from None
    return data


def run_fit(args) -> RunResult:
    data = load_fit_data(args.input, args.value_column, args.error_column)
    fit = series.fit_inverse_poly(data)
    rows = [{"term": f"b{k}", "value": b} for k, b in enumerate(fit.coefficients)]
    for omega, residual in zip(fit.omegas, fit.residuals):
        rows.append({"term": f"residual@{omega:g}", "value": residual})
    return RunResult("fit", rows, [f"fit over {len(data)} points: {fit}"])


HANDLERS = {
    "predict": run_predict,
    "chi": run_chi,
    "sweep": run_sweep,
    "solve-pc": run_solve_pc,
    "pi-exact": run_pi_exact,
    "pi-series": run_pi_series,
    "pi-mc": run_pi_mc,
    "identity-check": run_identity_check,
    "diagrams": run_diagrams,
    "derive-series": run_derive_series,
    "fit": run_fit,
}


def run_command(args) -> RunResult:
    """Dispatch ``args.command`` to its handler."""
    try:
        handler = HANDLERS[args.command]
    except KeyError:
        raise ValueError(f"Unknown subcommand: {args.command!r}") from None
    return handler(args)
