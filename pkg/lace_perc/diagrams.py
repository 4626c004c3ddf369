"""Fourier-side quantities and diagram bounds.

On Q_n every Fourier sum depends on the mode k only through m(k), the
number of π components, so sums over 2^n modes become binomial sums over
m = 0..n. Modes are given as integer indices: k_j ∈ {0, 1} (0 or π) on Q_n,
k_j ∈ {0..m−1} (angle 2πk_j/m) on a torus.

Position-space diagrams (T_p and the bounds built on it) use the exact
two-point polynomials of the oracle, so they are limited to small graphs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from lace_perc.errors import ResourceLimitError
from lace_perc.graphs import HYPERCUBE, GraphModel, count_closed_walks
from lace_perc.oracle import piN_exact, tau_all_exact, tau_min_length_exact
from lace_perc.polynomial import RationalPolynomial, as_fraction

MAX_RETURN_STEPS = 16
MAX_MODE_DIMENSION = 64
DEFAULT_PROXY_CONSTANT = 2.0

METHOD_MODE_SUM = "exact-mode-sum"
METHOD_PROXY = "infrared-proxy"
METHOD_EXACT_TAU = "exact-tau"


class ModeWeight:
    """Modes of Q_n with m components equal to π."""

    __slots__ = ("m", "multiplicity", "gap")

    def __init__(self, m: int, multiplicity: int, gap: Fraction) -> None:
        self.m = m
        self.multiplicity = multiplicity
        self.gap = gap

    def __repr__(self) -> str:
        return f"ModeWeight(m={self.m}, multiplicity={self.multiplicity}, gap={self.gap})"


def mode_weights(n: int) -> list[ModeWeight]:
    """Multiplicity binom(n, m) and gap 1 − D̂ = 2m/n for m = 0..n."""
    if n < 1:
        raise ValueError(f"Dimension n must be >= 1, got {n}")
    return [ModeWeight(m, math.comb(n, m), Fraction(2 * m, n)) for m in range(n + 1)]


def _require_hypercube(graph: GraphModel, what: str) -> None:
    if graph.kind != HYPERCUBE:
        raise ValueError(f"{what} is implemented for hypercubes, got {graph.label}")


def hat_D(graph: GraphModel, k) -> Fraction | float:
    """D̂(k): exact 1 − 2m(k)/n on Q_n, n⁻¹ sum_j cos(2πk_j/m) on a torus."""
    k = tuple(k)
    if len(k) != graph.n:
        raise ValueError(f"Mode needs {graph.n} components, got {len(k)}")
    if graph.kind == HYPERCUBE:
        if any(c not in (0, 1) for c in k):
            raise ValueError(f"Hypercube modes have components in {{0, 1}}, got {k}")
        return 1 - Fraction(2 * sum(k), graph.n)
    if any(not 0 <= c < graph.m for c in k):
        raise ValueError(f"Torus modes have components in 0..{graph.m - 1}, got {k}")
    return sum(math.cos(2 * math.pi * c / graph.m) for c in k) / graph.n


def return_probability_exact(graph: GraphModel, steps: int) -> Fraction:
    """Probability that simple random walk is back at 0 after ``steps`` steps.

    Q_n uses the mode reduction 2^-n sum_m binom(n,m)(1 − 2m/n)^steps; tori
    count closed walks.
    """
    if steps < 0 or steps % 2:
        raise ValueError(f"steps must be even and >= 0, got {steps}")
    if steps > MAX_RETURN_STEPS:
        raise ResourceLimitError(
            f"return probabilities are supported up to {MAX_RETURN_STEPS} steps, got {steps}",
            predicted=steps,
        )
    if graph.kind == HYPERCUBE:
        if graph.n > MAX_MODE_DIMENSION:
            raise ResourceLimitError(
                f"mode reduction supports n <= {MAX_MODE_DIMENSION}", predicted=graph.n
            )
        total = sum(w.multiplicity * (1 - w.gap) ** steps for w in mode_weights(graph.n))
        return Fraction(total, 2**graph.n)
    return Fraction(count_closed_walks(graph, steps), graph.omega**steps)


def return_bound_check(graph: GraphModel, i: int) -> tuple[Fraction, Fraction, bool]:
    """Compare the 2i-step return probability with its walk-counting bound.

    A closed 2i-step walk moves in at most i coordinates. Choosing ℓ <= i of
    them (at most n^ℓ/ℓ! ways) and then each step among the d·ℓ directions
    they offer gives bound = sum_ℓ (n^ℓ/ℓ!)(d·i)^{2i} / Ω^{2i}, with d = 1 on
    Q_n and d = 2 on a torus.
    """
    if i < 1:
        raise ValueError(f"i must be >= 1, got {i}")
    value = return_probability_exact(graph, 2 * i)
    directions = 1 if graph.kind == HYPERCUBE else 2
    walks = sum(Fraction(graph.n**ell, math.factorial(ell)) for ell in range(1, i + 1))
    bound = walks * (directions * i) ** (2 * i) / Fraction(graph.omega ** (2 * i))
    return value, bound, value <= bound


def inverse_gap_sum(n: int, exponent: float) -> float:
    """2^-n sum_{m>=1} binom(n,m) (2m/n)^-exponent, the k ≠ 0 part of ∫ (1−D̂)^-exponent."""
    if n < 1:
        raise ValueError(f"Dimension n must be >= 1, got {n}")
    if exponent <= 0:
        raise ValueError(f"exponent must be > 0, got {exponent}")
    scale = 2**n
    return sum(math.comb(n, m) / scale * (2 * m / n) ** (-exponent) for m in range(1, n + 1))


def binomial_tail(n: int, eps: float, exact: bool = False) -> float | Fraction:
    """P(X <= eps·n) for X ~ Binomial(n, 1/2), summed exactly."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    top = math.floor(eps * n)
    value = Fraction(sum(math.comb(n, m) for m in range(top + 1)), 2**n)
    return value if exact else float(value)


def tpij_proxy(
    graph: GraphModel,
    p: float,
    i: int,
    j: int,
    chi_value: float | None = None,
    c: float = DEFAULT_PROXY_CONSTANT,
    refinement: float = 1.0,
) -> float:
    """Upper-bound proxy for T_p^(i,j) on Q_n.

    The k = 0 mode contributes 2^-n χ^j exactly; elsewhere τ̂ is replaced by
    c·refinement/(1 − D̂). ``p`` only labels the entry; the proxy depends on
    p through ``chi_value``.
    """
    _require_hypercube(graph, "tpij_proxy")
    if graph.n > MAX_MODE_DIMENSION:
        raise ResourceLimitError(f"mode reduction supports n <= {MAX_MODE_DIMENSION}", predicted=graph.n)
    if i < 0 or j < 0:
        raise ValueError(f"i and j must be >= 0, got ({i}, {j})")
    if j > 0 and chi_value is None:
        raise ValueError("tpij_proxy needs chi_value when j > 0")
    if c < 1:
        raise ValueError(f"proxy constant c must be >= 1, got {c}")
    n = graph.n
    scale = 2**n
    zero_mode = (chi_value**j if j else 1.0) / scale
    rest = 0.0
    for w in mode_weights(n)[1:]:
        d_hat = abs(1.0 - float(w.gap))
        rest += w.multiplicity / scale * d_hat**i * (c * refinement / float(w.gap)) ** j
    return zero_mode + rest


def tpij_mode_sum(graph: GraphModel, i: int) -> Fraction:
    """T^(i,0) = ∫ |D̂|^i exactly by the mode reduction."""
    _require_hypercube(graph, "tpij_mode_sum")
    if i < 0:
        raise ValueError(f"i must be >= 0, got {i}")
    total = sum(w.multiplicity * abs(1 - w.gap) ** i for w in mode_weights(graph.n))
    return Fraction(total, 2**graph.n)


# -- exact two-point diagrams ------------------------------------------------


@lru_cache(maxsize=16)
def _tau_polynomials(graph: GraphModel) -> tuple[RationalPolynomial, ...]:
    return tuple(tau_all_exact(graph))


@lru_cache(maxsize=16)
def _difference_table(graph: GraphModel) -> tuple[tuple[int, ...], ...]:
    size = graph.vertex_count
    return tuple(tuple(graph.subtract(x, y) for y in range(size)) for x in range(size))


def tau_values(graph: GraphModel, p) -> list[Fraction]:
    """Exact τ_p(x) for every x."""
    x = as_fraction(p)
    return [poly.evaluate(x) for poly in _tau_polynomials(graph)]


def step_distribution(graph: GraphModel) -> list[Fraction]:
    """D(x) = 1/Ω on the neighbours of 0."""
    out = [Fraction(0)] * graph.vertex_count
    for v in graph.neighbors(0):
        out[v] = Fraction(1, graph.omega)
    return out


def convolve(graph: GraphModel, f, g) -> list[Fraction]:
    """(f ∗ g)(x) = sum_y f(y) g(x − y)."""
    table = _difference_table(graph)
    size = graph.vertex_count
    return [sum(f[y] * g[table[x][y]] for y in range(size) if f[y]) for x in range(size)]


def convolve_power(graph: GraphModel, f, power: int) -> list[Fraction]:
    out = [Fraction(0)] * graph.vertex_count
    out[0] = Fraction(1)
    for _ in range(power):
        out = convolve(graph, out, f)
    return out


def tau_hat(graph: GraphModel, p) -> list[Fraction]:
    """τ̂_p(k) for every hypercube mode k (mode index = bitmask of π components)."""
    _require_hypercube(graph, "tau_hat")
    tau = tau_values(graph, p)
    size = graph.vertex_count
    return [
        sum(t if (k & x).bit_count() % 2 == 0 else -t for x, t in enumerate(tau)) for k in range(size)
    ]


def fourier_positivity_check(graph: GraphModel, p) -> tuple[Fraction, bool]:
    """Smallest τ̂_p(k) over all modes, and whether it is >= 0."""
    lowest = min(tau_hat(graph, p))
    return lowest, lowest >= 0


def bk_bound_check(graph: GraphModel, p) -> list[tuple[int, Fraction, Fraction, bool]]:
    """τ_p(x) <= pΩ(D ∗ τ_p)(x) for every x ≠ 0, as (x, lhs, rhs, holds)."""
    x_p = as_fraction(p)
    tau = tau_values(graph, x_p)
    rhs = convolve(graph, step_distribution(graph), tau)
    out = []
    for x in range(1, graph.vertex_count):
        bound = x_p * graph.omega * rhs[x]
        out.append((x, tau[x], bound, tau[x] <= bound))
    return out


def tpij_exact_tau(graph: GraphModel, p, i: int, j: int) -> Fraction:
    """T_p^(i,j) = 2^-n sum_k |D̂(k)|^i τ̂_p(k)^j from exact τ."""
    _require_hypercube(graph, "tpij_exact_tau")
    if i < 0 or j < 0:
        raise ValueError(f"i and j must be >= 0, got ({i}, {j})")
    hats = tau_hat(graph, p)
    n = graph.n
    total = Fraction(0)
    for k, value in enumerate(hats):
        d_hat = abs(1 - Fraction(2 * k.bit_count(), n))
        total += d_hat**i * value**j
    return total / graph.vertex_count


def tp_exact(graph: GraphModel, p) -> Fraction:
    """T_p = sup_x pΩ(D ∗ τ_p^{*3})(x), exactly."""
    x_p = as_fraction(p)
    tau = tau_values(graph, x_p)
    cube = convolve_power(graph, tau, 3)
    smeared = convolve(graph, step_distribution(graph), cube)
    return x_p * graph.omega * max(smeared)


def tp_from_exact_tau(graph: GraphModel, p) -> float:
    return float(tp_exact(graph, p))


def tau_length_bound_check(graph: GraphModel, p, i: int, x: int) -> tuple[Fraction, Fraction, bool]:
    """τ^(i)(x) <= (pΩ)^i (D^{*i} ∗ τ_p)(x)."""
    graph.validate_vertex(x)
    x_p = as_fraction(p)
    lhs = tau_min_length_exact(graph, x, i).evaluate(x_p)
    smeared = convolve(graph, convolve_power(graph, step_distribution(graph), i), tau_values(graph, x_p))
    rhs = (x_p * graph.omega) ** i * smeared[x]
    return lhs, rhs, lhs <= rhs


def tp_split_bound_check(graph: GraphModel, p) -> list[tuple[int, Fraction, Fraction, bool]]:
    """pΩ(D ∗ τ^{*3})(x) <= pΩD(x) + 3(pΩ)²(D^{*2} ∗ τ^{*3})(x) for every x."""
    x_p = as_fraction(p)
    big = x_p * graph.omega
    step = step_distribution(graph)
    cube = convolve_power(graph, tau_values(graph, x_p), 3)
    lhs = convolve(graph, step, cube)
    rhs = convolve(graph, convolve(graph, step, step), cube)
    out = []
    for x in range(graph.vertex_count):
        left = big * lhs[x]
        right = big * step[x] + 3 * big**2 * rhs[x]
        out.append((x, left, right, left <= right))
    return out


def pi2_diagram_bound_check(graph: GraphModel, p) -> tuple[Fraction, Fraction, bool]:
    """0 <= Π̂⁽²⁾ <= 2 T^(0,3) (T_p T^(0,3))², from exact polynomials."""
    x_p = as_fraction(p)
    value = piN_exact(graph, 2).evaluate(x_p)
    bubble = convolve_power(graph, tau_values(graph, x_p), 3)[0]  # T^(0,3) = τ^{*3}(0)
    bound = 2 * bubble * (tp_exact(graph, x_p) * bubble) ** 2
    return value, bound, 0 <= value <= bound


# -- tables ------------------------------------------------------------------


class DiagramEntry:
    __slots__ = ("i", "j", "p", "value", "scaled_value", "method")

    def __init__(self, i, j, p, value, scaled_value, method) -> None:
        self.i = i
        self.j = j
        self.p = p
        self.value = value
        self.scaled_value = scaled_value
        self.method = method

    def __repr__(self) -> str:
        return f"DiagramEntry(i={self.i}, j={self.j}, p={self.p}, {self.method}={float(self.value):.6g})"


class DiagramTable:
    """T_p^(i,j) values with the method that produced each one."""

    __slots__ = ("graph", "entries")

    def __init__(self, graph: GraphModel, entries: list[DiagramEntry] | None = None) -> None:
        self.graph = graph
        self.entries = entries or []

    @property
    def omega(self) -> int:
        return self.graph.omega

    def add(self, entry: DiagramEntry) -> None:
        if float(entry.value) < 0:
            raise ValueError(f"diagram values are non-negative, got {entry.value}")
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _exact_tau_feasible(graph: GraphModel) -> bool:
    return graph.kind == HYPERCUBE and graph.bond_count <= 24


def diagram_table(
    graph: GraphModel,
    p_grid,
    pairs,
    chi_value: float | None = None,
    c: float = DEFAULT_PROXY_CONSTANT,
    refinement: float = 1.0,
) -> DiagramTable:
    """T_p^(i,j) over a grid: mode sum for j = 0, exact τ on small hypercubes,
    the infrared proxy otherwise. ``scaled_value`` is Ω^{i/2}·value."""
    _require_hypercube(graph, "diagram_table")
    table = DiagramTable(graph)
    for p in p_grid:
        for i, j in pairs:
            if j == 0:
                value, method = tpij_mode_sum(graph, i), METHOD_MODE_SUM
            elif _exact_tau_feasible(graph):
                value, method = tpij_exact_tau(graph, p, i, j), METHOD_EXACT_TAU
            else:
                value = tpij_proxy(graph, p, i, j, chi_value, c, refinement)
                method = METHOD_PROXY
            scaled = float(value) * graph.omega ** (i / 2)
            table.add(DiagramEntry(i, j, p, value, scaled, method))
    return table
