"""Exact enumeration oracle for cluster observables and lace coefficients.

Expectations are sums over bond configurations weighted by
p^k (1−p)^(B−k). In full mode every configuration is visited; in sparse
mode only configurations with at most ``max_order`` occupied bonds are, which
makes the coefficients through p^max_order exact on graphs far beyond full
enumeration.

The nested coefficients Π̂⁽ᴺ⁾ are computed level by level: the expectation
over level j is taken for each (entry vertex, C̃ set) the previous levels
can hand over, memoised on that pair and the remaining order budget.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

from lace_perc.errors import ResourceLimitError, TruncationError
from lace_perc.events import (
    BondConfig,
    cluster,
    cluster_without_bond,
    doubly_connected_set,
    e_prime_targets,
    has_long_path,
)
from lace_perc.graphs import GraphModel, four_cycles_through_origin
from lace_perc.polynomial import RationalPolynomial, as_fraction, bernoulli_weight

# Full enumeration visits 2^B configurations.
MAX_FULL_BONDS = 24
# Sparse enumeration cap on configurations per level expectation.
MAX_SPARSE_CONFIGS = 1 << 24
DEFAULT_MAX_ORDER = 8


def predicted_configs(bond_count: int, max_order: int | None) -> int:
    """Configurations one level expectation visits."""
    if max_order is None:
        return 1 << bond_count
    top = min(max(max_order, -1), bond_count)
    return sum(math.comb(bond_count, k) for k in range(top + 1))


def _check_budget(graph: GraphModel, max_order: int | None, levels: int = 1) -> None:
    bonds = graph.bond_count
    if max_order is None:
        if bonds * levels > MAX_FULL_BONDS:
            raise ResourceLimitError(
                f"full enumeration on {graph.label} needs 2^{bonds * levels} configurations "
                f"(cap 2^{MAX_FULL_BONDS}); pass max_order for a truncated series",
                predicted=1 << (bonds * levels),
            )
        return
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    predicted = predicted_configs(bonds, max_order)
    if predicted > MAX_SPARSE_CONFIGS:
        raise ResourceLimitError(
            f"order-{max_order} enumeration on {graph.label} visits {predicted} "
            f"configurations per level (cap {MAX_SPARSE_CONFIGS})",
            predicted=predicted,
        )


def iter_configs(graph: GraphModel, max_order: int | None = None):
    """Yield (occupied count, BondConfig), grouped by increasing count."""
    bonds = graph.bond_count
    top = bonds if max_order is None else min(max_order, bonds)
    for k in range(top + 1):
        for chosen in combinations(range(bonds), k):
            mask = 0
            for b in chosen:
                mask |= 1 << b
            yield k, BondConfig(graph, mask)


def _expectation(graph: GraphModel, observable, max_order: int | None, width: int = 1):
    """E_p of an integer-vector observable as ``width`` polynomials.

    Configurations are grouped by occupied count k; each group's integer
    totals are multiplied by one Bernoulli weight, so the sum is exact.
    """
    _check_budget(graph, max_order)
    bonds = graph.bond_count
    results = [RationalPolynomial() for _ in range(width)]
    current_k = None
    totals = [0] * width

    def flush(k):
        weight = bernoulli_weight(k, bonds, max_order)
        for i, t in enumerate(totals):
            if t:
                results[i] = results[i] + weight * t

    for k, config in iter_configs(graph, max_order):
        if k != current_k:
            if current_k is not None:
                flush(current_k)
            current_k = k
            totals = [0] * width
        values = observable(config)
        for i, value in enumerate(values):
            totals[i] += value
    if current_k is not None:
        flush(current_k)
    return results


# -- cluster observables ---------------------------------------------------


def chi_exact(graph: GraphModel, max_order: int | None = None) -> RationalPolynomial:
    """χ(p) = E_p|C(0)|."""
    return _expectation(graph, lambda c: (len(cluster(c, 0)),), max_order)[0]


def tau_exact(graph: GraphModel, x: int, max_order: int | None = None) -> RationalPolynomial:
    """τ_p(x) = P_p(0 ↔ x)."""
    graph.validate_vertex(x)
    return _expectation(graph, lambda c: (int(x in cluster(c, 0)),), max_order)[0]


def tau_all_exact(graph: GraphModel, max_order: int | None = None) -> list[RationalPolynomial]:
    """τ_p(x) for every vertex x, in vertex order."""
    size = graph.vertex_count

    def indicator(config):
        members = cluster(config, 0)
        return [int(x in members) for x in range(size)]

    return _expectation(graph, indicator, max_order, width=size)


def tau_min_length_exact(
    graph: GraphModel, x: int, length: int, max_order: int | None = None
) -> RationalPolynomial:
    """τ^(i)(x): an occupied self-avoiding path 0 → x of at least ``length`` bonds."""
    graph.validate_vertex(x)
    if length < 0:
        raise ValueError(f"Path length must be >= 0, got {length}")
    return _expectation(graph, lambda c: (int(has_long_path(c, 0, x, length)),), max_order)[0]


def pi0_exact(graph: GraphModel, max_order: int | None = None) -> RationalPolynomial:
    """Π̂⁽⁰⁾ = sum over x ≠ 0 of P(0 ⇔ x)."""
    return _expectation(graph, lambda c: (len(doubly_connected_set(c, 0)) - 1,), max_order)[0]


def pi0_cycle_split(
    graph: GraphModel, max_order: int | None = None
) -> tuple[RationalPolynomial, RationalPolynomial]:
    """Π̂⁽⁰⁾ split into (occupied 4-cycle through 0 and x, no such 4-cycle)."""
    cycles = [sum(1 << b for b in cyc) for cyc in four_cycles_through_origin(graph)]
    cycle_vertices = []
    for mask in cycles:
        verts = set()
        for b, (u, v, _) in enumerate(graph.bonds):
            if mask >> b & 1:
                verts.update((u, v))
        cycle_vertices.append(frozenset(verts))

    def split(config):
        short = long_ = 0
        occupied_cycles = [
            verts for mask, verts in zip(cycles, cycle_vertices) if config.occupied & mask == mask
        ]
        for x in doubly_connected_set(config, 0):
            if x == 0:
                continue
            if any(x in verts for verts in occupied_cycles):
                short += 1
            else:
                long_ += 1
        return short, long_

    short, long_ = _expectation(graph, split, max_order, width=2)
    return short, long_


def monotone_bracket(
    graph: GraphModel, observable, densities, max_count: int, ceilings, width: int = 1
) -> list[list[tuple[Fraction, Fraction]]]:
    """Rigorous bounds on E_p of nondecreasing observables beyond full enumeration.

    Configurations with at most ``max_count`` occupied bonds are summed
    exactly, once for all ``densities``. The unvisited tail is bounded above
    by ``ceilings[i]`` per configuration and below by the mean over the
    ``max_count`` level, since the level means of a nondecreasing observable
    never decrease with the occupied count.

    Returns:
        One ``(lower, upper)`` pair per observable component, per density.

    Raises:
        ValueError: A density outside [0, 1], negative max_count or a
            ceiling count that does not match ``width``.
        ResourceLimitError: More than MAX_SPARSE_CONFIGS configurations.
    """
    points = [as_fraction(p) for p in densities]
    for x in points:
        if not 0 <= x <= 1:
            raise ValueError(f"p must lie in [0, 1], got {x}")
    if max_count < 0:
        raise ValueError(f"max_count must be >= 0, got {max_count}")
    if len(ceilings) != width:
        raise ValueError(f"need {width} ceilings, got {len(ceilings)}")
    _check_budget(graph, max_count)
    bonds = graph.bond_count
    top = min(max_count, bonds)
    totals = [[0] * width for _ in range(top + 1)]
    for k, config in iter_configs(graph, top):
        row = totals[k]
        for i, value in enumerate(observable(config)):
            row[i] += value
    level = math.comb(bonds, top)
    out = []
    for x in points:
        head = [Fraction(0)] * width
        visited = Fraction(0)
        for k in range(top + 1):
            weight = x**k * (1 - x) ** (bonds - k)
            visited += math.comb(bonds, k) * weight
            for i in range(width):
                head[i] += totals[k][i] * weight
        tail = 1 - visited
        out.append(
            [
                (head[i] + Fraction(totals[top][i], level) * tail, head[i] + ceilings[i] * tail)
                for i in range(width)
            ]
        )
    return out


# -- nested coefficients ---------------------------------------------------


class _NestedEnumerator:
    """Exact E over N+1 independent levels of the nested Π̂⁽ᴺ⁾ count."""

    def __init__(self, graph: GraphModel, levels: int, max_order: int | None) -> None:
        self.graph = graph
        self.levels = levels
        # Occupied-bond budget of the expectation itself; the p^N prefactor
        # is applied afterwards.
        self.budget = None if max_order is None else max_order - (levels - 1)
        self._memo: dict = {}

    def run(self) -> RationalPolynomial:
        if self.budget is not None and self.budget < 0:
            return RationalPolynomial()
        return self._level(0, 0, frozenset(), self.budget)

    def _level(self, level: int, root: int, through: frozenset[int], budget: int | None):
        key = (level, root, through, budget)
        if key in self._memo:
            return self._memo[key]
        graph = self.graph
        bonds = graph.bond_count
        last = level == self.levels - 1
        result = RationalPolynomial()
        for k, config in iter_configs(graph, budget):
            if level == 0:
                targets = doubly_connected_set(config, 0)
            else:
                targets = e_prime_targets(config, root, through)
            if not targets:
                continue
            weight = bernoulli_weight(k, bonds, budget)
            if last:
                result = result + weight * len(targets)
                continue
            rest = None if budget is None else budget - k
            inner = RationalPolynomial()
            for u in targets:
                for w, b in graph.incidence[u]:
                    tilde = cluster_without_bond(config, b, root)
                    inner = inner + self._level(level + 1, w, tilde, rest)
            if not inner.is_zero():
                result = result + weight.mul_trunc(inner, budget)
        self._memo[key] = result
        return result


def _nested(graph: GraphModel, n: int, max_order: int | None) -> RationalPolynomial:
    if n < 0:
        raise ValueError(f"Expansion level N must be >= 0, got {n}")
    if n == 0:
        return pi0_exact(graph, max_order)
    _check_budget(graph, None if max_order is None else max(max_order - n, 0), levels=1)
    expectation = _NestedEnumerator(graph, n + 1, max_order).run()
    return expectation.shift(n).truncate(max_order)


def piN_exact(graph: GraphModel, n: int) -> RationalPolynomial:
    """Π̂⁽ᴺ⁾ as an exact polynomial by full nested enumeration.

    Raises:
        ResourceLimitError: If (bond count)·(N+1) exceeds the full-enumeration cap.
        ValueError: If N < 0.
    """
    if n < 0:
        raise ValueError(f"Expansion level N must be >= 0, got {n}")
    _check_budget(graph, None, levels=n + 1)
    return _nested(graph, n, None)


def piN_series(graph: GraphModel, n: int, max_order: int = DEFAULT_MAX_ORDER) -> RationalPolynomial:
    """Π̂⁽ᴺ⁾ exact through p^max_order."""
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    return _nested(graph, n, max_order)


def pi_hat_series(graph: GraphModel, max_order: int, n_max: int) -> RationalPolynomial:
    """Π̂ = sum over N <= n_max of (−1)^N Π̂⁽ᴺ⁾, through p^max_order."""
    total = RationalPolynomial()
    for n in range(n_max + 1):
        term = piN_series(graph, n, max_order)
        total = total + (term if n % 2 == 0 else -term)
    return total


def pi_order_profile(graph: GraphModel, n_max: int, max_order: int) -> list[int | None]:
    """Lowest nonzero p-order of Π̂⁽ᴺ⁾, N = 0..n_max (None when zero through max_order)."""
    return [piN_series(graph, n, max_order).lowest_order() for n in range(n_max + 1)]


def identity_residual_series(graph: GraphModel, max_order: int, n_max: int) -> RationalPolynomial:
    """χ(1 − Ωp(1+Π̂)) − (1+Π̂), truncated at p^max_order.

    Omitted terms Π̂⁽ᴺ⁾ with N > n_max start at order N+1 or later, so the
    truncation is certified when n_max >= max_order − 1. The order law is
    re-checked on the computed terms.

    Raises:
        TruncationError: If n_max does not certify max_order, or a computed
            Π̂⁽ᴺ⁾ starts below the expected order.
    """
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    if n_max < 0:
        raise ValueError(f"N_max must be >= 0, got {n_max}")
    if n_max < max_order - 1:
        raise TruncationError(
            f"N_max={n_max} certifies the identity only through p^{n_max + 1}; "
            f"max_order={max_order} needs N_max >= {max_order - 1}"
        )
    pi_hat = RationalPolynomial()
    for n in range(n_max + 1):
        term = piN_series(graph, n, max_order)
        lowest = term.lowest_order()
        if n >= 1 and lowest is not None and lowest < n + 1:
            raise TruncationError(
                f"Π̂⁽{n}⁾ on {graph.label} starts at p^{lowest}, below p^{n + 1}; "
                "the truncation guard does not apply"
            )
        pi_hat = pi_hat + (term if n % 2 == 0 else -term)
    chi = chi_exact(graph, max_order)
    one_plus = pi_hat + 1
    omega_p = RationalPolynomial.monomial(1, graph.omega)
    bracket = 1 - omega_p.mul_trunc(one_plus, max_order)
    return (chi.mul_trunc(bracket, max_order) - one_plus).truncate(max_order)


def recursion_residuals(graph: GraphModel, p, n_max: int) -> list[float]:
    """|Ωp + 1/χ(p) − 1/(1 + Π̂^{≤N}(p))| for N = 0..n_max, exact then rounded."""
    if n_max < 0:
        raise ValueError(f"N_max must be >= 0, got {n_max}")
    x = as_fraction(p)
    if not 0 <= x <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    chi = chi_exact(graph).evaluate(x)
    base = graph.omega * x + 1 / chi
    out = []
    partial = Fraction(0)
    for n in range(n_max + 1):
        value = piN_exact(graph, n).evaluate(x)
        partial += value if n % 2 == 0 else -value
        out.append(float(abs(base - 1 / (1 + partial))))
    return out


def recursion_residual(graph: GraphModel, p, n_max: int) -> float:
    """The last entry of :func:`recursion_residuals`."""
    return recursion_residuals(graph, p, n_max)[-1]
