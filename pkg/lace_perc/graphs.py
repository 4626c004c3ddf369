"""Finite transitive graphs: hypercubes Q_n and tori (Z_m)^n.

Vertices are packed integers. On Q_n bit j of the id is coordinate j; on a
torus the id is the mixed-radix number sum_j c_j m^j. Bonds have a dense
canonical index (used by BondConfig bitsets) and a sparse key
``owner * n + direction`` (used to hash per-bond uniforms).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from lace_perc.errors import ResourceLimitError, WrapCycleWarning

HYPERCUBE = "hypercube"
TORUS = "torus"
NAMED = "named"

# Q1-Q4 are aliases of the hypercube constructor.
NAMED_GRAPHS = {"q1": 1, "q2": 2, "q3": 3, "q4": 4}

MIN_TORUS_SIDE = 3
MAX_TRANSFER_STATES = 1 << 22


@dataclass(frozen=True)
class GraphModel:
    """Immutable descriptor of Q_n or the torus (Z_m)^n."""

    kind: str
    n: int
    m: int | None = None
    name: str = ""

    @property
    def omega(self) -> int:
        """Degree Ω."""
        return self.n if self.kind == HYPERCUBE else 2 * self.n

    @property
    def omega_prime(self) -> int:
        """Sub-degree Ω′: n−1 on Q_n, 2n−2 on a torus."""
        return self.n - 1 if self.kind == HYPERCUBE else 2 * self.n - 2

    @property
    def vertex_count(self) -> int:
        if self.kind == HYPERCUBE:
            return 1 << self.n
        return self.m**self.n

    @property
    def bond_count(self) -> int:
        return self.vertex_count * self.omega // 2

    @property
    def is_bipartite(self) -> bool:
        return self.kind == HYPERCUBE or self.m % 2 == 0

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == HYPERCUBE:
            return f"hypercube:{self.n}"
        return f"torus:{self.n}:{self.m}"

    @cached_property
    def strides(self) -> tuple[int, ...]:
        if self.kind == HYPERCUBE:
            return tuple(1 << j for j in range(self.n))
        return tuple(self.m**j for j in range(self.n))

    def validate_vertex(self, v: int) -> None:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.vertex_count:
            raise ValueError(f"Invalid vertex id {v!r} for {self.label}")

    def coordinates(self, v: int) -> tuple[int, ...]:
        self.validate_vertex(v)
        if self.kind == HYPERCUBE:
            return tuple((v >> j) & 1 for j in range(self.n))
        return tuple((v // s) % self.m for s in self.strides)

    def vertex(self, coords) -> int:
        coords = tuple(coords)
        if len(coords) != self.n:
            raise ValueError(f"Expected {self.n} coordinates, got {len(coords)}")
        side = 2 if self.kind == HYPERCUBE else self.m
        return sum((c % side) * s for c, s in zip(coords, self.strides))

    def step(self, v: int, j: int, sign: int) -> int:
        """Neighbour of v along direction j (sign ±1; ignored on Q_n)."""
        if self.kind == HYPERCUBE:
            return v ^ (1 << j)
        stride = self.strides[j]
        digit = (v // stride) % self.m
        if sign > 0:
            return v - (self.m - 1) * stride if digit == self.m - 1 else v + stride
        return v + (self.m - 1) * stride if digit == 0 else v - stride

    def neighbors(self, v: int) -> list[int]:
        """The Ω neighbours of v, by coordinate index then direction (+, −)."""
        self.validate_vertex(v)
        if self.kind == HYPERCUBE:
            return [v ^ (1 << j) for j in range(self.n)]
        out = []
        for j in range(self.n):
            out.append(self.step(v, j, +1))
            out.append(self.step(v, j, -1))
        return out

    def add(self, x: int, y: int) -> int:
        if self.kind == HYPERCUBE:
            return x ^ y
        cx, cy = self.coordinates(x), self.coordinates(y)
        return self.vertex(a + b for a, b in zip(cx, cy))

    def subtract(self, x: int, y: int) -> int:
        """Group difference x − y (XOR on Q_n)."""
        if self.kind == HYPERCUBE:
            return x ^ y
        cx, cy = self.coordinates(x), self.coordinates(y)
        return self.vertex(a - b for a, b in zip(cx, cy))

    # -- bond indexing -------------------------------------------------

    @cached_property
    def bonds(self) -> tuple[tuple[int, int, int], ...]:
        """Dense bond list of (owner, other, direction)."""
        out = []
        for v in range(self.vertex_count):
            for j in range(self.n):
                if self.kind == HYPERCUBE:
                    if v & (1 << j):
                        continue
                    out.append((v, v ^ (1 << j), j))
                else:
                    out.append((v, self.step(v, j, +1), j))
        return tuple(out)

    @cached_property
    def bond_index(self) -> dict[tuple[int, int], int]:
        index = {}
        for b, (u, v, _) in enumerate(self.bonds):
            index[(u, v)] = b
            index[(v, u)] = b
        return index

    @cached_property
    def bond_keys(self) -> np.ndarray:
        """Sparse hash keys ``owner * n + direction`` in dense order."""
        return np.array([u * self.n + j for u, _, j in self.bonds], dtype=np.int64)

    @cached_property
    def incidence(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per vertex, the (neighbour, dense bond index) pairs."""
        table: list[list[tuple[int, int]]] = [[] for _ in range(self.vertex_count)]
        for b, (u, v, _) in enumerate(self.bonds):
            table[u].append((v, b))
            table[v].append((u, b))
        return tuple(tuple(row) for row in table)

    @cached_property
    def incident_masks(self) -> tuple[int, ...]:
        """Per vertex, a bitmask of the bonds touching it."""
        return tuple(sum(1 << b for _, b in row) for row in self.incidence)

    def bond_between(self, u: int, v: int) -> int:
        try:
            return self.bond_index[(u, v)]
        except KeyError:
            raise ValueError(f"Vertices {u} and {v} are not adjacent") from None

    def directed_bonds(self) -> list[tuple[int, int]]:
        out = []
        for u, v, _ in self.bonds:
            out.append((u, v))
            out.append((v, u))
        return out

    def __repr__(self) -> str:
        return (
            f"GraphModel({self.label}, Ω={self.omega}, Ω′={self.omega_prime}, "
            f"vertices={self.vertex_count})"
        )


def build_graph(kind: str, n: int | None = None, m: int | None = None) -> GraphModel:
    """Build and validate a GraphModel.

    Args:
        kind: ``hypercube``, ``torus``, ``named`` (with n in 1..4), or one of
            the aliases ``q1``..``q4``.
        n: Dimension.
        m: Torus side length (torus only).

    Raises:
        ValueError: For n < 1, a torus side below 3, or an unknown kind.
    """
    key = kind.lower()
    if key in NAMED_GRAPHS:
        n = NAMED_GRAPHS[key]
        return GraphModel(HYPERCUBE, n, None, f"Q{n}")
    if key == NAMED:
        if n not in NAMED_GRAPHS.values():
            raise ValueError(f"Named graphs are Q1..Q4, got n={n!r}")
        return GraphModel(HYPERCUBE, n, None, f"Q{n}")
    if n is None or n < 1:
        raise ValueError(f"Dimension n must be >= 1, got {n!r}")
    if key == HYPERCUBE:
        return GraphModel(HYPERCUBE, n)
    if key == TORUS:
        if m is None or m < MIN_TORUS_SIDE:
            raise ValueError(
                f"Torus side m must be >= {MIN_TORUS_SIDE}, got {m!r} "
                "(m=2 makes parallel bonds ambiguous)"
            )
        return GraphModel(TORUS, n, m)
    raise ValueError(f"Unknown graph kind: {kind!r}")


def four_cycles_through_origin(graph: GraphModel) -> list[frozenset[int]]:
    """The 4-cycles containing the origin, each as a set of dense bond indices."""
    if graph.kind == TORUS:
        if graph.m < 4:
            raise ValueError("4-cycle enumeration needs torus side m >= 4 (m >= 5 preferred)")
        if graph.m == 4:
            warnings.warn(
                "torus side m=4 admits wrap-around 4-cycles; counts differ from Z^n",
                WrapCycleWarning,
                stacklevel=2,
            )
    cycles = set()
    for _, a, b, c in _closed_four_walks(graph):
        cycles.add(
            frozenset(
                (
                    graph.bond_between(0, a),
                    graph.bond_between(a, b),
                    graph.bond_between(b, c),
                    graph.bond_between(c, 0),
                )
            )
        )
    return sorted(cycles, key=sorted)


def _closed_four_walks(graph: GraphModel):
    for a in graph.neighbors(0):
        for b in graph.neighbors(a):
            if b == 0:
                continue
            for c in graph.neighbors(b):
                if c in (0, a):
                    continue
                if 0 in graph.neighbors(c):
                    yield 0, a, b, c


def count_4cycles_through_origin(graph: GraphModel) -> int:
    """Closed self-avoiding 4-step walks from the origin, halved.

    Equals ΩΩ′/2 on Q_n and on tori with m >= 5.
    """
    four_cycles_through_origin(graph)  # validates the side length and warns
    walks = sum(1 for _ in _closed_four_walks(graph))
    return walks // 2


def _factor_walks(graph: GraphModel, length: int) -> list[int]:
    """Closed walks on one coordinate factor (K_2 or the cycle C_m)."""
    out = []
    for ell in range(length + 1):
        if graph.kind == HYPERCUBE:
            out.append(1 if ell % 2 == 0 else 0)
        else:
            out.append(
                sum(math.comb(ell, k) for k in range(ell + 1) if (2 * k - ell) % graph.m == 0)
            )
    return out


def _coordinate_walks(graph: GraphModel, length: int) -> int:
    # Binomial convolution over coordinates: c_j(L) = sum_a C(L,a) w(a) c_{j-1}(L-a).
    w = _factor_walks(graph, length)
    counts = [1] + [0] * length
    for _ in range(graph.n):
        counts = [
            sum(math.comb(ell, a) * w[a] * counts[ell - a] for a in range(ell + 1))
            for ell in range(length + 1)
        ]
    return counts[length]


def _neighbor_table(graph: GraphModel) -> np.ndarray:
    idx = np.arange(graph.vertex_count, dtype=np.int64)
    columns = []
    for j in range(graph.n):
        if graph.kind == HYPERCUBE:
            columns.append(idx ^ (1 << j))
        else:
            stride = graph.strides[j]
            digit = (idx // stride) % graph.m
            plus = np.where(digit == graph.m - 1, idx - (graph.m - 1) * stride, idx + stride)
            minus = np.where(digit == 0, idx + (graph.m - 1) * stride, idx - stride)
            columns.extend((plus, minus))
    return np.stack(columns, axis=1)


def _transfer_walks(graph: GraphModel, length: int, max_states: int) -> int:
    if graph.vertex_count > max_states:
        raise ResourceLimitError(
            f"transfer count on {graph.label} needs {graph.vertex_count} states "
            f"(cap {max_states})",
            predicted=graph.vertex_count,
        )
    dtype = np.int64 if graph.omega**length < 2**62 else object
    table = _neighbor_table(graph)
    vec = np.zeros(graph.vertex_count, dtype=dtype)
    vec[0] = 1
    for _ in range(length):
        vec = vec[table].sum(axis=1)
    return int(vec[0])


def count_closed_walks(
    graph: GraphModel,
    length: int,
    method: str = "coordinate",
    max_states: int = MAX_TRANSFER_STATES,
) -> int:
    """Number of nearest-neighbour walks of the given length from 0 back to 0.

    Args:
        method: ``coordinate`` (reduction over how the steps split among
            coordinates; works for any n) or ``transfer`` (dynamic programming
            over the vertex occupation vector).
        max_states: State-space cap for the transfer method.

    Raises:
        ValueError: Negative length or unknown method.
        ResourceLimitError: Transfer state space above ``max_states``.
    """
    if length < 0:
        raise ValueError(f"Walk length must be >= 0, got {length}")
    if method not in ("coordinate", "transfer"):
        raise ValueError(f"Unknown walk-count method: {method!r}")
    if length % 2 and graph.is_bipartite:
        return 0
    if method == "coordinate":
        return _coordinate_walks(graph, length)
    return _transfer_walks(graph, length, max_states)
