"""Percolation events on explicit bond configurations.

Every routine here is a pure function of a :class:`BondConfig` and its
arguments. Vertex sets are frozensets of packed vertex ids; bonds are dense
indices into ``GraphModel.bonds``.
"""

from __future__ import annotations

from collections import deque

from lace_perc.graphs import GraphModel


class BondConfig:
    """Occupied/vacant assignment to every bond, stored as an int bitset."""

    __slots__ = ("graph", "occupied")

    def __init__(self, graph: GraphModel, occupied: int = 0) -> None:
        if occupied < 0 or occupied >> graph.bond_count:
            raise ValueError(
                f"Bitset {occupied:#x} does not fit {graph.bond_count} bonds of {graph.label}"
            )
        self.graph = graph
        self.occupied = occupied

    @classmethod
    def from_bonds(cls, graph: GraphModel, bonds) -> BondConfig:
        mask = 0
        for b in bonds:
            mask |= 1 << b
        return cls(graph, mask)

    @classmethod
    def full(cls, graph: GraphModel) -> BondConfig:
        return cls(graph, (1 << graph.bond_count) - 1)

    def is_occupied(self, b: int) -> bool:
        return bool(self.occupied >> b & 1)

    def with_bond(self, b: int, occupied: bool) -> BondConfig:
        if occupied:
            return BondConfig(self.graph, self.occupied | (1 << b))
        return BondConfig(self.graph, self.occupied & ~(1 << b))

    @property
    def occupied_count(self) -> int:
        return self.occupied.bit_count()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BondConfig)
            and self.graph == other.graph
            and self.occupied == other.occupied
        )

    def __hash__(self) -> int:
        return hash((self.graph, self.occupied))

    def __repr__(self) -> str:
        return f"BondConfig({self.graph.label}, occupied={self.occupied_count})"


def _removed_mask(graph: GraphModel, vertices) -> int:
    mask = 0
    for a in vertices:
        mask |= graph.incident_masks[a]
    return mask


def cluster(config: BondConfig, x: int, removed: int = 0) -> frozenset[int]:
    """C(x) in the occupied subgraph with the bonds in ``removed`` made vacant."""
    live = config.occupied & ~removed
    incidence = config.graph.incidence
    seen = {x}
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w, b in incidence[v]:
            if w not in seen and live >> b & 1:
                seen.add(w)
                queue.append(w)
    return frozenset(seen)


def is_connected(config: BondConfig, x: int, y: int) -> bool:
    return x == y or y in cluster(config, x)


def cluster_without_bond(config: BondConfig, b: int, x: int) -> frozenset[int]:
    """C̃^b(x): the cluster of x with bond b forced vacant."""
    return cluster(config, x, removed=1 << b)


def bridges(config: BondConfig, x: int) -> list[tuple[int, int, int]]:
    """Occupied bridges of x's cluster as (near, far, bond), near on x's side."""
    members = cluster(config, x)
    out = []
    seen_bonds = set()
    for v in members:
        for w, b in config.graph.incidence[v]:
            if b in seen_bonds or not config.is_occupied(b):
                continue
            seen_bonds.add(b)
            side = cluster_without_bond(config, b, x)
            if (v in side) != (w in side):
                near, far = (v, w) if v in side else (w, v)
                out.append((near, far, b))
    return out


def double_connected(config: BondConfig, x: int, y: int) -> bool:
    """x ⇔ y: equal, or joined by two bond-disjoint occupied paths."""
    if x == y:
        return True
    if not is_connected(config, x, y):
        return False
    return all(y in cluster_without_bond(config, b, x) for _, _, b in bridges(config, x))


def doubly_connected_set(config: BondConfig, x: int) -> frozenset[int]:
    """All y with x ⇔ y (x included)."""
    members = cluster(config, x)
    for _, _, b in bridges(config, x):
        members = members & cluster_without_bond(config, b, x)
    return members


def connected_through(config: BondConfig, x: int, y: int, through) -> bool:
    """x and y connected, and every occupied x–y path touches the set ``through``.

    For x = y the event holds exactly when x lies in the set.
    """
    if x == y:
        return x in through
    if not is_connected(config, x, y):
        return False
    removed = _removed_mask(config.graph, through)
    return y not in cluster(config, x, removed=removed)


def is_pivotal(config: BondConfig, bond: tuple[int, int], x: int, y: int) -> bool:
    """Directed bond (u, v) pivotal for x ↔ y.

    With the bond occupied x ↔ y holds; with it vacant x ↔ y fails while
    x ↔ u and v ↔ y both hold.
    """
    u, v = bond
    b = config.graph.bond_between(u, v)
    on = config.with_bond(b, True)
    if not is_connected(on, x, y):
        return False
    off = config.with_bond(b, False)
    reach = cluster(off, x)
    return y not in reach and u in reach and y in cluster(off, v)


def e_prime_holds(config: BondConfig, v: int, x: int, through) -> bool:
    """E′(v, x; A), evaluated literally.

    v is connected to x through A, and no directed bond pivotal for v ↔ x
    has its first endpoint connected to v through A.
    """
    if not connected_through(config, v, x, through):
        return False
    for u_p, v_p in config.graph.directed_bonds():
        if is_pivotal(config, (u_p, v_p), v, x) and connected_through(config, v, u_p, through):
            return False
    return True


def e_prime_targets(config: BondConfig, v: int, through) -> frozenset[int]:
    """All x with E′(v, x; A), from one cluster and its bridges.

    Pivotal bonds for v ↔ x are the occupied bridges separating v from x,
    directed away from v, so x fails the no-pivotal condition exactly when
    such a bridge starts at a vertex connected to v through A.
    """
    through = frozenset(through)
    members = cluster(config, v)
    removed = _removed_mask(config.graph, through)
    reach_avoiding = cluster(config, v, removed=removed)
    targets = {x for x in members if x != v and x not in reach_avoiding}
    if v in through:
        targets.add(v)
    for near, _, b in bridges(config, v):
        if near == v:
            if v not in through:
                continue
        elif near in reach_avoiding:
            continue
        targets -= members - cluster_without_bond(config, b, v)
    return frozenset(targets)


def has_long_path(config: BondConfig, x: int, y: int, length: int) -> bool:
    """An occupied self-avoiding path from x to y with at least ``length`` bonds."""
    if x == y:
        return length <= 0
    incidence = config.graph.incidence
    occupied = config.occupied
    on_path = {x}
    stack = [(x, iter(incidence[x]))]
    while stack:
        v, it = stack[-1]
        advanced = False
        for w, b in it:
            if w in on_path or not occupied >> b & 1:
                continue
            if w == y:
                if len(stack) >= length:
                    return True
                continue
            on_path.add(w)
            stack.append((w, iter(incidence[w])))
            advanced = True
            break
        if not advanced:
            stack.pop()
            on_path.discard(v)
    return False


class LevelStack:
    """Level configurations 0..N of one nested lace-expansion term.

    ``count()`` returns sum over the designated directed bonds (u_j, v_j) and
    the endpoint x of the product of level indicators: 0 ⇔ u_0 at level 0,
    then E′(v_{j-1}, u_j; C̃_{j-1}) at level j, with
    C̃_j = C̃^{(u_j, v_j)}_j(v_{j-1}) and v_{-1} = 0. For a single level it
    counts the x ≠ 0 with 0 ⇔ x.
    """

    __slots__ = ("graph", "configs", "_tilde", "_targets")

    def __init__(self, configs: list[BondConfig]) -> None:
        if not configs:
            raise ValueError("LevelStack needs at least one level")
        self.graph = configs[0].graph
        self.configs = list(configs)
        self._tilde: dict[tuple[int, int, int], frozenset[int]] = {}
        self._targets: dict[tuple[int, int, frozenset[int]], frozenset[int]] = {}

    @property
    def depth(self) -> int:
        return len(self.configs) - 1

    def tilde(self, level: int, bond: int, root: int) -> frozenset[int]:
        key = (level, bond, root)
        if key not in self._tilde:
            self._tilde[key] = cluster_without_bond(self.configs[level], bond, root)
        return self._tilde[key]

    def targets(self, level: int, root: int, through: frozenset[int]) -> frozenset[int]:
        if level == 0:
            return doubly_connected_set(self.configs[0], 0)
        key = (level, root, through)
        if key not in self._targets:
            self._targets[key] = e_prime_targets(self.configs[level], root, through)
        return self._targets[key]

    def count(self) -> int:
        if self.depth == 0:
            return len(doubly_connected_set(self.configs[0], 0)) - 1
        return self._count(0, 0, frozenset())

    def _count(self, level: int, root: int, through: frozenset[int]) -> int:
        targets = self.targets(level, root, through)
        if level == self.depth:
            return len(targets)
        total = 0
        for u in targets:
            for w, b in self.graph.incidence[u]:
                total += self._count(level + 1, w, self.tilde(level, b, root))
        return total
