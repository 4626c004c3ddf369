"""Monte Carlo estimation of cluster observables.

Clusters are grown lazily from the origin by breadth-first search; a bond is
looked at only when its far endpoint is not yet in the cluster, and its state
comes from the counter-based hash in :mod:`lace_perc.rng`. Graph structure
is computed on the fly from the packed vertex id, so only a visited-stamp
array and a queue are stored.

Samples are split into ``stream_count`` contiguous streams. Streams run on a
thread pool (the kernels release the GIL) and their integer partial sums are
merged in stream order, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numba as nb
import numpy as np
from scipy.stats import norm

from lace_perc.errors import ResourceLimitError, TruncatedSampleWarning
from lace_perc.events import BondConfig, LevelStack, cluster
from lace_perc.graphs import HYPERCUBE, GraphModel
from lace_perc.rng import bond_uniform, uniform_array

DEFAULT_STREAMS = 16
DEFAULT_CLUSTER_CAP = 10**7
DEFAULT_TARGET = 200.0
DEFAULT_CONFIDENCE = 0.99
DEFAULT_TOLERANCE = 0.02
DEFAULT_BUDGET = 10**7
INITIAL_BISECTION_SAMPLES = 200
MAX_BISECTION_STEPS = 60
MAX_DENSE_VERTICES = 1 << 24
# Level configurations of one nested sample use sample ids i * LEVEL_SLOTS + j.
LEVEL_SLOTS = 4
MAX_MC_LEVEL = 2


class Estimate:
    """Sample mean with standard error and seed provenance.

    A single sample has no variance estimate: ``stderr`` is ``math.inf`` then,
    written as ``inf`` in CSV and JSON, and any interval built from it is the
    whole real line.
    """

    __slots__ = (
        "mean",
        "stderr",
        "samples",
        "seed",
        "stream_count",
        "total",
        "total_sq",
        "truncated",
        "examined",
    )

    def __init__(
        self,
        mean: float,
        stderr: float,
        samples: int,
        seed: int,
        stream_count: int,
        total: int = 0,
        total_sq: int = 0,
        truncated: int = 0,
        examined: int = 0,
    ) -> None:
        self.mean = mean
        self.stderr = stderr
        self.samples = samples
        self.seed = seed
        self.stream_count = stream_count
        self.total = total
        self.total_sq = total_sq
        self.truncated = truncated
        self.examined = examined

    @classmethod
    def from_sums(
        cls,
        total: int,
        total_sq: int,
        samples: int,
        seed: int,
        stream_count: int,
        truncated: int = 0,
        examined: int = 0,
        scale: float = 1.0,
    ) -> Estimate:
        """Build from exact integer sums of a per-sample value and its square."""
        mean = total / samples
        if samples > 1:
            numerator = samples * total_sq - total * total
            variance = max(numerator, 0) / (samples * (samples - 1))
            stderr = math.sqrt(variance / samples)
        else:
            stderr = math.inf
        return cls(
            mean * scale,
            stderr * scale,
            samples,
            seed,
            stream_count,
            total,
            total_sq,
            truncated,
            examined,
        )

    def interval(self, z: float) -> tuple[float, float]:
        return self.mean - z * self.stderr, self.mean + z * self.stderr

    def __repr__(self) -> str:
        return (
            f"Estimate(mean={self.mean:.6g}, stderr={self.stderr:.3g}, "
            f"samples={self.samples}, seed={self.seed})"
        )


class ClusterSample:
    """One realisation of C(0)."""

    __slots__ = ("size", "vertices", "examined", "truncated", "seed", "stream", "sample")

    def __init__(self, size, vertices, examined, truncated, seed, stream, sample) -> None:
        self.size = size
        self.vertices = vertices
        self.examined = examined
        self.truncated = truncated
        self.seed = seed
        self.stream = stream
        self.sample = sample

    def __repr__(self) -> str:
        flag = ", truncated" if self.truncated else ""
        return f"ClusterSample(size={self.size}, examined={self.examined}{flag})"


class PseudoCriticalResult:
    """Outcome of solving χ(p) = T by stochastic bisection.

    ``p_lo`` and ``p_hi`` bound the last bisection bracket. They matter most
    when ``budget_exhausted`` is set and p_hat is only a best guess.
    """

    __slots__ = (
        "graph",
        "target",
        "p_hat",
        "chi_at_p_hat",
        "omega_p_hat",
        "corrected_omega_p",
        "budget_spent",
        "budget_exhausted",
        "steps",
        "p_lo",
        "p_hi",
    )

    def __init__(
        self, graph, target, p_hat, chi_at_p_hat, budget_spent, budget_exhausted, steps, bracket
    ):
        self.graph = graph
        self.target = target
        self.p_hat = p_hat
        self.chi_at_p_hat = chi_at_p_hat
        self.omega_p_hat = graph.omega * p_hat
        self.corrected_omega_p = corrected_omega_value(graph.omega, p_hat, target)
        self.budget_spent = budget_spent
        self.budget_exhausted = budget_exhausted
        self.steps = steps
        self.p_lo, self.p_hi = bracket

    def __repr__(self) -> str:
        return (
            f"PseudoCriticalResult({self.graph.label}, T={self.target}, "
            f"p_hat={self.p_hat:.8f}, corrected={self.corrected_omega_p:.6f})"
        )


# -- kernels -----------------------------------------------------------------


@nb.njit(nogil=True, cache=True)
def _neighbor(kind, n, m, strides, v, d):
    """d-th neighbour of v and the sparse key of the bond between them."""
    if kind == 0:
        w = v ^ (1 << d)
        owner = v if w > v else w
        return w, owner * n + d
    j = d // 2
    stride = strides[j]
    digit = (v // stride) % m
    if d % 2 == 0:
        w = v - (m - 1) * stride if digit == m - 1 else v + stride
        return w, v * n + j
    w = v + (m - 1) * stride if digit == 0 else v - stride
    return w, w * n + j


@nb.njit(nogil=True, cache=True)
def _grow(kind, n, m, strides, seed, stream, sample, p, stamp, tag, queue, cap):
    s = np.uint64(seed)
    t = np.uint64(stream)
    c = np.uint64(sample)
    degree = n if kind == 0 else 2 * n
    stamp[0] = tag
    queue[0] = 0
    head = 0
    tail = 1
    examined = 0
    while head < tail:
        v = queue[head]
        head += 1
        for d in range(degree):
            w, key = _neighbor(kind, n, m, strides, v, d)
            if stamp[w] == tag:
                continue
            examined += 1
            if bond_uniform(s, t, c, np.uint64(key)) < p:
                if tail >= cap:
                    return tail, examined, True
                stamp[w] = tag
                queue[tail] = w
                tail += 1
    return tail, examined, False


@nb.njit(nogil=True, cache=True)
def _cluster_sizes(kind, n, m, strides, vertex_count, seed, stream, start, stop, p, cap):
    stamp = np.zeros(vertex_count, dtype=np.int64)
    queue = np.empty(min(cap, vertex_count), dtype=np.int64)
    sizes = np.empty(stop - start, dtype=np.int64)
    truncated = 0
    examined = 0
    for i in range(start, stop):
        size, seen, cut = _grow(kind, n, m, strides, seed, stream, i, p, stamp, i - start + 1, queue, cap)
        sizes[i - start] = size
        examined += seen
        if cut:
            truncated += 1
    return sizes, truncated, examined


@nb.njit(nogil=True, cache=True)
def _vertex_hits(kind, n, m, strides, vertex_count, seed, stream, start, stop, p, cap):
    stamp = np.zeros(vertex_count, dtype=np.int64)
    queue = np.empty(min(cap, vertex_count), dtype=np.int64)
    hits = np.zeros(vertex_count, dtype=np.int64)
    truncated = 0
    examined = 0
    for i in range(start, stop):
        size, seen, cut = _grow(kind, n, m, strides, seed, stream, i, p, stamp, i - start + 1, queue, cap)
        for q in range(size):
            hits[queue[q]] += 1
        examined += seen
        if cut:
            truncated += 1
    return hits, truncated, examined


@nb.njit(nogil=True, cache=True)
def _long_path(kind, n, m, strides, seed, stream, sample, p, x, length, on_path, path, nxt):
    """Occupied self-avoiding path 0 → x with at least ``length`` bonds (DFS)."""
    if x == 0:
        return length <= 0
    s = np.uint64(seed)
    t = np.uint64(stream)
    c = np.uint64(sample)
    degree = n if kind == 0 else 2 * n
    depth = 0
    path[0] = 0
    nxt[0] = 0
    on_path[0] = 1
    while depth >= 0:
        v = path[depth]
        if nxt[depth] >= degree:
            on_path[v] = 0
            depth -= 1
            continue
        d = nxt[depth]
        nxt[depth] += 1
        w, key = _neighbor(kind, n, m, strides, v, d)
        if on_path[w] == 1:
            continue
        if bond_uniform(s, t, c, np.uint64(key)) >= p:
            continue
        if w == x:
            if depth + 1 >= length:
                for q in range(depth + 1):
                    on_path[path[q]] = 0
                return True
            continue
        depth += 1
        path[depth] = w
        nxt[depth] = 0
        on_path[w] = 1
    return False


@nb.njit(nogil=True, cache=True)
def _long_path_hits(kind, n, m, strides, vertex_count, seed, stream, start, stop, p, x, length, cap):
    stamp = np.zeros(vertex_count, dtype=np.int64)
    queue = np.empty(min(cap, vertex_count), dtype=np.int64)
    on_path = np.zeros(vertex_count, dtype=np.uint8)
    path = np.empty(vertex_count, dtype=np.int64)
    nxt = np.empty(vertex_count, dtype=np.int64)
    hits = 0
    truncated = 0
    examined = 0
    for i in range(start, stop):
        tag = i - start + 1
        size, seen, cut = _grow(kind, n, m, strides, seed, stream, i, p, stamp, tag, queue, cap)
        examined += seen
        if cut:
            truncated += 1
        if stamp[x] != tag and not cut:
            continue
        if _long_path(kind, n, m, strides, seed, stream, i, p, x, length, on_path, path, nxt):
            hits += 1
    return hits, truncated, examined


# -- drivers -----------------------------------------------------------------


def _kernel_args(graph: GraphModel) -> tuple:
    if graph.vertex_count > MAX_DENSE_VERTICES:
        raise ResourceLimitError(
            f"{graph.label} has {graph.vertex_count} vertices; the visited-stamp "
            f"buffer is capped at {MAX_DENSE_VERTICES}",
            predicted=graph.vertex_count,
        )
    kind = 0 if graph.kind == HYPERCUBE else 1
    return kind, graph.n, graph.m or 0, np.array(graph.strides, dtype=np.int64)


def _validate(p: float, samples: int, seed: int, stream_count: int, workers: int, cap: int) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    if stream_count < 1:
        raise ValueError(f"stream_count must be >= 1, got {stream_count}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if cap < 1:
        raise ValueError(f"cluster cap must be >= 1, got {cap}")


def stream_bounds(samples: int, stream_count: int) -> list[tuple[int, int, int]]:
    """Contiguous (stream, start, stop) sample ranges; empty streams dropped."""
    out = []
    for s in range(stream_count):
        start = s * samples // stream_count
        stop = (s + 1) * samples // stream_count
        if stop > start:
            out.append((s, start, stop))
    return out


def _run_streams(task, samples: int, stream_count: int, workers: int) -> list:
    bounds = stream_bounds(samples, stream_count)
    if workers == 1 or len(bounds) == 1:
        return [task(*b) for b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: task(*b), bounds))


def _square_sum(values: np.ndarray) -> int:
    if values.size == 0:
        return 0
    top = int(values.max())
    if top * top * values.size < 2**62:
        return int(np.dot(values, values))
    return sum(int(v) * int(v) for v in values.tolist())


def _warn_truncated(count: int, cap: int) -> None:
    if count:
        warnings.warn(
            f"{count} cluster samples hit the cap of {cap} vertices and were truncated",
            TruncatedSampleWarning,
            stacklevel=3,
        )


def sample_origin_cluster(
    graph: GraphModel,
    p: float,
    seed: int = 0,
    stream: int = 0,
    sample: int = 0,
    eager: bool = False,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> ClusterSample:
    """Grow C(0) for one (seed, stream, sample) triple.

    With ``eager`` the whole BondConfig is drawn from the same uniforms and
    the cluster is read off it; the realisation is identical to the lazy one.
    """
    _validate(p, 1, seed, 1, 1, cap)
    if eager:
        uniforms = uniform_array(seed, stream, sample, graph.bond_keys)
        config = BondConfig.from_bonds(graph, np.flatnonzero(uniforms < p).tolist())
        members = cluster(config, 0)
        return ClusterSample(len(members), members, graph.bond_count, False, seed, stream, sample)
    kind, n, m, strides = _kernel_args(graph)
    stamp = np.zeros(graph.vertex_count, dtype=np.int64)
    queue = np.empty(min(cap, graph.vertex_count), dtype=np.int64)
    size, examined, cut = _grow(kind, n, m, strides, seed, stream, sample, p, stamp, 1, queue, cap)
    _warn_truncated(int(cut), cap)
    members = frozenset(queue[:size].tolist())
    return ClusterSample(int(size), members, int(examined), bool(cut), seed, stream, sample)


def chi_estimate(
    graph: GraphModel,
    p: float,
    samples: int,
    seed: int = 0,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> Estimate:
    """χ(p) = E_p|C(0)| from independent lazily grown clusters."""
    _validate(p, samples, seed, stream_count, workers, cap)
    kind, n, m, strides = _kernel_args(graph)

    def task(stream, start, stop):
        sizes, truncated, examined = _cluster_sizes(
            kind, n, m, strides, graph.vertex_count, seed, stream, start, stop, p, cap
        )
        return int(sizes.sum()), _square_sum(sizes), int(truncated), int(examined)

    parts = _run_streams(task, samples, stream_count, workers)
    total = sum(part[0] for part in parts)
    total_sq = sum(part[1] for part in parts)
    truncated = sum(part[2] for part in parts)
    examined = sum(part[3] for part in parts)
    _warn_truncated(truncated, cap)
    return Estimate.from_sums(total, total_sq, samples, seed, stream_count, truncated, examined)


def two_point_profile(
    graph: GraphModel,
    p: float,
    samples: int,
    seed: int = 0,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> list[Estimate]:
    """τ_p(x) for every vertex from shared samples.

    Per sample the indicators sum to |C(0)|, so the totals add up to the
    ``chi_estimate`` total for the same arguments.
    """
    _validate(p, samples, seed, stream_count, workers, cap)
    kind, n, m, strides = _kernel_args(graph)

    def task(stream, start, stop):
        return _vertex_hits(kind, n, m, strides, graph.vertex_count, seed, stream, start, stop, p, cap)

    parts = _run_streams(task, samples, stream_count, workers)
    hits = np.zeros(graph.vertex_count, dtype=np.int64)
    for part in parts:
        hits += part[0]
    truncated = sum(int(part[1]) for part in parts)
    examined = sum(int(part[2]) for part in parts)
    _warn_truncated(truncated, cap)
    return [
        Estimate.from_sums(int(h), int(h), samples, seed, stream_count, truncated, examined)
        for h in hits.tolist()
    ]


def two_point_estimate(
    graph: GraphModel,
    p: float,
    x: int,
    samples: int,
    seed: int = 0,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> Estimate:
    """τ_p(x) = P_p(0 ↔ x)."""
    graph.validate_vertex(x)
    return two_point_profile(graph, p, samples, seed, stream_count, workers, cap)[x]


def min_length_connection_estimate(
    graph: GraphModel,
    p: float,
    x: int,
    length: int,
    samples: int,
    seed: int = 0,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> Estimate:
    """τ^(i)(x): an occupied self-avoiding path 0 → x of at least ``length`` bonds.

    The path search is a depth-first enumeration of self-avoiding paths,
    exponential in the cluster size; use it on small graphs.
    """
    graph.validate_vertex(x)
    if length < 0:
        raise ValueError(f"Path length must be >= 0, got {length}")
    _validate(p, samples, seed, stream_count, workers, cap)
    kind, n, m, strides = _kernel_args(graph)

    def task(stream, start, stop):
        return _long_path_hits(
            kind, n, m, strides, graph.vertex_count, seed, stream, start, stop, p, x, length, cap
        )

    parts = _run_streams(task, samples, stream_count, workers)
    hits = sum(int(part[0]) for part in parts)
    truncated = sum(int(part[1]) for part in parts)
    examined = sum(int(part[2]) for part in parts)
    _warn_truncated(truncated, cap)
    return Estimate.from_sums(hits, hits, samples, seed, stream_count, truncated, examined)


def sweep_chi(
    graph: GraphModel,
    p_grid,
    samples: int,
    seed: int = 0,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> list[Estimate]:
    """χ on a grid of densities, every grid point using the same uniforms.

    Each sample's cluster is nondecreasing in p, so the means are too.
    """
    grid = [float(p) for p in p_grid]
    for p in grid:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Grid values must lie in [0, 1], got {p}")
    return [chi_estimate(graph, p, samples, seed, stream_count, workers, cap) for p in grid]


def piN_mc(
    graph: GraphModel,
    n: int,
    p: float,
    samples: int,
    seed: int = 0,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
) -> Estimate:
    """Nested Monte Carlo estimate of Π̂⁽ᴺ⁾.

    Each sample draws N+1 independent level configurations and counts the
    nested terms of the defining sum on them; the count times p^N is an
    unbiased estimate.
    """
    if not 0 <= n <= MAX_MC_LEVEL:
        raise ValueError(f"piN_mc supports N in 0..{MAX_MC_LEVEL}, got {n}")
    _validate(p, samples, seed, stream_count, workers, 1)
    keys = graph.bond_keys

    def task(stream, start, stop):
        counts = []
        for i in range(start, stop):
            levels = []
            for j in range(n + 1):
                uniforms = uniform_array(seed, stream, i * LEVEL_SLOTS + j, keys)
                levels.append(BondConfig.from_bonds(graph, np.flatnonzero(uniforms < p).tolist()))
            counts.append(LevelStack(levels).count())
        return sum(counts), sum(c * c for c in counts)

    parts = _run_streams(task, samples, stream_count, workers)
    total = sum(part[0] for part in parts)
    total_sq = sum(part[1] for part in parts)
    return Estimate.from_sums(total, total_sq, samples, seed, stream_count, scale=p**n)


# -- critical point ----------------------------------------------------------


def corrected_omega_value(omega: int, p_hat: float, target: float) -> float:
    """Ωp + 1/T; an infinite target leaves Ωp unchanged."""
    if math.isinf(target):
        return omega * p_hat
    return omega * p_hat + 1.0 / target


def corrected_omega_pc(result: PseudoCriticalResult) -> float:
    """Ω·p̂ + 1/T for a completed :func:`solve_chi_target` run."""
    return corrected_omega_value(result.graph.omega, result.p_hat, result.target)


def solve_chi_target(
    graph: GraphModel,
    target: float = DEFAULT_TARGET,
    tol: float = DEFAULT_TOLERANCE,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    confidence: float = DEFAULT_CONFIDENCE,
    initial_samples: int = INITIAL_BISECTION_SAMPLES,
    stream_count: int = DEFAULT_STREAMS,
    workers: int = 1,
    cap: int = DEFAULT_CLUSTER_CAP,
) -> PseudoCriticalResult:
    """Find p̂ with χ(p̂) = T by monotone stochastic bisection.

    All evaluations share one seed, so the estimated χ is nondecreasing in p.
    At each midpoint the sample size doubles while the confidence interval
    straddles T and is wider than ``tol``·T. A straddling interval that is
    narrow enough accepts the midpoint; otherwise the side of T decides the
    half. If the budget runs out, the last evaluated midpoint is returned
    with the flag set, together with the bracket [p_lo, p_hi] every decided
    step has narrowed to; p_lo <= p_hat <= p_hi always holds.

    Raises:
        ValueError: For T <= 1, T >= vertex count, or invalid tolerances.
    """
    if not target > 1.0:
        raise ValueError(f"target must exceed 1 (χ(0) = 1), got {target}")
    if target >= graph.vertex_count:
        raise ValueError(f"target {target} must be below the vertex count {graph.vertex_count}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    if initial_samples < 2 or budget < initial_samples:
        raise ValueError("need initial_samples >= 2 and budget >= initial_samples")

    z = float(norm.ppf(0.5 + confidence / 2.0))
    lo, hi = 0.0, 1.0
    spent = 0
    exhausted = False
    mid = 0.5
    estimate = None
    p_hat = mid
    for step in range(1, MAX_BISECTION_STEPS + 1):
        mid = 0.5 * (lo + hi)
        samples = initial_samples
        while True:
            if spent + samples > budget:
                exhausted = True
                break
            estimate = chi_estimate(graph, mid, samples, seed, stream_count, workers, cap)
            p_hat = mid
            spent += samples
            low, high = estimate.interval(z)
            if low > target or high < target:
                break
            if z * estimate.stderr <= tol * target:
                return PseudoCriticalResult(
                    graph, target, mid, estimate, spent, False, step, (lo, hi)
                )
            samples *= 2
        if exhausted:
            break
        if estimate.mean < target:
            lo = mid
        else:
            hi = mid
    return PseudoCriticalResult(graph, target, p_hat, estimate, spent, exhausted, step, (lo, hi))
