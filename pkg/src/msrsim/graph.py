"""Directed weighted communication graphs and robustness certification.

Nodes are indexed 0..n-1. An edge (j, i) means node j can send to node i,
so the neighbor set of i holds its senders. Per-edge weights a_ij live on
the receiving side and must leave every node a positive self-weight
1 - sum_j a_ij, which keeps each state update a convex combination.

Robustness certification is deliberately brute force: it enumerates every
pair of nonempty disjoint node subsets, so it doubles as its own oracle.
It refuses graphs larger than a configurable cap because the enumeration
is exponential.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

#: Largest node count accepted by the exhaustive robustness checker.
EXHAUSTIVE_LIMIT_DEFAULT = 16


class CapacityError(RuntimeError):
    """An exhaustive certification was requested on too large a graph."""


@dataclass
class DirectedGraph:
    """Immutable-by-convention directed graph with receiver-side weights.

    Attributes:
        n: node count.
        edges: set of ordered pairs (j, i), meaning j sends to i.
        weights: map (i, j) -> a_ij for every in-edge (j, i). Empty map is
            allowed only when the edge set is empty; use
            :func:`assign_uniform_weights` to populate it.
        positions: optional (n, 2) array of planar coordinates, kept for
            geometric graphs so exports can be reproduced.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    weights: dict[tuple[int, int], float] = field(default_factory=dict)
    positions: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        self.edges = frozenset(self.edges)
        ins: list[set[int]] = [set() for _ in range(self.n)]
        outs: list[set[int]] = [set() for _ in range(self.n)]
        for j, i in self.edges:
            if j == i:
                raise ValueError(f"self-loop ({j}, {i}) not allowed")
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ValueError(f"edge ({j}, {i}) out of range for n={self.n}")
            ins[i].add(j)
            outs[j].add(i)
        self._in = [frozenset(s) for s in ins]
        self._out = [frozenset(s) for s in outs]
        if self.weights:
            self._validate_weights()

    def _validate_weights(self) -> None:
        keyed = set(self.weights)
        expected = {(i, j) for (j, i) in self.edges}
        if keyed != expected:
            missing = sorted(expected - keyed)[:3]
            extra = sorted(keyed - expected)[:3]
            raise ValueError(
                f"weights must cover in-edges exactly (missing {missing}, extra {extra})"
            )
        for (i, j), a in self.weights.items():
            if not (0.0 < a < 1.0):
                raise ValueError(f"weight a[{i},{j}]={a} outside (0, 1)")
        alpha = self.alpha
        if alpha is not None:
            if alpha > 0.5 + 1e-12:
                raise ValueError(f"weight lower bound alpha={alpha} exceeds 1/2")
            for i in range(self.n):
                if self.self_weight(i) < alpha - 1e-12:
                    raise ValueError(
                        f"node {i} self-weight {self.self_weight(i)} below alpha={alpha}"
                    )

    # -- basic queries ----------------------------------------------------

    def neighbors(self, i: int) -> frozenset[int]:
        """In-neighbors of i: the nodes that send to i."""
        if not 0 <= i < self.n:
            raise ValueError(f"node id {i} out of range for n={self.n}")
        return self._in[i]

    def out_neighbors(self, i: int) -> frozenset[int]:
        """Nodes that i sends to."""
        if not 0 <= i < self.n:
            raise ValueError(f"node id {i} out of range for n={self.n}")
        return self._out[i]

    def in_degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def weight(self, i: int, j: int) -> float:
        """Weight a_ij that receiver i applies to sender j's value."""
        return self.weights[(i, j)]

    def self_weight(self, i: int) -> float:
        """1 - sum of i's incoming weights; the coefficient on i's own state."""
        return 1.0 - sum(self.weights[(i, j)] for j in sorted(self._in[i]))

    @property
    def alpha(self) -> float | None:
        """Smallest edge weight (the lower bound the weights must respect)."""
        if not self.weights:
            return None
        return min(self.weights.values())

    @property
    def omega(self) -> float:
        """Minimum nonzero update coefficient: min over edge weights and
        self-weights. Lower-bounds every entry of the delay-augmented
        update matrix and drives the consensus error-level formula."""
        values = [self.self_weight(i) for i in range(self.n)]
        values.extend(self.weights.values())
        return min(values)


def neighbors(g: DirectedGraph, i: int) -> frozenset[int]:
    """Module-level alias for :meth:`DirectedGraph.neighbors`."""
    return g.neighbors(i)


# -- constructors ---------------------------------------------------------


def from_undirected_edges(n: int, pairs: Iterable[tuple[int, int]]) -> DirectedGraph:
    """Build a graph treating each pair as a bidirectional link."""
    edges = set()
    for a, b in pairs:
        edges.add((a, b))
        edges.add((b, a))
    return DirectedGraph(n=n, edges=frozenset(edges))


def complete_graph(n: int) -> DirectedGraph:
    return from_undirected_edges(n, [(a, b) for a in range(n) for b in range(a + 1, n)])


def cycle_graph(n: int) -> DirectedGraph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return from_undirected_edges(n, [(a, (a + 1) % n) for a in range(n)])


def circulant_graph(n: int, offsets: Iterable[int]) -> DirectedGraph:
    """Ring of n nodes where each connects to neighbors at +-k for k in offsets."""
    pairs = []
    for k in offsets:
        if not 1 <= k <= n // 2:
            raise ValueError(f"offset {k} outside 1..n//2")
        pairs.extend((a, (a + k) % n) for a in range(n))
    return from_undirected_edges(n, pairs)


def random_geometric(n: int, radius: float, seed: int | np.random.Generator) -> DirectedGraph:
    """Random geometric graph on the unit square with uniform weights.

    Samples n points i.i.d. uniform on [0,1]^2 and links every pair at
    Euclidean distance <= radius (ties at exactly radius included) with a
    bidirectional edge pair. Deterministic given the seed.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if not 0.0 < radius <= math.sqrt(2.0) + 1e-12:
        raise ValueError(f"radius {radius} outside (0, sqrt(2)]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pts = rng.random((n, 2))
    edges = set()
    for a in range(n):
        for b in range(a + 1, n):
            d = math.hypot(pts[a, 0] - pts[b, 0], pts[a, 1] - pts[b, 1])
            if d <= radius:
                edges.add((a, b))
                edges.add((b, a))
    g = DirectedGraph(n=n, edges=frozenset(edges), positions=pts)
    return assign_uniform_weights(g)


def assign_uniform_weights(g: DirectedGraph) -> DirectedGraph:
    """Weight every in-edge of node i at 1/(d_i + 1).

    The uniform split leaves the same 1/(d_i + 1) as self-weight, so the
    convexity invariant holds automatically, and the induced lower bound
    alpha = min_i 1/(d_i + 1) is <= 1/2 whenever any node has a neighbor.
    """
    weights = {}
    for i in range(g.n):
        share = 1.0 / (g.in_degree(i) + 1)
        for j in g.neighbors(i):
            weights[(i, j)] = share
    return DirectedGraph(n=g.n, edges=g.edges, weights=weights, positions=g.positions)


# -- connectivity and degree ----------------------------------------------


def is_connected(g: DirectedGraph) -> bool:
    """Strong connectivity on the directed edge set.

    For graphs built from bidirectional pairs this coincides with the
    usual undirected notion.
    """
    if g.n == 1:
        return True
    return _reaches_all(g, forward=True) and _reaches_all(g, forward=False)


def _reaches_all(g: DirectedGraph, forward: bool) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        nxt = g.out_neighbors(v) if forward else g.neighbors(v)
        for w in nxt:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def min_in_degree(g: DirectedGraph) -> int:
    return min(g.in_degree(i) for i in range(g.n))


# -- robustness ------------------------------------------------------------


@dataclass(frozen=True)
class RobustnessVerdict:
    """Outcome of an exhaustive (r, s)-robustness check.

    When ``holds`` is false, ``witness`` carries the first pair of
    nonempty disjoint subsets (in the deterministic enumeration order)
    for which all three defining conditions fail.
    """

    holds: bool
    witness: tuple[frozenset[int], frozenset[int]] | None = None


def check_robustness(
    g: DirectedGraph,
    r: int,
    s: int = 1,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT_DEFAULT,
) -> RobustnessVerdict:
    """Exhaustively certify (r, s)-robustness.

    For every pair of nonempty disjoint subsets V1, V2 the check passes if
    (i) every node of V1 has at least r in-neighbors outside V1, or
    (ii) the same holds for V2, or (iii) the number of such nodes in V1
    plus the number in V2 is at least s. Subsets are enumerated in
    (size, bitmask) order and only pairs with key(V1) <= key(V2) are
    visited; the conditions are symmetric, so this is exhaustive.
    """
    if r < 1 or s < 1:
        raise ValueError("r and s must be positive")
    if r >= g.n or s >= g.n:
        raise ValueError(f"(r, s)-robustness requires r, s < n (got r={r}, s={s}, n={g.n})")
    if g.n > exhaustive_limit:
        raise CapacityError(
            f"exhaustive robustness check refused for n={g.n} > limit {exhaustive_limit}"
        )

    n = g.n
    in_mask = [0] * n
    for v in range(n):
        m = 0
        for j in g.neighbors(v):
            m |= 1 << j
        in_mask[v] = m
    members = {mask: [v for v in range(n) if mask >> v & 1] for mask in range(1, 1 << n)}
    subsets = sorted(range(1, 1 << n), key=lambda m: (len(members[m]), m))

    def reachers(mask: int) -> int:
        # nodes of the subset with >= r in-neighbors outside it
        outside = ~mask
        return sum(1 for v in members[mask] if (in_mask[v] & outside).bit_count() >= r)

    for idx1, m1 in enumerate(subsets):
        for m2 in subsets[idx1 + 1 :]:
            if m1 & m2:
                continue
            c1 = reachers(m1)
            if c1 == len(members[m1]):
                continue
            c2 = reachers(m2)
            if c2 == len(members[m2]):
                continue
            if c1 + c2 >= s:
                continue
            return RobustnessVerdict(
                holds=False,
                witness=(frozenset(members[m1]), frozenset(members[m2])),
            )
    return RobustnessVerdict(holds=True)


# -- export -----------------------------------------------------------------


def write_adjacency_csv(g: DirectedGraph, target) -> None:
    """Write one row per edge: from,to,weight (weight = a_to,from)."""
    own = isinstance(target, (str, bytes))
    fh = open(target, "w", newline="") if own else target
    try:
        w = csv.writer(fh)
        w.writerow(["from", "to", "weight"])
        for j, i in sorted(g.edges):
            w.writerow([j, i, repr(g.weights[(i, j)]) if g.weights else ""])
    finally:
        if own:
            fh.close()


def adjacency_csv_text(g: DirectedGraph) -> str:
    buf = io.StringIO()
    write_adjacency_csv(g, buf)
    return buf.getvalue()
