"""Weighted multigraph model, cut evaluation, sampling, and file I/O.

Graphs are undirected with integer weights in [1, W]; a weight-w edge stands
for w parallel unit edges. Parallel edges are never materialized: samplers
draw Binomial(w, p) per edge, which is distributionally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import stream

__all__ = [
    "GraphFormatError",
    "GraphValidationError",
    "WeightedMultigraph",
    "VertexSide",
    "SampledSubgraph",
    "cut_weight",
    "complement",
    "is_connected",
    "bfs_depths",
    "diameter",
    "load_graph",
    "save_graph",
    "graph_to_text",
]


class GraphFormatError(ValueError):
    """Malformed graph file."""


class GraphValidationError(ValueError):
    """Structurally invalid graph (self-loop, bad weight, disconnected...)."""


@dataclass(frozen=True)
class WeightedMultigraph:
    """Connected multigraph with edges stored as (u, v, weight) triples.

    Canonical form: u < v, edges sorted by (u, v), duplicate pairs merged by
    summing weights. `planted_side`/`planted_weight` carry generator metadata
    for instances built around a known cut.
    """

    n: int
    edges: tuple[tuple[int, int, int], ...]
    W: int
    planted_side: frozenset[int] | None = None
    planted_weight: int | None = None
    original_labels: tuple[int, ...] | None = None
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _incident: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        incident: list[list[int]] = [[] for _ in range(self.n)]
        for idx, (u, v, _) in enumerate(self.edges):
            adj[u].append(v)
            adj[v].append(u)
            incident[u].append(idx)
            incident[v].append(idx)
        object.__setattr__(self, "_adj", tuple(tuple(a) for a in adj))
        object.__setattr__(self, "_incident", tuple(tuple(a) for a in incident))

    @classmethod
    def build(
        cls,
        n: int,
        edges,
        W: int | None = None,
        planted_side=None,
        planted_weight: int | None = None,
        original_labels=None,
    ) -> "WeightedMultigraph":
        """Canonicalize and validate. W defaults to n**2 (minimum 2)."""
        if n < 1:
            raise GraphValidationError(f"vertex count must be >= 1, got {n}")
        if W is None:
            W = max(n * n, 2)
        merged: dict[tuple[int, int], int] = {}
        for u, v, w in edges:
            u, v, w = int(u), int(v), int(w)
            if u == v:
                raise GraphValidationError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphValidationError(f"edge ({u},{v}) outside [0,{n})")
            if u > v:
                u, v = v, u
            merged[(u, v)] = merged.get((u, v), 0) + w
        canon = tuple((u, v, w) for (u, v), w in sorted(merged.items()))
        for u, v, w in canon:
            if not (1 <= w <= W):
                raise GraphValidationError(f"edge ({u},{v}) weight {w} outside [1,{W}]")
        g = cls(
            n=n,
            edges=canon,
            W=W,
            planted_side=frozenset(planted_side) if planted_side is not None else None,
            planted_weight=planted_weight,
            original_labels=tuple(original_labels) if original_labels is not None else None,
        )
        if not is_connected(g):
            raise GraphValidationError("graph is not connected")
        return g

    @property
    def m(self) -> int:
        """Number of distinct weighted edges."""
        return len(self.edges)

    @property
    def m_multi(self) -> int:
        """Total multiplicity: sum of edge weights."""
        return sum(w for _, _, w in self.edges)

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self._adj[u]

    def incident_edges(self, u: int) -> tuple[int, ...]:
        """Indices into `edges` touching u."""
        return self._incident[u]

    def weight_of(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        for idx in self._incident[u]:
            a, b, w = self.edges[idx]
            if a == u and b == v:
                return w
        return 0

    def degree_weight(self, u: int) -> int:
        return sum(self.edges[i][2] for i in self._incident[u])


@dataclass(frozen=True)
class VertexSide:
    """One side of a cut: a nonempty proper subset of the vertices."""

    members: frozenset[int]

    @classmethod
    def of(cls, members, n: int) -> "VertexSide":
        s = frozenset(int(x) for x in members)
        if not s or len(s) >= n:
            raise GraphValidationError("cut side must be nonempty and proper")
        if any(not 0 <= x < n for x in s):
            raise GraphValidationError("cut side contains out-of-range vertex")
        return cls(s)

    def __contains__(self, v: int) -> bool:
        return v in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class SampledSubgraph:
    """Per-edge kept multiplicities for one skeleton sample of `base`.

    multiplicity[i] is how many of the w parallel unit copies of base.edges[i]
    survived; deterministic given (base, p, seed).
    """

    base: WeightedMultigraph
    multiplicity: tuple[int, ...]
    p: float
    seed: int

    def __post_init__(self) -> None:
        if len(self.multiplicity) != self.base.m:
            raise GraphValidationError("multiplicity vector length mismatch")
        for mult, (_, _, w) in zip(self.multiplicity, self.base.edges):
            if not 0 <= mult <= w:
                raise GraphValidationError("sampled multiplicity outside [0, w]")

    @property
    def total(self) -> int:
        return sum(self.multiplicity)

    def present_edges(self) -> list[tuple[int, int, int]]:
        """(u, v, kept multiplicity) for edges with at least one survivor."""
        return [
            (u, v, k)
            for (u, v, _), k in zip(self.base.edges, self.multiplicity)
            if k > 0
        ]

    def is_connected(self) -> bool:
        return _edges_connected(self.base.n, [(u, v) for u, v, _ in self.present_edges()])


def sample_subgraph(g: WeightedMultigraph, p: float, seed: int, label: object = "sample") -> SampledSubgraph:
    """Keep each parallel unit copy independently with probability p."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"sampling probability must be in (0,1], got {p}")
    if p == 1.0:
        mult = tuple(w for _, _, w in g.edges)
    else:
        rng = stream(seed, label)
        ws = np.array([w for _, _, w in g.edges], dtype=np.int64)
        mult = tuple(int(x) for x in rng.binomial(ws, p))
    return SampledSubgraph(base=g, multiplicity=mult, p=p, seed=seed)


def cut_weight(g: WeightedMultigraph, side: VertexSide) -> int:
    """Total weight of edges with exactly one endpoint in `side`."""
    s = side.members
    if not s or len(s) >= g.n:
        raise GraphValidationError("cut side must be nonempty and proper")
    return sum(w for u, v, w in g.edges if (u in s) != (v in s))


def complement(side: VertexSide, n: int) -> VertexSide:
    return VertexSide.of(set(range(n)) - side.members, n)


def _edges_connected(n: int, pairs) -> bool:
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    seen = bytearray(n)
    stack = [0]
    seen[0] = 1
    count = 1
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = 1
                count += 1
                stack.append(y)
    return count == n


def is_connected(g: WeightedMultigraph) -> bool:
    return _edges_connected(g.n, [(u, v) for u, v, _ in g.edges])


def bfs_depths(n: int, adj, root: int) -> list[int]:
    """BFS levels from root; -1 for unreachable."""
    depth = [-1] * n
    depth[root] = 0
    frontier = [root]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if depth[y] < 0:
                    depth[y] = d
                    nxt.append(y)
        frontier = nxt
    return depth


def diameter(g: WeightedMultigraph) -> int:
    """Unweighted diameter (exact; desk-scale instances only)."""
    adj = [list(g.neighbors(u)) for u in range(g.n)]
    best = 0
    for s in range(g.n):
        best = max(best, max(bfs_depths(g.n, adj, s)))
    return best


# --- file format ---------------------------------------------------------
#
# Header "p <n> <m>", then m lines "<u> <v> <w>", comments start with "#".
# Planted metadata rides in a sidecar comment "# planted <c> <id,id,...>".
# Writers emit the canonical form: edges sorted by (u, v), u < v.


def graph_to_text(g: WeightedMultigraph) -> str:
    lines = [f"p {g.n} {g.m}"]
    if g.planted_side is not None:
        ids = ",".join(str(x) for x in sorted(g.planted_side))
        lines.append(f"# planted {g.planted_weight} {ids}")
    for u, v, w in g.edges:
        lines.append(f"{u} {v} {w}")
    return "\n".join(lines) + "\n"


def save_graph(g: WeightedMultigraph, path) -> None:
    Path(path).write_text(graph_to_text(g), encoding="utf-8")


def load_graph(path, W: int | None = None) -> WeightedMultigraph:
    """Parse, remap arbitrary integer labels to dense ids, validate."""
    text = Path(path).read_text(encoding="utf-8")
    n = None
    m_declared = None
    raw_edges: list[tuple[int, int, int]] = []
    planted_weight = None
    planted_raw: list[int] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["planted"]:
                if len(parts) != 3:
                    raise GraphFormatError(f"line {lineno}: bad planted sidecar")
                planted_weight = int(parts[1])
                planted_raw = [int(x) for x in parts[2].split(",")]
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise GraphFormatError(f"line {lineno}: duplicate header")
            if len(parts) != 3:
                raise GraphFormatError(f"line {lineno}: header must be 'p <n> <m>'")
            n, m_declared = int(parts[1]), int(parts[2])
            continue
        if n is None:
            raise GraphFormatError(f"line {lineno}: edge before 'p' header")
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: edge must be '<u> <v> <w>'")
        try:
            u, v, w = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: non-integer field") from exc
        raw_edges.append((u, v, w))
    if n is None:
        raise GraphFormatError("missing 'p <n> <m>' header")
    if m_declared != len(raw_edges):
        raise GraphFormatError(
            f"header declares {m_declared} edges, file has {len(raw_edges)}"
        )

    labels = sorted({x for u, v, _ in raw_edges for x in (u, v)})
    dense = all(0 <= x < n for x in labels) and len(labels) <= n
    original_labels = None
    if not dense:
        if len(labels) > n:
            raise GraphFormatError(f"{len(labels)} labels but header n={n}")
        remap = {lab: i for i, lab in enumerate(labels)}
        raw_edges = [(remap[u], remap[v], w) for u, v, w in raw_edges]
        original_labels = tuple(labels)
        if planted_raw is not None:
            planted_raw = [remap[x] for x in planted_raw]
    return WeightedMultigraph.build(
        n,
        raw_edges,
        W=W,
        planted_side=planted_raw,
        planted_weight=planted_weight,
        original_labels=original_labels,
    )
