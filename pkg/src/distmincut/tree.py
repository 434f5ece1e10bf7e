"""Rooted spanning trees, label bundles, and fragment decompositions.

Shared between the distributed primitives and the centralized oracles. The
orientation contract lives here: trees are rooted at the minimum-id vertex
and oriented by BFS over the tree edges, parents resolved to the smallest-id
predecessor; children are always ordered by ascending vertex id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "RootedSpanningTree",
    "TreeLabels",
    "FragmentDecomposition",
    "orient_edges",
    "edge_copy_key",
]


def edge_copy_key(load: int, u: int, v: int, copy: int) -> tuple[int, int, int, int]:
    """Total order on parallel edge copies: (load, min id, max id, copy).

    Globally distinct keys, so a minimum spanning tree under this order is
    unique and any correct algorithm must return the same edge set.
    """
    a, b = (u, v) if u < v else (v, u)
    return (load, a, b, copy)


@dataclass(frozen=True)
class RootedSpanningTree:
    """Parent map spanning vertices 0..n-1; root maps to itself."""

    root: int
    parent: tuple[int, ...]
    _children: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.parent)
        kids: list[list[int]] = [[] for _ in range(n)]
        seen_root = False
        for v, p in enumerate(self.parent):
            if v == p:
                if v != self.root:
                    raise ValueError(f"vertex {v} is a second root")
                seen_root = True
            else:
                kids[p].append(v)
        if not seen_root:
            raise ValueError("root does not map to itself")
        # acyclicity + spanning: every vertex must reach the root
        depth = [-1] * n
        depth[self.root] = 0
        order = [self.root]
        for x in order:
            for c in kids[x]:
                depth[c] = depth[x] + 1
                order.append(c)
        if len(order) != n:
            raise ValueError("parent map does not span all vertices")
        object.__setattr__(self, "_children", tuple(tuple(sorted(c)) for c in kids))

    @property
    def n(self) -> int:
        return len(self.parent)

    def children(self, u: int) -> tuple[int, ...]:
        return self._children[u]

    def depths(self) -> list[int]:
        d = [0] * self.n
        for v in self.preorder_vertices():
            if v != self.root:
                d[v] = d[self.parent[v]] + 1
        return d

    def depth(self) -> int:
        return max(self.depths()) if self.n else 0

    def edges(self) -> list[tuple[int, int]]:
        """Tree edges as (parent, child)."""
        return [(self.parent[v], v) for v in range(self.n) if v != self.root]

    def preorder_vertices(self) -> list[int]:
        """DFS preorder under ascending-child order."""
        out = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            out.append(u)
            for c in reversed(self._children[u]):
                stack.append(c)
        return out


@dataclass(frozen=True)
class TreeLabels:
    """Preorder number, subtree size, and subtree reach labels.

    pre is a bijection onto [0, n); the subtree of u occupies the contiguous
    preorder range [pre[u], pre[u]+size[u]-1]. low/high extend the range with
    preorder values reachable over one non-tree edge from inside the subtree.
    """

    pre: tuple[int, ...]
    size: tuple[int, ...]
    low: tuple[int, ...] | None = None
    high: tuple[int, ...] | None = None

    def with_reach(self, low, high) -> "TreeLabels":
        return TreeLabels(self.pre, self.size, tuple(low), tuple(high))


@dataclass(frozen=True)
class FragmentDecomposition:
    """Partition of a spanning tree into connected fragments.

    A fragment's id is the id of its root: the unique fragment vertex whose
    tree parent lies outside (or the tree root). At most 2*ceil(sqrt(n))
    fragments, each of tree-diameter at most 2*ceil(sqrt(n)).
    """

    fragment_of: tuple[int, ...]
    count: int

    @property
    def fragment_root(self) -> dict[int, int]:
        return {fid: fid for fid in set(self.fragment_of)}

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for v, f in enumerate(self.fragment_of):
            out.setdefault(f, []).append(v)
        return out


def orient_edges(n: int, edges) -> RootedSpanningTree:
    """Root an undirected spanning edge set at the minimum-id vertex.

    BFS orientation: a vertex's parent is its smallest-id neighbor in the
    previous BFS layer. This is the single orientation rule used everywhere.
    """
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    root = 0
    depth = [-1] * n
    depth[root] = 0
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    if any(d < 0 for d in depth):
        raise ValueError("edge set does not span all vertices")
    parent = [root] * n
    for v in range(n):
        if v != root:
            parent[v] = min(u for u in adj[v] if depth[u] == depth[v] - 1)
    return RootedSpanningTree(root=root, parent=tuple(parent))
