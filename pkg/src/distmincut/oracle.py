"""Centralized exact references used to verify every distributed primitive.

These run with full graph visibility and never touch the round engine, so
they stay independent of the machinery they check: Stoer-Wagner global min
cut, Kruskal under the shared copy order, Tarjan-style bridge finding, and
direct recurrence evaluation of the tree labels.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import SampledSubgraph, VertexSide, WeightedMultigraph, cut_weight
from .tree import RootedSpanningTree, edge_copy_key, orient_edges

__all__ = [
    "ExactMinCut",
    "stoer_wagner",
    "brute_force_min_cut",
    "kruskal_with_order",
    "dfs_bridges",
    "preorder_oracle",
    "low_high_oracle",
    "bridge_oracle",
    "expected_y",
    "edge_copies",
]

BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class ExactMinCut:
    weight: int
    side: VertexSide


def stoer_wagner(g: WeightedMultigraph) -> ExactMinCut:
    """Exact global minimum cut by repeated minimum cut phases."""
    n = g.n
    if n < 2:
        raise ValueError("minimum cut needs at least 2 vertices")
    w = [[0] * n for _ in range(n)]
    for u, v, wt in g.edges:
        w[u][v] += wt
        w[v][u] += wt
    merged_sets = [{v} for v in range(n)]
    active = list(range(n))
    best_weight = None
    best_side: set[int] | None = None
    while len(active) > 1:
        # maximum adjacency order starting from the smallest active vertex
        order = [active[0]]
        weight_to = {v: w[active[0]][v] for v in active[1:]}
        rest = set(active[1:])
        while rest:
            nxt = max(rest, key=lambda v: (weight_to[v], -v))
            order.append(nxt)
            rest.remove(nxt)
            for v in rest:
                weight_to[v] += w[nxt][v]
        t = order[-1]
        s = order[-2]
        phase_cut = sum(w[t][v] for v in active if v != t)
        if best_weight is None or phase_cut < best_weight:
            best_weight = phase_cut
            best_side = set(merged_sets[t])
        # merge t into s
        merged_sets[s] |= merged_sets[t]
        for v in active:
            if v not in (s, t):
                w[s][v] += w[t][v]
                w[v][s] = w[s][v]
        active.remove(t)
    assert best_weight is not None and best_side is not None
    return ExactMinCut(weight=best_weight, side=VertexSide.of(best_side, n))


def brute_force_min_cut(g: WeightedMultigraph) -> ExactMinCut:
    """Exhaustive bipartition scan; capped at n = 12."""
    n = g.n
    if n < 2:
        raise ValueError("minimum cut needs at least 2 vertices")
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force capped at n = {BRUTE_FORCE_MAX_N}")
    best = None
    best_mask = 0
    for mask in range(1, 1 << (n - 1)):  # vertex n-1 always on the far side
        total = 0
        for u, v, wt in g.edges:
            if ((mask >> u) & 1) != ((mask >> v) & 1):
                total += wt
        if best is None or total < best:
            best = total
            best_mask = mask
    side = {v for v in range(n) if (best_mask >> v) & 1}
    return ExactMinCut(weight=best, side=VertexSide.of(side, n))


def edge_copies(g_or_sample) -> list[tuple[int, int, int]]:
    """Enumerate parallel unit copies as (u, v, copy) with u < v.

    A WeightedMultigraph contributes w copies per edge; a SampledSubgraph
    contributes its kept multiplicity. Copy indices restart at 0 per edge.
    """
    out = []
    if isinstance(g_or_sample, SampledSubgraph):
        pairs = zip(g_or_sample.base.edges, g_or_sample.multiplicity)
        for (u, v, _), mult in pairs:
            for c in range(mult):
                out.append((u, v, c))
    else:
        for u, v, w in g_or_sample.edges:
            for c in range(w):
                out.append((u, v, c))
    return out


def _load_of(loads, u: int, v: int, copy: int) -> int:
    if loads is None:
        return 0
    get = getattr(loads, "get_copy", None)
    if get is not None:
        return get(u, v, copy)
    return loads.get((u, v, copy), 0)


def kruskal_with_order(g_or_sample, loads=None) -> RootedSpanningTree:
    """Minimum spanning tree under the shared copy order, BFS-oriented.

    Keys are globally distinct, so the returned tree is the unique minimum
    and must match any other implementation using the same order.
    """
    if isinstance(g_or_sample, SampledSubgraph):
        n = g_or_sample.base.n
    else:
        n = g_or_sample.n
    copies = edge_copies(g_or_sample)
    copies.sort(key=lambda e: edge_copy_key(_load_of(loads, *e), *e))
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for u, v, _ in copies:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            chosen.append((u, v))
            if len(chosen) == n - 1:
                break
    if len(chosen) != n - 1:
        raise ValueError("input graph is not connected")
    return orient_edges(n, chosen)


def dfs_bridges(n: int, multi_edges) -> set[tuple[int, int]]:
    """Exact bridges of a multigraph given as (u, v, multiplicity) triples.

    An edge with multiplicity >= 2 is never a bridge. Components are handled
    independently; the result holds for disconnected inputs too.
    """
    # expand to at most two parallel instances per pair: enough to decide
    arcs: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (nbr, edge id)
    pair_of: list[tuple[int, int]] = []
    eid = 0
    for u, v, mult in multi_edges:
        if mult <= 0:
            continue
        for _ in range(min(mult, 2)):
            arcs[u].append((v, eid))
            arcs[v].append((u, eid))
            pair_of.append((min(u, v), max(u, v)))
            eid += 1
    disc = [-1] * n
    low = [0] * n
    bridges: set[tuple[int, int]] = set()
    timer = 0
    for start in range(n):
        if disc[start] >= 0:
            continue
        stack: list[tuple[int, int, int]] = [(start, -1, 0)]  # vertex, in-edge, arc ptr
        while stack:
            u, in_eid, ptr = stack.pop()
            if ptr == 0:
                disc[u] = low[u] = timer
                timer += 1
            if ptr < len(arcs[u]):
                stack.append((u, in_eid, ptr + 1))
                v, eid2 = arcs[u][ptr]
                if eid2 == in_eid:
                    continue
                if disc[v] >= 0:
                    low[u] = min(low[u], disc[v])
                else:
                    stack.append((v, eid2, 0))
            else:
                if in_eid >= 0:
                    p = next(x for x, e in arcs[u] if e == in_eid)
                    low[p] = min(low[p], low[u])
                    if low[u] > disc[p]:
                        bridges.add(pair_of[in_eid])
    return bridges


def preorder_oracle(tree: RootedSpanningTree) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """DFS preorder numbers and subtree sizes under ascending-child order."""
    n = tree.n
    pre = [0] * n
    size = [1] * n
    order = tree.preorder_vertices()
    for i, v in enumerate(order):
        pre[v] = i
    for v in reversed(order):
        if v != tree.root:
            size[tree.parent[v]] += size[v]
    return tuple(pre), tuple(size)


def low_high_oracle(
    tree: RootedSpanningTree,
    pre,
    sampled_pairs,
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Bottom-up evaluation of the subtree reach recurrences.

    sampled_pairs: iterable of (u, v) pairs present in the sampled subgraph
    (a sampled parallel copy of a tree edge counts, in both directions).
    """
    n = tree.n
    low = list(pre)
    high = list(pre)
    for u, v in sampled_pairs:
        low[u] = min(low[u], pre[v])
        low[v] = min(low[v], pre[u])
        high[u] = max(high[u], pre[v])
        high[v] = max(high[v], pre[u])
    for v in reversed(tree.preorder_vertices()):
        if v != tree.root:
            p = tree.parent[v]
            low[p] = min(low[p], low[v])
            high[p] = max(high[p], high[v])
    return tuple(low), tuple(high)


def bridge_oracle(tree: RootedSpanningTree, sampled_multi) -> set[tuple[int, int]]:
    """Tree edges that are bridges of (sampled + tree), via Tarjan low-links.

    sampled_multi: iterable of (u, v, multiplicity) for the sampled subgraph.
    Independent of the label recurrences, so it can check them.
    """
    union: dict[tuple[int, int], int] = {}
    for u, v, mult in sampled_multi:
        if mult > 0:
            key = (min(u, v), max(u, v))
            union[key] = union.get(key, 0) + mult
    for p, c in tree.edges():
        key = (min(p, c), max(p, c))
        union[key] = union.get(key, 0) + 1
    all_bridges = dfs_bridges(tree.n, [(u, v, m) for (u, v), m in union.items()])
    tree_pairs = {(min(p, c), max(p, c)) for p, c in tree.edges()}
    return all_bridges & tree_pairs


def expected_y(w: int, kappa: float) -> float:
    """Chance that a cut of weight w keeps at least one sampled edge when
    each unit copy survives with probability 1 - 2**(-1/kappa)."""
    if w < 0:
        raise ValueError("cut weight must be >= 0")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    return 1.0 - 2.0 ** (-w / kappa)
