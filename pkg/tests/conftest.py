"""Shared helpers: random instances and tree enumeration for oracles."""

from __future__ import annotations

import itertools
import random

import pytest

from distmincut.congest import NetworkConfig
from distmincut.generators import random_connected
from distmincut.graph import WeightedMultigraph
from distmincut.tree import RootedSpanningTree, orient_edges


@pytest.fixture
def config() -> NetworkConfig:
    return NetworkConfig(seed=0)


def random_instance(rng: random.Random, n_max: int, max_weight: int = 1) -> WeightedMultigraph:
    n = rng.randint(2, n_max)
    return random_connected(
        n,
        extra_edges=rng.randint(0, 2 * n),
        seed=rng.randrange(2**31),
        max_weight=max_weight,
    )


def random_spanning_tree(g: WeightedMultigraph, rng: random.Random) -> RootedSpanningTree:
    """Uniform-ish random spanning tree by randomized BFS/DFS hybrid."""
    n = g.n
    seen = {0}
    edges = []
    frontier = [0]
    while len(seen) < n:
        u = rng.choice(frontier)
        nbrs = [v for v in g.neighbors(u) if v not in seen]
        if not nbrs:
            frontier.remove(u)
            continue
        v = rng.choice(nbrs)
        seen.add(v)
        edges.append((u, v))
        frontier.append(v)
    return orient_edges(n, edges)


def all_labeled_trees(n: int):
    """Every labeled tree on n vertices via its sequence encoding."""
    if n == 1:
        yield RootedSpanningTree(root=0, parent=(0,))
        return
    if n == 2:
        yield orient_edges(2, [(0, 1)])
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for x in seq:
            degree[x] += 1
        edges = []
        avail = sorted(i for i in range(n) if degree[i] == 1)
        import heapq

        heapq.heapify(avail)
        for x in seq:
            leaf = heapq.heappop(avail)
            edges.append((leaf, x))
            degree[x] -= 1
            if degree[x] == 1:
                heapq.heappush(avail, x)
        u = heapq.heappop(avail)
        v = heapq.heappop(avail)
        edges.append((u, v))
        yield orient_edges(n, edges)
