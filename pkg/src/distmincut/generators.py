"""Benchmark instance generators. All emit connected graphs, seeded."""

from __future__ import annotations

from .graph import GraphValidationError, WeightedMultigraph
from .rng import stream

__all__ = ["planted_cut", "random_connected", "clique_path", "generate"]


def planted_cut(
    n_a: int,
    n_b: int,
    c: int,
    seed: int = 0,
    internal_p: float | None = None,
    crossing_weight: int = 1,
    internal_weight: int = 1,
    W: int | None = None,
) -> WeightedMultigraph:
    """Two dense blocks joined by c crossing unit-weight edges.

    Blocks are cliques unless internal_p is given (then Erdos-Renyi with a
    spanning cycle to stay connected). The planted bipartition has weight
    exactly c * crossing_weight and is recorded as metadata. c must stay
    strictly below every vertex's internal degree so the planted cut is the
    unique minimum on clique instances.
    """
    if n_a < 2 or n_b < 2:
        raise GraphValidationError("block sizes must be >= 2")
    if c < 1:
        raise GraphValidationError("need at least one crossing edge")
    rng = stream(seed, "planted", n_a, n_b, c)
    edges: list[tuple[int, int, int]] = []

    def block(offset: int, size: int) -> None:
        if internal_p is None:
            for i in range(size):
                for j in range(i + 1, size):
                    edges.append((offset + i, offset + j, internal_weight))
        else:
            for i in range(size):
                edges.append((offset + i, offset + (i + 1) % size, internal_weight))
            for i in range(size):
                for j in range(i + 2, size):
                    if (i, j) == (0, size - 1):
                        continue
                    if rng.random() < internal_p:
                        edges.append((offset + i, offset + j, internal_weight))
        return None

    block(0, n_a)
    block(n_a, n_b)

    min_internal_degree = min(
        n_a - 1 if internal_p is None else 2, n_b - 1 if internal_p is None else 2
    )
    if c * crossing_weight >= min_internal_degree * internal_weight:
        raise GraphValidationError(
            f"crossing weight {c * crossing_weight} must be below the minimum "
            f"internal degree weight {min_internal_degree * internal_weight}"
        )
    pairs = [(a, n_a + b) for a in range(n_a) for b in range(n_b)]
    picks = rng.choice(len(pairs), size=c, replace=False)
    for idx in sorted(int(x) for x in picks):
        a, b = pairs[idx]
        edges.append((a, b, crossing_weight))

    return WeightedMultigraph.build(
        n_a + n_b,
        edges,
        W=W,
        planted_side=range(n_a),
        planted_weight=c * crossing_weight,
    )


def random_connected(
    n: int,
    extra_edges: int = 0,
    seed: int = 0,
    max_weight: int = 1,
    W: int | None = None,
) -> WeightedMultigraph:
    """Uniform random spanning tree plus extra random non-tree edges."""
    if n < 1:
        raise GraphValidationError("n must be >= 1")
    if n == 1:
        return WeightedMultigraph.build(1, [], W=W)
    rng = stream(seed, "random_connected", n, extra_edges)
    present: set[tuple[int, int]] = set()
    edges: list[tuple[int, int, int]] = []

    def weight() -> int:
        return 1 if max_weight <= 1 else int(rng.integers(1, max_weight + 1))

    if n == 2:
        tree_pairs = [(0, 1)]
    else:
        prufer = [int(x) for x in rng.integers(0, n, size=n - 2)]
        tree_pairs = _prufer_to_edges(n, prufer)
    for u, v in tree_pairs:
        key = (min(u, v), max(u, v))
        present.add(key)
        edges.append((key[0], key[1], weight()))

    budget = n * (n - 1) // 2 - (n - 1)
    for _ in range(min(extra_edges, budget)):
        while True:
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            if key in present:
                continue
            present.add(key)
            edges.append((key[0], key[1], weight()))
            break
    return WeightedMultigraph.build(n, edges, W=W)


def _prufer_to_edges(n: int, prufer: list[int]) -> list[tuple[int, int]]:
    degree = [1] * n
    for x in prufer:
        degree[x] += 1
    edges = []
    leaf_heap = sorted(i for i in range(n) if degree[i] == 1)
    import heapq

    heapq.heapify(leaf_heap)
    for x in prufer:
        leaf = heapq.heappop(leaf_heap)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaf_heap, x)
    u = heapq.heappop(leaf_heap)
    v = heapq.heappop(leaf_heap)
    edges.append((u, v))
    return edges


def clique_path(k: int, length: int, W: int | None = None) -> WeightedMultigraph:
    """Path of `length` cliques of size k, joined by single bridge edges.

    n = k * length, diameter Theta(length): a high-diameter family with
    plenty of local edges.
    """
    if k < 2 or length < 1:
        raise GraphValidationError("need clique size >= 2 and length >= 1")
    edges = []
    for b in range(length):
        off = b * k
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((off + i, off + j, 1))
        if b + 1 < length:
            edges.append((off + k - 1, off + k, 1))
    return WeightedMultigraph.build(k * length, edges, W=W)


def generate(model: str, params: dict, seed: int = 0) -> WeightedMultigraph:
    """Dispatch by model name: planted_cut | random_connected | clique_path."""
    if model == "planted_cut":
        return planted_cut(seed=seed, **params)
    if model == "random_connected":
        return random_connected(seed=seed, **params)
    if model == "clique_path":
        return clique_path(**params)
    raise ValueError(f"unknown generator model {model!r}")
