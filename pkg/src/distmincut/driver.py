"""Approximate minimum cut via skeleton sampling, greedy tree packing, and
statistical testing of tree-induced cuts.

Outer loop: geometric guesses bracket the unknown cut weight; each iteration
samples a skeleton subgraph (unit-copy survival probability 1/2^i), packs
spanning trees greedily by repeated minimum spanning trees on edge loads,
and sweeps a threshold gamma multiplicatively. For each (tree, gamma) the
tester draws k independent skeletons of the *original* graph at per-copy
probability 1 - 2**(-1/kappa) and counts, per tree edge, how often the edge
fails to be a bridge of (skeleton + tree); an edge whose count stays at or
below k/2 + eps'*k/8 exposes a light cut (the subtree below it), returned
with its exact weight.

The k tester trials run batched: the bridge protocol's transcript shape is
sample-independent, so one engine execution per batch fixes rounds and the
bit budget while a vectorized evaluator (asserted against that run) supplies
the per-trial values. Trials draw per-edge presence directly with
probability 1 - 2**(-w/kappa), which is exactly the chance a Binomial(w, q)
copy count is nonzero; only presence feeds the bridge predicate.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .congest import NetworkConfig, NodeCtx, NodeProgram, RoundStats, run
from .graph import (
    SampledSubgraph,
    VertexSide,
    WeightedMultigraph,
    cut_weight,
    sample_subgraph,
)
from .mst import TreePacking, greedy_tree_packing
from .rng import derive_key, stream
from .tree import RootedSpanningTree
from .tree_primitives import (
    _TreeNode,
    compute_preorder,
    decompose,
    find_bridges_batch,
)

logger = logging.getLogger(__name__)

__all__ = [
    "EpsilonSchedule",
    "PackingPolicy",
    "PackingCountTooLarge",
    "NoCutFoundError",
    "CutResult",
    "TraceEntry",
    "LabeledTree",
    "solve_epsilon_prime",
    "sweep_gammas",
    "outer_iteration_bound",
    "inner_iteration_cap",
    "prepare_tree",
    "test_tree_cut",
    "side_marking",
    "approx_min_cut",
]

TRIAL_BATCH_ROWS = 4096


class PackingCountTooLarge(RuntimeError):
    """The requested packing size exceeds the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"packing of {count} trees exceeds cap {cap}")
        self.count = count
        self.cap = cap


class NoCutFoundError(RuntimeError):
    """Every iteration finished without the tester returning a cut."""

    def __init__(self, stats: RoundStats, trace: list):
        super().__init__("no cut found after the final iteration")
        self.stats = stats
        self.trace = trace


def solve_epsilon_prime(epsilon: float) -> float:
    """Root of (1+x)**3 / (1-x) = 1 + epsilon in (0, min(1, epsilon)).

    Bisection; the map is strictly increasing, the result satisfies the
    equation to absolute residual <= 1e-12.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    target = 1.0 + epsilon

    def f(x: float) -> float:
        return (1.0 + x) ** 3 / (1.0 - x)

    lo, hi = 0.0, min(1.0 - 1e-12, epsilon)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    if abs(f(x) - target) > 1e-12:
        raise ArithmeticError(f"bisection residual too large at epsilon={epsilon}")
    return x


@dataclass(frozen=True)
class EpsilonSchedule:
    """Derived accuracy parameters and the tester's trial budget.

    k follows ceil(128 * ln n / eps'^2): the count failure bound
    exp(-eps'^2 k / 32) is then at most n**-4, which survives a union bound
    over the n-1 tree edges at desk scale. trial_cap, when set, bounds k for
    runtime (the statistical acceptance gates hold far below the formula).
    """

    epsilon: float
    epsilon_prime: float
    k: int
    theta: float
    n: int
    trial_cap: int | None = None

    @classmethod
    def for_graph(cls, epsilon: float, n: int, trial_cap: int | None = None) -> "EpsilonSchedule":
        if n < 2:
            raise ValueError("schedule needs n >= 2")
        ep = solve_epsilon_prime(epsilon)
        k = math.ceil(128.0 * math.log(n) / ep**2)
        if trial_cap is not None:
            k = max(1, min(k, trial_cap))
        theta = k / 2.0 + ep * k / 8.0
        return cls(epsilon=epsilon, epsilon_prime=ep, k=k, theta=theta, n=n, trial_cap=trial_cap)


def sweep_gammas(x_lo: float, x_hi: float, epsilon_prime: float) -> list[float]:
    """Threshold sweep for one iteration: x_lo, then multiply by (1+eps')
    until the value exceeds ((1+eps')/(1-eps')) * x_hi. Consecutive test
    intervals [gamma, (1+eps')*gamma] tile the bracket with no gaps."""
    bound = (1.0 + epsilon_prime) / (1.0 - epsilon_prime) * x_hi
    out = [x_lo]
    while out[-1] <= bound:
        out.append(out[-1] * (1.0 + epsilon_prime))
    return out  # last value exceeds the bound; the sweep stops after it


def outer_iteration_bound(n: int, W: int) -> int:
    return math.ceil(math.log2(n * W)) + 1


def inner_iteration_cap(n: int, W: int, epsilon_prime: float) -> int:
    return math.ceil(4.0 * math.log(n * W) / epsilon_prime)


@dataclass(frozen=True)
class PackingPolicy:
    """How many trees each iteration packs.

    paper: ceil(96 * ((1+eps')*20*ln n/eps'^2 + 1)**7 * ln(m)**3) with m the
    skeleton's multiedge count; astronomically large at any usable size, so
    it refuses to run above paper_cap rather than silently substituting.
    karger: ceil(c_pack * lambda_hat * ln n) with lambda_hat the scaled-down
    upper bracket capped at lambda_max; small packings empirically contain a
    once-crossing tree and everything returned is exactness-checked.
    fixed: an explicit count for experiments.
    """

    mode: str = "karger"
    fixed_count: int | None = None
    c_pack: float = 2.0
    lambda_max: float = 2.0
    paper_cap: int = 10_000

    def count(self, schedule: EpsilonSchedule, n: int, m_multi: int) -> int:
        ep = schedule.epsilon_prime
        if self.mode == "paper":
            lam_bound = (1.0 + ep) * 20.0 * math.log(n) / ep**2
            count = math.ceil(96.0 * (lam_bound + 1.0) ** 7 * math.log(max(m_multi, 2)) ** 3)
            if count > self.paper_cap:
                raise PackingCountTooLarge(count, self.paper_cap)
            return max(1, count)
        if self.mode == "karger":
            lam_hat = min((1.0 + ep) * 20.0 * math.log(n) / ep**2, self.lambda_max)
            return max(1, math.ceil(self.c_pack * lam_hat * math.log(n)))
        if self.mode == "fixed":
            if self.fixed_count is None or self.fixed_count < 1:
                raise ValueError("fixed policy needs fixed_count >= 1")
            return self.fixed_count
        raise ValueError(f"unknown packing mode {self.mode!r}")


@dataclass(frozen=True)
class LabeledTree:
    """A packed tree with its decomposition and order labels over the host
    graph's communication network (labels do not depend on any sample)."""

    tree: RootedSpanningTree
    frags: object
    pre: tuple[int, ...]
    size: tuple[int, ...]


@dataclass(frozen=True)
class CutSource:
    iteration: int
    tree_index: int
    edge: tuple[int, int]  # (parent, child)
    gamma: float


@dataclass(frozen=True)
class CutResult:
    side: VertexSide
    weight: int
    source: CutSource


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    gamma: float
    kappa: float
    tree_index: int
    returned: bool
    weight: int | None = None
    note: str = ""


def prepare_tree(
    g: WeightedMultigraph, tree: RootedSpanningTree, config: NetworkConfig
) -> tuple[LabeledTree, RoundStats]:
    frags, s1 = decompose(g, tree, config)
    pre, size, s2 = compute_preorder(g, tree, frags, config)
    return LabeledTree(tree=tree, frags=frags, pre=pre, size=size), s1.merge(s2)


def side_marking(
    tree: RootedSpanningTree, pre, size, edge: tuple[int, int]
) -> VertexSide:
    """Vertex set below a tree edge: every vertex checks its preorder number
    against the child's contiguous range, so membership is locally
    decidable."""
    u, v = edge
    if tree.parent[v] == u:
        child = v
    elif tree.parent[u] == v:
        child = u
    else:
        raise ValueError(f"edge {edge} is not a tree edge")
    lo = pre[child]
    hi = pre[child] + size[child] - 1
    members = {x for x in range(tree.n) if lo <= pre[x] <= hi}
    return VertexSide.of(members, tree.n)


# one convergecast: minimum (count, preorder) among tree edges


_G_AGG = 0


class _ArgminProgram(NodeProgram):
    def __init__(self, tree: RootedSpanningTree, values, sum_bits: int):
        self.tree = tree
        self.values = values  # per vertex: (count, pre); root holds sentinel
        self.sum_bits = sum_bits

    def schema(self):
        return {_G_AGG: (self.sum_bits, "vid")}

    def init(self, ctx: NodeCtx):
        st = _TreeNode(ctx, self.tree.parent[ctx.vid], self.tree.children(ctx.vid))
        st.recv = {}
        st.best = None
        st.emitted = False
        return st

    def _try_emit(self, st, vid):
        if st.emitted or any(c not in st.recv for c in st.children):
            return
        st.emitted = True
        st.best = min([tuple(self.values[vid])] + list(st.recv.values()))
        if st.parent != vid:
            st.up(_G_AGG, *st.best)

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        for nbr, rec in st.records(inbox):
            st.recv[nbr] = (rec[1], rec[2])
            self._try_emit(st, ctx.vid)
        if rnd == 1:
            self._try_emit(st, ctx.vid)
        st.done = st.emitted
        st.pump(out)
        return st, out, st.vote(out)


def _presence_probabilities(g: WeightedMultigraph, kappa: float) -> np.ndarray:
    """Per-edge chance that at least one of the w unit copies survives
    sampling at rate 1 - 2**(-1/kappa): exactly 1 - 2**(-w/kappa)."""
    ws = np.array([w for _, _, w in g.edges], dtype=np.float64)
    return 1.0 - np.exp2(-ws / kappa)


def test_tree_cut(
    g: WeightedMultigraph,
    labeled: LabeledTree,
    kappa: float,
    sched: EpsilonSchedule,
    seed: int,
    config: NetworkConfig,
) -> tuple[CutResult | None, RoundStats]:
    """k independent skeleton trials against one tree; returns the cut below
    the tree edge whose not-a-bridge count stays at or below the threshold
    (ties to the smallest preorder), with its exact weight, or None."""
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    tree, frags, pre, size = labeled.tree, labeled.frags, labeled.pre, labeled.size
    n = g.n
    k = sched.k
    probs = _presence_probabilities(g, kappa)
    rng = stream(seed, "tester", round(kappa, 9))
    stats = RoundStats()
    y_sum = np.zeros(n, dtype=np.int64)
    done_rows = 0
    while done_rows < k:
        rows = min(TRIAL_BATCH_ROWS, k - done_rows)
        exist = rng.random((rows, g.m)) < probs[None, :]
        flags, s = find_bridges_batch(g, tree, frags, pre, size, exist, config)
        y_sum += rows - flags.sum(axis=0, dtype=np.int64)  # Y = not a bridge
        stats = stats.merge(s)
        done_rows += rows

    # one distributed argmin over (count, preorder) decides the return
    sentinel = k + 1
    values = [(int(y_sum[v]), pre[v]) for v in range(n)]
    values[tree.root] = (sentinel, pre[tree.root])
    sum_bits = max(1, math.ceil(math.log2(sentinel + 1)))
    prog = _ArgminProgram(tree, values, sum_bits)
    states, s = run(g, prog, config, phase="tester-decision")
    stats = stats.merge(s)
    best_count, best_pre = states[tree.root].best

    if best_count > sched.theta:
        return None, stats
    child = pre.index(best_pre)
    side = side_marking(tree, pre, size, (tree.parent[child], child))
    weight = cut_weight(g, side)
    result = CutResult(
        side=side,
        weight=weight,
        source=CutSource(iteration=-1, tree_index=-1, edge=(tree.parent[child], child), gamma=0.0),
    )
    return result, stats


def _packing_key(g: WeightedMultigraph, mult: tuple[int, ...], count: int, bits) -> str:
    h = hashlib.sha256()
    h.update(repr((g.n, g.edges, mult, count, bits)).encode())
    return h.hexdigest()


def approx_min_cut(
    g: WeightedMultigraph,
    epsilon: float,
    policy: PackingPolicy,
    seed: int,
    config: NetworkConfig,
    trial_cap: int | None = 1024,
    exhaustive: bool = False,
    lambda_bounds: tuple[float, float] | None = None,
    packing_cache: dict | None = None,
) -> tuple[CutResult, RoundStats, list[TraceEntry]]:
    """Full approximation loop; returns the first cut the tester finds (or
    the lightest over the whole schedule with exhaustive=True), its exact
    weight in g, round statistics, and the decision trace.

    trial_cap bounds the tester's trials per call for runtime; None runs the
    full schedule formula. lambda_bounds optionally clamps the outer loop to
    iterations whose bracket intersects [lo, hi] (an externally supplied
    constant-factor estimate; no estimator is built in).
    """
    n = g.n
    if n < 2:
        raise ValueError("need at least 2 vertices")
    sched = EpsilonSchedule.for_graph(epsilon, n, trial_cap)
    ep = sched.epsilon_prime
    nW = n * g.W
    x_base = 20.0 * math.log(n) / ep**2
    stats = RoundStats()
    trace: list[TraceEntry] = []
    best: CutResult | None = None
    outer_limit = outer_iteration_bound(n, g.W)
    inner_cap = inner_iteration_cap(n, g.W, ep)
    inner_total = 0
    outer_count = 0

    i = 0
    x_i = 1.0
    while True:
        x_next = (2.0**i) * x_base
        outer_count += 1
        if outer_count > outer_limit:
            raise AssertionError("outer iteration bound exceeded")
        skip = lambda_bounds is not None and (
            x_next < lambda_bounds[0] or x_i > lambda_bounds[1]
        )
        if not skip:
            p = 1.0 / (2.0**i)
            sample = sample_subgraph(g, p, seed, label=("skeleton", i))
            if not sample.is_connected():
                logger.warning("skeleton at iteration %d disconnected; skipping", i)
                trace.append(TraceEntry(i, 0.0, 0.0, -1, False, note="skeleton disconnected"))
            else:
                m_multi = sample.total
                count = policy.count(sched, n, m_multi)
                key = _packing_key(g, sample.multiplicity, count, config.bits)
                cached = packing_cache.get(key) if packing_cache is not None else None
                if cached is None:
                    packing, pstats = greedy_tree_packing(sample, count, config)
                    labeled_trees = []
                    for t in packing.trees:
                        lt, ls = prepare_tree(g, t, config)
                        labeled_trees.append(lt)
                        pstats = pstats.merge(ls)
                    if packing_cache is not None:
                        packing_cache[key] = (packing, labeled_trees, pstats)
                else:
                    packing, labeled_trees, pstats = cached
                stats = stats.merge(pstats)

                gamma = x_i
                while True:
                    inner_total += 1
                    if inner_total > inner_cap:
                        raise AssertionError("inner iteration cap exceeded")
                    kappa = (1.0 + ep) * gamma
                    for t_idx, lt in enumerate(labeled_trees):
                        res, ts = test_tree_cut(
                            g, lt, kappa, sched, derive_key(seed, "trial", i, t_idx, round(gamma, 9)) % (2**63), config
                        )
                        stats = stats.merge(ts)
                        if res is not None:
                            res = CutResult(
                                side=res.side,
                                weight=res.weight,
                                source=CutSource(i, t_idx, res.source.edge, gamma),
                            )
                            assert res.weight == cut_weight(g, res.side)
                            trace.append(TraceEntry(i, gamma, kappa, t_idx, True, res.weight))
                            if not exhaustive:
                                return res, stats, trace
                            if best is None or res.weight < best.weight:
                                best = res
                        else:
                            trace.append(TraceEntry(i, gamma, kappa, t_idx, False))
                    gamma *= 1.0 + ep
                    if gamma > (1.0 + ep) / (1.0 - ep) * x_next:
                        break
        if x_next > nW:
            break
        i += 1
        x_i = x_next

    if best is not None:
        return best, stats, trace
    raise NoCutFoundError(stats, trace)
