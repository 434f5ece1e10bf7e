"""Distributed minimum spanning tree and greedy tree packing.

Component-merging phases over the round engine: each phase every component
convergecasts its minimum outgoing copy under the shared total order
(load, min id, max id, copy index), merges along the chosen edges, and
re-roots at the mutual pair's smaller endpoint. Keys are globally distinct,
so the result is the unique minimum tree and must equal the centralized
reference exactly. Phases run on a fixed round budget (local computation is
free, rounds are honestly counted; this machinery makes no O(D + sqrt n)
claim and is excluded from the round-scaling acceptance).

Packing is sequential: tree i+1 is a minimum spanning tree against the loads
of trees 1..i; a tree occupies one specific parallel copy of each edge it
uses and both endpoints record the load locally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import SimpleNamespace

from .congest import (
    NetworkConfig,
    NodeCtx,
    NodeProgram,
    RecordAssembler,
    RecordLink,
    RoundStats,
    run,
)
from .graph import SampledSubgraph, WeightedMultigraph
from .tree import RootedSpanningTree, edge_copy_key, orient_edges

__all__ = [
    "EdgeLoad",
    "TreePacking",
    "distributed_mst",
    "greedy_tree_packing",
    "pack_view",
]


@dataclass
class EdgeLoad:
    """Per-parallel-copy tree counts, keyed (u, v, copy) with u < v."""

    counts: dict[tuple[int, int, int], int] = field(default_factory=dict)

    def get_copy(self, u: int, v: int, copy: int) -> int:
        if u > v:
            u, v = v, u
        return self.counts.get((u, v, copy), 0)

    def add(self, u: int, v: int, copy: int) -> None:
        if u > v:
            u, v = v, u
        self.counts[(u, v, copy)] = self.counts.get((u, v, copy), 0) + 1

    def total(self) -> int:
        return sum(self.counts.values())

    def max_load(self) -> int:
        return max(self.counts.values(), default=0)


@dataclass(frozen=True)
class TreePacking:
    """Multiset of spanning trees with the loads they induce."""

    trees: tuple[RootedSpanningTree, ...]
    loads: EdgeLoad
    copies: tuple[tuple[tuple[int, int, int], ...], ...]  # per tree: (u,v,copy)

    @property
    def count(self) -> int:
        return len(self.trees)


def pack_view(g_or_sample) -> tuple[int, list[tuple[int, int, int]]]:
    """(n, copies) where copies lists every parallel unit copy (u, v, copy)."""
    if isinstance(g_or_sample, SampledSubgraph):
        n = g_or_sample.base.n
        copies = [
            (u, v, c)
            for (u, v, _), mult in zip(g_or_sample.base.edges, g_or_sample.multiplicity)
            for c in range(mult)
        ]
    else:
        n = g_or_sample.n
        copies = [(u, v, c) for u, v, w in g_or_sample.edges for c in range(w)]
    return n, copies


_M_COMP, _M_CAND, _M_NOCAND, _M_WIN, _M_MREQ, _M_REROOT, _M_DONE = range(7)


class _MstProgram(NodeProgram):
    """Synchronized component-merging phases with a fixed per-phase budget."""

    def __init__(self, n: int, incident, load_bits: int, copy_bits: int, chunk_est: int):
        self.n = n
        self.incident = incident  # per vertex: tuple of (nbr, copy, load)
        self.incident_nbr_count = [len({nbr for nbr, _, _ in inc}) for inc in incident]
        self.load_bits = load_bits
        self.copy_bits = copy_bits
        # per-phase budget: COMP exchange + convergecast + broadcast + merge,
        # each hop possibly chunked
        self.P = n * (2 * chunk_est + 1) + 16
        self.max_phases = math.ceil(math.log2(max(n, 2))) + 2

    def schema(self):
        key = (self.load_bits, "vid", "vid", self.copy_bits)
        return {
            _M_COMP: ("vid",),
            _M_CAND: key,
            _M_NOCAND: (),
            _M_WIN: key,
            _M_MREQ: (self.copy_bits,),
            _M_REROOT: ("vid",),
            _M_DONE: (),
        }

    def init(self, ctx: NodeCtx):
        st = SimpleNamespace()
        st.comp = ctx.vid
        st.comp_parent = None          # None: leader of own component
        st.tree_nbrs = set()           # chosen-edge adjacency (vertex pairs)
        st.chosen = set()              # chosen copies (nbr, copy)
        st.links = {n: RecordLink(ctx.codec, ctx.bits) for n in ctx.neighbors}
        st.asm = {n: RecordAssembler(ctx.codec) for n in ctx.neighbors}
        st.num_nbrs = len(ctx.neighbors)
        st.done = False
        self._reset_phase(st)
        return st

    def _reset_phase(self, st):
        st.nbr_comp = {}
        snap_parent = st.comp_parent
        st.snap_parent = snap_parent
        st.snap_children = tuple(
            sorted(st.tree_nbrs - ({snap_parent} if snap_parent is not None else set()))
        )
        st.cand_recv = {}
        st.cand_sent = False
        st.mreq_sent = None       # (nbr, copy) if sent
        st.mreq_recv = {}         # nbr -> copy
        st.winner = None
        st.rerooted = False
        st.reroot_id = None
        st.reroot_forwarded = set()

    def _local_candidate(self, st, vid):
        best = None
        comp = st.comp
        for nbr, copy, load in self.incident[vid]:
            if st.nbr_comp.get(nbr) == comp:
                continue
            key = edge_copy_key(load, vid, nbr, copy)
            if best is None or key < best:
                best = key
        return best

    def _try_converge(self, st, vid):
        if st.cand_sent or len(st.nbr_comp) < st.num_nbrs:
            return
        if any(c not in st.cand_recv for c in st.snap_children):
            return
        st.cand_sent = True
        cands = [st.cand_recv[c] for c in st.snap_children if st.cand_recv[c] is not None]
        local = self._local_candidate(st, vid)
        if local is not None:
            cands.append(local)
        best = min(cands) if cands else None
        if st.snap_parent is not None:
            if best is None:
                st.links[st.snap_parent].send(_M_NOCAND)
            else:
                st.links[st.snap_parent].send(_M_CAND, *best)
        else:
            st.winner = best
            if best is None:
                # my component spans the graph: finished
                st.done = True
                for c in st.snap_children:
                    st.links[c].send(_M_DONE)
            else:
                for c in st.snap_children:
                    st.links[c].send(_M_WIN, *best)
                self._maybe_claim(st, vid, best)

    def _maybe_claim(self, st, vid, key):
        _, a, b, copy = key
        if vid in (a, b):
            other = b if vid == a else a
            self._mark_chosen(st, other, copy)
            st.links[other].send(_M_MREQ, copy)
            st.mreq_sent = (other, copy)
            self._check_mutual(st, vid, other, copy)

    def _mark_chosen(self, st, nbr, copy):
        st.chosen.add((nbr, copy))
        if nbr not in st.tree_nbrs:
            st.tree_nbrs.add(nbr)
            # a re-root that already swept past must still reach late joiners
            if st.rerooted and nbr not in st.reroot_forwarded:
                st.reroot_forwarded.add(nbr)
                st.links[nbr].send(_M_REROOT, st.reroot_id)

    def _check_mutual(self, st, vid, nbr, copy):
        if st.mreq_sent == (nbr, copy) and st.mreq_recv.get(nbr) == copy:
            new_id = min(vid, nbr)
            if vid == new_id and not st.rerooted:
                self._reroot(st, new_id, sender=None)

    def _reroot(self, st, new_id, sender):
        st.rerooted = True
        st.reroot_id = new_id
        st.comp = new_id
        st.comp_parent = sender
        if sender is not None:
            st.reroot_forwarded.add(sender)
        for t in sorted(st.tree_nbrs):
            if t not in st.reroot_forwarded:
                st.reroot_forwarded.add(t)
                st.links[t].send(_M_REROOT, new_id)

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        vid = ctx.vid
        pr = (rnd - 1) % self.P
        phase = (rnd - 1) // self.P
        if pr == 0 and not st.done:
            if phase >= self.max_phases:
                raise RuntimeError("component merging failed to converge")
            self._reset_phase(st)
            for nbr in ctx.neighbors:
                out[nbr] = (_M_COMP, st.comp)
        for nbr in sorted(inbox):
            rec = st.asm[nbr].push(inbox[nbr])
            if rec is None:
                continue
            tag = rec[0]
            if tag == _M_COMP:
                st.nbr_comp[nbr] = rec[1]
            elif tag == _M_CAND:
                st.cand_recv[nbr] = tuple(rec[1:])
            elif tag == _M_NOCAND:
                st.cand_recv[nbr] = None
            elif tag == _M_WIN:
                key = tuple(rec[1:])
                st.winner = key
                for c in st.snap_children:
                    st.links[c].send(_M_WIN, *key)
                self._maybe_claim(st, vid, key)
            elif tag == _M_MREQ:
                copy = rec[1]
                st.mreq_recv[nbr] = copy
                self._mark_chosen(st, nbr, copy)
                self._check_mutual(st, vid, nbr, copy)
            elif tag == _M_REROOT:
                if not st.rerooted:
                    self._reroot(st, rec[1], sender=nbr)
            elif tag == _M_DONE:
                if not st.done:
                    st.done = True
                    for c in st.snap_children:
                        st.links[c].send(_M_DONE)
        if not st.done and pr >= 1:
            self._try_converge(st, vid)
        for nbr, link in st.links.items():
            if link.pending():
                msg = link.pump()
                if msg is not None:
                    assert nbr not in out
                    out[nbr] = msg
        idle = all(not l.pending() for l in st.links.values())
        return st, out, st.done and idle and not out


_A_OFFER = 0


class _AdoptProgram(NodeProgram):
    """BFS orientation of a chosen edge set from vertex 0; parents resolve
    to the smallest-id offerer of the earliest round."""

    def __init__(self, tree_nbrs):
        self.tree_nbrs = tree_nbrs

    def schema(self):
        return {_A_OFFER: ()}

    def init(self, ctx: NodeCtx):
        st = SimpleNamespace()
        st.parent = 0 if ctx.vid == 0 else None
        st.offered = False
        return st

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        vid = ctx.vid
        if st.parent is None and inbox:
            offers = [nbr for nbr in inbox if inbox[nbr][0] == _A_OFFER]
            if offers:
                st.parent = min(offers)
        if st.parent is not None and not st.offered:
            st.offered = True
            for nbr in self.tree_nbrs[vid]:
                if nbr != st.parent or vid == 0:
                    out[nbr] = (_A_OFFER,)
        return st, out, st.parent is not None and st.offered and not out


def _mst_with_copies(
    g_or_sample,
    loads: EdgeLoad | None,
    config: NetworkConfig,
    max_load_bound: int | None = None,
) -> tuple[RootedSpanningTree, tuple[tuple[int, int, int], ...], RoundStats]:
    n, copies = pack_view(g_or_sample)
    if n == 1:
        return (
            RootedSpanningTree(root=0, parent=(0,)),
            (),
            RoundStats(phases={"mst": 0}),
        )
    base = g_or_sample.base if isinstance(g_or_sample, SampledSubgraph) else g_or_sample
    if isinstance(g_or_sample, SampledSubgraph) and not g_or_sample.is_connected():
        raise ValueError("sampled subgraph is not connected")

    loads = loads or EdgeLoad()
    incident: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    max_load = 0
    max_copy = 1
    for u, v, c in copies:
        ld = loads.get_copy(u, v, c)
        max_load = max(max_load, ld)
        max_copy = max(max_copy, c + 1)
        incident[u].append((v, c, ld))
        incident[v].append((u, c, ld))
    if max_load_bound is not None:
        max_load = max(max_load, max_load_bound)
    load_bits = max(1, math.ceil(math.log2(max_load + 1)))
    copy_bits = max(1, math.ceil(math.log2(max_copy)))

    bits = config.resolve_bits(n)
    vid_bits = max(1, math.ceil(math.log2(max(n, 2))))
    key_bits = 4 + load_bits + 2 * vid_bits + copy_bits
    chunk_est = 1 if key_bits <= bits else math.ceil((key_bits - 4) / (bits - 5))

    prog = _MstProgram(n, [tuple(i) for i in incident], load_bits, copy_bits, chunk_est)
    states, stats = run(base, prog, config, phase="mst")

    chosen: set[tuple[int, int, int]] = set()
    for vid, st in enumerate(states):
        for nbr, copy in st.chosen:
            chosen.add((min(vid, nbr), max(vid, nbr), copy))
    if len(chosen) != n - 1:
        raise AssertionError(f"chose {len(chosen)} edges, expected {n - 1}")

    tree_nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v, _ in chosen:
        tree_nbrs[u].add(v)
        tree_nbrs[v].add(u)
    adopt = _AdoptProgram([tuple(sorted(s)) for s in tree_nbrs])
    astates, astats = run(base, adopt, config, phase="orient")
    parent = tuple(s.parent for s in astates)
    tree = RootedSpanningTree(root=0, parent=parent)
    central = orient_edges(n, [(u, v) for u, v, _ in chosen])
    if central.parent != tree.parent:
        raise AssertionError("distributed orientation diverged from BFS rule")
    return tree, tuple(sorted(chosen)), stats.merge(astats)


def distributed_mst(
    g_or_sample, loads: EdgeLoad | None, config: NetworkConfig
) -> tuple[RootedSpanningTree, RoundStats]:
    """Spanning tree minimizing total load under the shared copy order,
    rooted at vertex 0 with BFS orientation."""
    tree, _, stats = _mst_with_copies(g_or_sample, loads, config)
    return tree, stats


def greedy_tree_packing(
    g_or_sample, count: int, config: NetworkConfig
) -> tuple[TreePacking, RoundStats]:
    """count spanning trees, each minimum against its predecessors' loads."""
    if count < 1:
        raise ValueError("packing needs at least one tree")
    loads = EdgeLoad()
    trees = []
    copies_used = []
    stats = RoundStats()
    n, _ = pack_view(g_or_sample)
    for i in range(count):
        tree, chosen, s = _mst_with_copies(
            g_or_sample, loads, config, max_load_bound=i
        )
        trees.append(tree)
        copies_used.append(chosen)
        stats = stats.merge(s)
        for u, v, c in chosen:
            loads.add(u, v, c)
    packing = TreePacking(trees=tuple(trees), loads=loads, copies=tuple(copies_used))
    if loads.total() != count * (n - 1):
        raise AssertionError("load conservation violated")
    return packing, stats
