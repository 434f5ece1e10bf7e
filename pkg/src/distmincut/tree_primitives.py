"""Distributed tree machinery over the round engine.

Operations: fragment decomposition of a spanning tree, preorder/subtree-size
labeling, subtree reach labels against a sampled subgraph, bridge detection
for all tree edges at once, and generic pipelined upcast/downcast of one
record per fragment root.

All protocols are event driven: every send is queued on a per-tree-edge
record link the moment its trigger arrives, links pump at most one message
per round, and the engine stops at global quiescence (every node done and
idle in the same round). Records wider than the budget stream as chunks.

find_bridges_batch evaluates many independent sampled subgraphs against one
fixed tree. The label protocol's transcript shape (links used, rounds,
message widths) does not depend on the sampled values, so one engine
execution fixes the round/bit schedule and budget check for every trial; the
remaining trials' label values are computed by an equivalent vectorized
evaluation that is asserted against the engine run on trial 0 every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .congest import (
    MessageCodec,
    NetworkConfig,
    NodeCtx,
    NodeProgram,
    RecordAssembler,
    RecordLink,
    RoundStats,
    run,
)
from .graph import SampledSubgraph, WeightedMultigraph
from .tree import FragmentDecomposition, RootedSpanningTree

__all__ = [
    "decompose",
    "derive_fragment_structure",
    "FragStructure",
    "compute_preorder",
    "compute_low_high",
    "find_bridges",
    "bridge_flags_from_labels",
    "find_bridges_batch",
    "upcast",
    "downcast",
    "UpcastRecordTooLarge",
]


class UpcastRecordTooLarge(ValueError):
    """A generic upcast/downcast record does not fit in one message."""


# --------------------------------------------------------------------------
# shared per-node protocol state


class _TreeNode:
    """Record links and assemblers for one vertex of a tree protocol."""

    def __init__(self, ctx: NodeCtx, parent: int, children: tuple[int, ...]):
        self.vid = ctx.vid
        self.parent = parent
        self.children = children
        self.uplink = RecordLink(ctx.codec, ctx.bits) if parent != ctx.vid else None
        self.downlinks = {c: RecordLink(ctx.codec, ctx.bits) for c in children}
        self.asm = {n: RecordAssembler(ctx.codec) for n in ctx.neighbors}
        self.done = False
        self.sent_this_round = False

    def up(self, tag: int, *fields) -> None:
        self.uplink.send(tag, *fields)

    def down(self, child: int, tag: int, *fields) -> None:
        self.downlinks[child].send(tag, *fields)

    def records(self, inbox: dict) -> list[tuple[int, tuple]]:
        """Completed (sender, record) pairs, senders in ascending order."""
        out = []
        for nbr in sorted(inbox):
            rec = self.asm[nbr].push(inbox[nbr])
            if rec is not None:
                out.append((nbr, rec))
        return out

    def pump(self, out: dict) -> None:
        if self.uplink is not None and self.uplink.pending():
            msg = self.uplink.pump()
            if msg is not None:
                assert self.parent not in out
                out[self.parent] = msg
        for c, link in self.downlinks.items():
            if link.pending():
                msg = link.pump()
                if msg is not None:
                    assert c not in out
                    out[c] = msg

    def idle(self) -> bool:
        if self.uplink is not None and self.uplink.pending():
            return False
        return all(not l.pending() for l in self.downlinks.values())

    def vote(self, out: dict) -> bool:
        return self.done and not out and self.idle()


# --------------------------------------------------------------------------
# fragment decomposition


_D_REPORT, _D_ASSIGN, _D_FRAG, _D_UPREC = 0, 1, 2, 3


class _DecomposeProgram(NodeProgram):
    """Bottom-up fragment growth: a vertex closes the fragment pending at it
    once the pending subtree reaches ceil(sqrt(n)) vertices (the tree root
    always closes). Ends with a contracted-tree upcast of (fragment,
    parent fragment) pairs so the root knows the fragment topology."""

    def __init__(self, tree: RootedSpanningTree):
        self.tree = tree
        self.threshold = math.ceil(math.sqrt(tree.n))

    def schema(self):
        return {
            _D_REPORT: ("size",),
            _D_ASSIGN: ("vid",),
            _D_FRAG: ("vid",),
            _D_UPREC: ("vid", "vid"),
        }

    def init(self, ctx: NodeCtx):
        st = _TreeNode(ctx, self.tree.parent[ctx.vid], self.tree.children(ctx.vid))
        st.reports = {}
        st.open_children = []
        st.reported = False
        st.frag = -1
        st.frag_announced = False
        st.nbr_frag = {}
        st.uprec_sent = False
        st.contracted = {}  # root only: fid -> parent fid
        return st

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        is_root = st.parent == st.vid
        for nbr, rec in st.records(inbox):
            tag = rec[0]
            if tag == _D_REPORT:
                st.reports[nbr] = rec[1]
            elif tag == _D_ASSIGN:
                st.frag = rec[1]
                for c in st.open_children:
                    st.down(c, _D_ASSIGN, st.frag)
            elif tag == _D_FRAG:
                st.nbr_frag[nbr] = rec[1]
            elif tag == _D_UPREC:
                if is_root:
                    st.contracted[rec[1]] = rec[2]
                else:
                    st.up(_D_UPREC, rec[1], rec[2])

        if st.frag < 0 and len(st.reports) == len(st.children) and not st.reported:
            st.reported = True
            st.open_children = sorted(c for c in st.children if st.reports[c] > 0)
            pending = 1 + sum(st.reports[c] for c in st.open_children)
            if is_root or pending >= self.threshold:
                st.frag = st.vid
                for c in st.open_children:
                    st.down(c, _D_ASSIGN, st.frag)
                if not is_root:
                    st.up(_D_REPORT, 0)
            else:
                st.up(_D_REPORT, pending)

        if st.frag >= 0 and not st.frag_announced:
            st.frag_announced = True
            for c in st.children:
                st.down(c, _D_FRAG, st.frag)
            if not is_root:
                st.up(_D_FRAG, st.frag)

        if (
            st.frag == st.vid
            and not is_root
            and not st.uprec_sent
            and st.parent in st.nbr_frag
        ):
            st.uprec_sent = True
            st.up(_D_UPREC, st.vid, st.nbr_frag[st.parent])

        st.done = st.frag >= 0 and st.frag_announced and (
            is_root or st.frag != st.vid or st.uprec_sent
        )
        st.pump(out)
        return st, out, st.vote(out)


def decompose(
    g: WeightedMultigraph, tree: RootedSpanningTree, config: NetworkConfig
) -> tuple[FragmentDecomposition, RoundStats]:
    """Partition the tree into <= 2*ceil(sqrt(n)) connected fragments of
    tree-diameter <= 2*ceil(sqrt(n)); every vertex ends up knowing its
    fragment id (the fragment root's id)."""
    n = tree.n
    if n == 1:
        return FragmentDecomposition(fragment_of=(0,), count=1), RoundStats(
            rounds_elapsed=0, phases={"decompose": 0}
        )
    prog = _DecomposeProgram(tree)
    states, stats = run(g, prog, config, phase="decompose")
    frag_of = tuple(st.frag for st in states)
    frags = FragmentDecomposition(fragment_of=frag_of, count=len(set(frag_of)))
    _check_decomposition(tree, frags)
    # the root's collected contracted tree must match the central derivation
    derived = derive_fragment_structure(tree, frags)
    assert states[tree.root].contracted == {
        f: p for f, p in derived.contracted_parent.items() if p != f
    }
    return frags, stats


def _check_decomposition(tree: RootedSpanningTree, frags: FragmentDecomposition) -> None:
    n = tree.n
    bound = 2 * math.ceil(math.sqrt(n))
    if frags.count > bound:
        raise AssertionError(f"{frags.count} fragments exceeds bound {bound}")
    members = frags.members()
    for fid, verts in members.items():
        vs = set(verts)
        if fid not in vs:
            raise AssertionError(f"fragment {fid} does not contain its root")
        roots = [v for v in verts if v == tree.root or tree.parent[v] not in vs]
        if roots != [fid]:
            raise AssertionError(f"fragment {fid} has roots {roots}")
        # connectivity + diameter within the fragment
        adj = {v: [] for v in verts}
        for v in verts:
            p = tree.parent[v]
            if v != tree.root and p in vs:
                adj[v].append(p)
                adj[p].append(v)
        for src in (fid,):
            dist = {src: 0}
            frontier = [src]
            while frontier:
                nxt = []
                for x in frontier:
                    for y in adj[x]:
                        if y not in dist:
                            dist[y] = dist[x] + 1
                            nxt.append(y)
                frontier = nxt
            if set(dist) != vs:
                raise AssertionError(f"fragment {fid} is not connected")
            ecc = max(dist.values())
        if 2 * ecc > 2 * bound:  # diameter <= 2*ecc from the root
            raise AssertionError(f"fragment {fid} diameter bound exceeded")


@dataclass(frozen=True)
class FragStructure:
    """Per-vertex fragment-aware adjacency derived from a decomposition.

    Mirrors exactly what each vertex learned during decompose (its own and
    its tree neighbors' fragment ids), plus the contracted tree the root
    assembled from the (fragment, parent fragment) upcast.
    """

    internal_children: tuple[tuple[int, ...], ...]
    external_children: tuple[tuple[int, ...], ...]
    contracted_parent: dict[int, int]  # fid -> parent fid (root frag maps to itself)
    frag_children: dict[int, list[int]]  # contracted tree, children sorted

    def contracted_preorder(self, root_fid: int) -> list[int]:
        order = []
        stack = [root_fid]
        while stack:
            f = stack.pop()
            order.append(f)
            for c in reversed(self.frag_children.get(f, ())):
                stack.append(c)
        return order


def derive_fragment_structure(
    tree: RootedSpanningTree, frags: FragmentDecomposition
) -> FragStructure:
    n = tree.n
    fof = frags.fragment_of
    internal = []
    external = []
    for u in range(n):
        kids = tree.children(u)
        internal.append(tuple(c for c in kids if fof[c] == fof[u]))
        external.append(tuple(c for c in kids if fof[c] != fof[u]))
    contracted: dict[int, int] = {}
    for fid in set(fof):
        if fid == fof[tree.root]:
            contracted[fid] = fid
        else:
            contracted[fid] = fof[tree.parent[fid]]
    kids_map: dict[int, list[int]] = {fid: [] for fid in contracted}
    for fid, pfid in contracted.items():
        if fid != pfid:
            kids_map[pfid].append(fid)
    for v in kids_map.values():
        v.sort()
    return FragStructure(
        internal_children=tuple(internal),
        external_children=tuple(external),
        contracted_parent=contracted,
        frag_children=kids_map,
    )


# --------------------------------------------------------------------------
# preorder + subtree sizes


(
    _P_CNT,
    _P_SIZEXT,
    _P_REL,
    _P_RHO,
    _P_XSUB,
    _P_OFF,
    _P_FCNT,
    _P_FRHO,
    _P_FSUB,
    _P_FOFF,
) = range(10)


class _PreorderProgram(NodeProgram):
    """Fragment-internal counting, two upcast/downcast waves through the
    root, and fragment-internal offset fixups produce the global DFS
    preorder (ascending-child order) and subtree sizes."""

    def __init__(self, tree: RootedSpanningTree, frags: FragmentDecomposition, struct: FragStructure):
        self.tree = tree
        self.frags = frags
        self.struct = struct
        self.root_fid = frags.fragment_of[tree.root]

    def schema(self):
        return {
            _P_CNT: ("size",),
            _P_SIZEXT: ("size",),
            _P_REL: ("vid",),
            _P_RHO: ("vid",),
            _P_XSUB: ("size",),
            _P_OFF: ("vid",),
            _P_FCNT: ("vid", "size"),
            _P_FRHO: ("vid", "vid"),
            _P_FSUB: ("vid", "size"),
            _P_FOFF: ("vid", "vid"),
        }

    def init(self, ctx: NodeCtx):
        v = ctx.vid
        st = _TreeNode(ctx, self.tree.parent[v], self.tree.children(v))
        st.fid = self.frags.fragment_of[v]
        st.internal = self.struct.internal_children[v]
        st.external = self.struct.external_children[v]
        st.is_frag_root = st.fid == v
        st.is_root = v == self.tree.root
        st.cnt_recv = {}
        st.cnt_done = False
        st.size_recv = {}   # internal child -> subtree size
        st.ext_size = {}    # external child -> subtree size
        st.size = None
        st.rel = None
        st.rel_emitted = False
        st.offset = None
        st.offset_applied = False
        st.pre = None
        st.route = {}       # fid -> child that leads to it
        st.fcnt = {}        # root only
        st.frho = {}        # root only
        st.sub_size = None  # frag roots: size of own full subtree
        return st

    def _emit_cnt(self, st):
        if st.cnt_done or any(c not in st.cnt_recv for c in st.internal):
            return
        st.cnt_done = True
        cnt = 1 + sum(st.cnt_recv.values())
        if st.is_frag_root:
            if st.is_root:
                st.fcnt[st.fid] = cnt
                self._root_try_fsub(st)
            else:
                st.up(_P_FCNT, st.fid, cnt)
        else:
            st.up(_P_CNT, cnt)

    def _emit_size(self, st):
        if st.size is not None:
            return
        if any(c not in st.size_recv for c in st.internal):
            return
        if any(c not in st.ext_size for c in st.external):
            return
        st.size = 1 + sum(st.size_recv.values()) + sum(st.ext_size.values())
        if not st.is_frag_root:
            st.up(_P_SIZEXT, st.size)
        if st.is_frag_root and st.is_root:
            # the root fragment's frame is global: offset 0
            st.rel = 0
            st.offset = 0
        self._emit_rel(st)

    def _emit_rel(self, st):
        # assign preorder starts to every child once own rel and all child
        # subtree sizes are known
        if st.rel is None or st.rel_emitted or st.size is None:
            return
        st.rel_emitted = True
        cur = st.rel + 1
        ext = set(st.external)
        for c in st.children:
            if c in ext:
                st.down(c, _P_RHO, cur)
                cur += st.ext_size[c]
            else:
                st.down(c, _P_REL, cur)
                cur += st.size_recv[c]
        self._apply_offset(st)

    def _apply_offset(self, st):
        # offset broadcast must stay behind the preorder-start records on
        # every fragment-internal link, so it only fires after _emit_rel
        if st.offset is None or not st.rel_emitted or st.offset_applied:
            return
        st.offset_applied = True
        st.pre = st.rel + st.offset
        for c in st.internal:
            st.down(c, _P_OFF, st.offset)

    def _root_try_fsub(self, st):
        # root: after every fragment count arrived, downcast full contracted
        # subtree sizes
        if len(st.fcnt) != self.frags.count:
            return
        order = self.struct.contracted_preorder(self.root_fid)
        total: dict[int, int] = {f: st.fcnt[f] for f in order}
        for f in reversed(order):
            p = self.struct.contracted_parent[f]
            if p != f:
                total[p] += total[f]
        for f in order:
            if f != self.root_fid:
                st.down(st.route[f], _P_FSUB, f, total[f])

    def _root_try_foff(self, st):
        if len(st.frho) != self.frags.count - 1:
            return
        order = self.struct.contracted_preorder(self.root_fid)
        off: dict[int, int] = {self.root_fid: 0}
        for f in order:
            if f != self.root_fid:
                off[f] = off[self.struct.contracted_parent[f]] + st.frho[f]
        for f in order:
            if f != self.root_fid:
                st.down(st.route[f], _P_FOFF, f, off[f])

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        for nbr, rec in st.records(inbox):
            tag = rec[0]
            if tag == _P_CNT:
                st.cnt_recv[nbr] = rec[1]
                self._emit_cnt(st)
            elif tag == _P_FCNT:
                st.route[rec[1]] = nbr
                if st.is_root:
                    st.fcnt[rec[1]] = rec[2]
                    self._root_try_fsub(st)
                else:
                    st.up(_P_FCNT, rec[1], rec[2])
            elif tag == _P_FSUB:
                if rec[1] == st.fid and st.is_frag_root:
                    st.sub_size = rec[2]
                    st.up(_P_XSUB, rec[2])
                else:
                    st.down(st.route[rec[1]], _P_FSUB, rec[1], rec[2])
            elif tag == _P_XSUB:
                st.ext_size[nbr] = rec[1]
                self._emit_size(st)
            elif tag == _P_SIZEXT:
                st.size_recv[nbr] = rec[1]
                self._emit_size(st)
            elif tag == _P_REL:
                st.rel = rec[1]
                self._emit_rel(st)
            elif tag == _P_RHO:
                st.rel = 0
                st.rho = rec[1]
                if st.is_root:
                    raise AssertionError("root cannot receive a frame start")
                st.up(_P_FRHO, st.fid, rec[1])
                self._emit_rel(st)
            elif tag == _P_FRHO:
                st.route.setdefault(rec[1], nbr)
                if st.is_root:
                    st.frho[rec[1]] = rec[2]
                    self._root_try_foff(st)
                else:
                    st.up(_P_FRHO, rec[1], rec[2])
            elif tag == _P_FOFF:
                if rec[1] == st.fid and st.is_frag_root:
                    st.offset = rec[2]
                    self._apply_offset(st)
                else:
                    st.down(st.route[rec[1]], _P_FOFF, rec[1], rec[2])
            elif tag == _P_OFF:
                st.offset = rec[1]
                self._apply_offset(st)

        if rnd == 1:
            self._emit_cnt(st)   # fragment-internal leaves start counting
            self._emit_size(st)  # vertices with no children at all
        st.done = st.pre is not None and st.size is not None
        st.pump(out)
        return st, out, st.vote(out)


def compute_preorder(
    g: WeightedMultigraph,
    tree: RootedSpanningTree,
    frags: FragmentDecomposition,
    config: NetworkConfig,
) -> tuple[tuple[int, ...], tuple[int, ...], RoundStats]:
    """Distributed DFS preorder numbers and subtree sizes."""
    if tree.n == 1:
        return (0,), (1,), RoundStats(phases={"preorder": 0})
    struct = derive_fragment_structure(tree, frags)
    prog = _PreorderProgram(tree, frags, struct)
    states, stats = run(g, prog, config, phase="preorder")
    pre = tuple(st.pre for st in states)
    size = tuple(st.size for st in states)
    _check_labels(tree, pre, size)
    return pre, size, stats


def _check_labels(tree: RootedSpanningTree, pre, size) -> None:
    n = tree.n
    if sorted(pre) != list(range(n)) or pre[tree.root] != 0:
        raise AssertionError("preorder is not a bijection rooted at 0")
    if size[tree.root] != n:
        raise AssertionError("root subtree size must be n")


# --------------------------------------------------------------------------
# subtree reach labels (low/high) + bridges


_L_PRE, _L_MIN1, _L_FMIN, _L_FDOWN, _L_XDOWN, _L_FIX = range(6)


class _LowHighProgram(NodeProgram):
    """Aggregates min/max preorder values reachable from each subtree via
    one sampled edge: fragment-internal pass, one upcast/downcast through
    the root over the contracted tree, one inter-fragment exchange, and a
    fragment-internal fixup. Transcript shape is independent of which edges
    are sampled (the initial exchange uses every channel)."""

    def __init__(
        self,
        tree: RootedSpanningTree,
        frags: FragmentDecomposition,
        struct: FragStructure,
        pre,
        sampled_nbrs,  # per-vertex tuple of neighbors with a sampled copy
    ):
        self.tree = tree
        self.frags = frags
        self.struct = struct
        self.pre = pre
        self.sampled_nbrs = sampled_nbrs
        self.root_fid = frags.fragment_of[tree.root]

    def schema(self):
        return {
            _L_PRE: ("vid",),
            _L_MIN1: ("vid", "vid"),
            _L_FMIN: ("vid", "vid", "vid"),
            _L_FDOWN: ("vid", "vid", "vid"),
            _L_XDOWN: ("vid", "vid"),
            _L_FIX: ("vid", "vid"),
        }

    def init(self, ctx: NodeCtx):
        v = ctx.vid
        st = _TreeNode(ctx, self.tree.parent[v], self.tree.children(v))
        st.fid = self.frags.fragment_of[v]
        st.internal = self.struct.internal_children[v]
        st.external = self.struct.external_children[v]
        st.is_frag_root = st.fid == v
        st.is_root = v == self.tree.root
        st.base_lo = st.base_hi = None
        st.nbr_pre = {}
        st.min1_recv = {}
        st.min1_done = False
        st.fmin = {}     # root only
        st.route = {}
        st.xdown = {}    # external child -> (Mlo, Mhi)
        st.fix_recv = {}
        st.lo = st.hi = None
        return st

    def _try_min1(self, st):
        if st.min1_done or st.base_lo is None:
            return
        if any(c not in st.min1_recv for c in st.internal):
            return
        st.min1_done = True
        lo = min([st.base_lo] + [x for x, _ in st.min1_recv.values()])
        hi = max([st.base_hi] + [x for _, x in st.min1_recv.values()])
        if st.is_frag_root:
            if st.is_root:
                st.fmin[st.fid] = (lo, hi)
                self._root_try_down(st)
            else:
                st.up(_L_FMIN, st.fid, lo, hi)
        else:
            st.up(_L_MIN1, lo, hi)

    def _root_try_down(self, st):
        if len(st.fmin) != self.frags.count:
            return
        order = self.struct.contracted_preorder(self.root_fid)
        agg = {f: list(st.fmin[f]) for f in order}
        for f in reversed(order):
            p = self.struct.contracted_parent[f]
            if p != f:
                agg[p][0] = min(agg[p][0], agg[f][0])
                agg[p][1] = max(agg[p][1], agg[f][1])
        for f in order:
            if f != self.root_fid:
                st.down(st.route[f], _L_FDOWN, f, agg[f][0], agg[f][1])

    def _try_fix(self, st):
        if st.lo is not None or not st.min1_done:
            return
        if any(c not in st.fix_recv for c in st.internal):
            return
        if any(c not in st.xdown for c in st.external):
            return
        lo = min(
            [st.base_lo]
            + [x for x, _ in st.fix_recv.values()]
            + [x for x, _ in st.xdown.values()]
        )
        hi = max(
            [st.base_hi]
            + [x for _, x in st.fix_recv.values()]
            + [x for _, x in st.xdown.values()]
        )
        st.lo, st.hi = lo, hi
        if not st.is_frag_root:
            st.up(_L_FIX, lo, hi)

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        v = ctx.vid
        if rnd == 1:
            for nbr in ctx.neighbors:
                out[nbr] = (_L_PRE, self.pre[v])
        for nbr, rec in st.records(inbox):
            tag = rec[0]
            if tag == _L_PRE:
                st.nbr_pre[nbr] = rec[1]
            elif tag == _L_MIN1:
                st.min1_recv[nbr] = (rec[1], rec[2])
                self._try_min1(st)
            elif tag == _L_FMIN:
                st.route[rec[1]] = nbr
                if st.is_root:
                    st.fmin[rec[1]] = (rec[2], rec[3])
                    self._root_try_down(st)
                else:
                    st.up(_L_FMIN, rec[1], rec[2], rec[3])
            elif tag == _L_FDOWN:
                if rec[1] == st.fid and st.is_frag_root:
                    st.up(_L_XDOWN, rec[2], rec[3])
                    st.fdown = (rec[2], rec[3])
                else:
                    st.down(st.route[rec[1]], _L_FDOWN, rec[1], rec[2], rec[3])
            elif tag == _L_XDOWN:
                st.xdown[nbr] = (rec[1], rec[2])
                self._try_fix(st)
            elif tag == _L_FIX:
                st.fix_recv[nbr] = (rec[1], rec[2])
                self._try_fix(st)

        if rnd == 2:
            # all neighbor preorders arrived; keep only sampled ones
            mine = self.pre[v]
            picks = [st.nbr_pre[w] for w in self.sampled_nbrs[v]]
            st.base_lo = min([mine] + picks)
            st.base_hi = max([mine] + picks)
            self._try_min1(st)  # fragment-internal leaves start here
        if st.min1_done:
            self._try_fix(st)
        st.done = st.lo is not None
        st.pump(out)
        return st, out, st.vote(out)


def _sampled_neighbor_sets(g: WeightedMultigraph, present_pairs) -> tuple[tuple[int, ...], ...]:
    by_vertex: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in present_pairs:
        by_vertex[u].add(v)
        by_vertex[v].add(u)
    return tuple(tuple(sorted(s)) for s in by_vertex)


def compute_low_high(
    g: WeightedMultigraph,
    tree: RootedSpanningTree,
    frags: FragmentDecomposition,
    pre,
    sampled: SampledSubgraph,
    config: NetworkConfig,
) -> tuple[tuple[int, ...], tuple[int, ...], RoundStats]:
    """Distributed subtree reach labels against one sampled subgraph."""
    if tree.n == 1:
        return (0,), (0,), RoundStats(phases={"lowhigh": 0})
    pairs = [(u, v) for u, v, _ in sampled.present_edges()]
    struct = derive_fragment_structure(tree, frags)
    prog = _LowHighProgram(tree, frags, struct, pre, _sampled_neighbor_sets(g, pairs))
    states, stats = run(g, prog, config, phase="lowhigh")
    low = tuple(st.lo for st in states)
    high = tuple(st.hi for st in states)
    return low, high, stats


def bridge_flags_from_labels(tree: RootedSpanningTree, pre, size, low, high) -> list[bool]:
    """Local predicate per non-root vertex v for its parent edge: the edge is
    a bridge iff the subtree of v reaches nothing outside its own preorder
    range. flags[v] is False for the root."""
    flags = [False] * tree.n
    for v in range(tree.n):
        if v != tree.root:
            flags[v] = low[v] >= pre[v] and high[v] <= pre[v] + size[v] - 1
    return flags


def find_bridges(
    g: WeightedMultigraph,
    tree: RootedSpanningTree,
    sampled: SampledSubgraph,
    config: NetworkConfig,
    frags: FragmentDecomposition | None = None,
    pre=None,
    size=None,
) -> tuple[set[tuple[int, int]], RoundStats]:
    """Tree edges that are bridges of (sampled + tree), all at once.

    Pass precomputed decomposition/labels to skip their rounds (they do not
    depend on the sample); otherwise they are computed here and included in
    the stats.
    """
    stats = RoundStats()
    if frags is None:
        frags, s = decompose(g, tree, config)
        stats = stats.merge(s)
    if pre is None or size is None:
        pre, size, s = compute_preorder(g, tree, frags, config)
        stats = stats.merge(s)
    low, high, s = compute_low_high(g, tree, frags, pre, sampled, config)
    stats = stats.merge(s)
    flags = bridge_flags_from_labels(tree, pre, size, low, high)
    bridges = {
        (min(tree.parent[v], v), max(tree.parent[v], v))
        for v in range(tree.n)
        if flags[v]
    }
    return bridges, stats


# --------------------------------------------------------------------------
# batched evaluation of many sampled subgraphs against one tree


def evaluate_reach_batch(tree: RootedSpanningTree, pre, exist: np.ndarray, edges_u, edges_v):
    """Vectorized low/high labels for many sampled subgraphs at once.

    exist: (trials, m) boolean edge-presence matrix over the base graph's
    edge list. Returns (low, high) as (trials, n) int32 arrays. Equivalent to
    running the label protocol per trial (asserted by callers against an
    engine run).
    """
    k, m = exist.shape
    n = tree.n
    pre_np = np.asarray(pre, dtype=np.int32)
    low = np.repeat(pre_np[None, :], k, axis=0)
    high = low.copy()
    rows, cols = np.nonzero(exist)
    if rows.size:
        u = np.asarray(edges_u, dtype=np.int64)[cols]
        v = np.asarray(edges_v, dtype=np.int64)[cols]
        np.minimum.at(low, (rows, u), pre_np[v])
        np.minimum.at(low, (rows, v), pre_np[u])
        np.maximum.at(high, (rows, u), pre_np[v])
        np.maximum.at(high, (rows, v), pre_np[u])
    order = tree.preorder_vertices()
    for c in reversed(order):
        if c != tree.root:
            p = tree.parent[c]
            np.minimum(low[:, p], low[:, c], out=low[:, p])
            np.maximum(high[:, p], high[:, c], out=high[:, p])
    return low, high


def find_bridges_batch(
    g: WeightedMultigraph,
    tree: RootedSpanningTree,
    frags: FragmentDecomposition,
    pre,
    size,
    exist: np.ndarray,
    config: NetworkConfig,
) -> tuple[np.ndarray, RoundStats]:
    """Bridge flags for many independent sampled subgraphs of g.

    exist: (trials, m) edge-presence matrix. Returns (trials, n) boolean
    flags (column v = parent edge of v; root column False) and the stats for
    running the label protocol once per trial.

    One engine execution (trial 0) fixes the round/bit schedule — the
    protocol's transcript shape is sample-independent, and field widths are
    fixed per tag, so the budget check and round counts transfer to every
    trial; trial values come from the vectorized evaluation, which is
    asserted against the engine run on trial 0.
    """
    k, m = exist.shape
    if m != g.m:
        raise ValueError("existence matrix does not match the edge list")
    edges_u = [u for u, _, _ in g.edges]
    edges_v = [v for _, v, _ in g.edges]
    low, high = evaluate_reach_batch(tree, pre, exist, edges_u, edges_v)

    # engine run on trial 0: schedule, budget enforcement, value cross-check
    mult0 = tuple(int(x) for x in exist[0])
    sample0 = SampledSubgraph(base=g, multiplicity=mult0, p=0.5, seed=0)
    low0, high0, stats0 = compute_low_high(g, tree, frags, pre, sample0, config)
    if tuple(int(x) for x in low[0]) != low0 or tuple(int(x) for x in high[0]) != high0:
        raise AssertionError("batched labels diverge from the engine run")

    pre_np = np.asarray(pre, dtype=np.int32)
    size_np = np.asarray(size, dtype=np.int32)
    flags = (low >= pre_np[None, :]) & (high <= (pre_np + size_np - 1)[None, :])
    flags[:, tree.root] = False
    return flags, stats0.scaled(k)


# --------------------------------------------------------------------------
# generic pipelined upcast / downcast

_U_REC = 0
_DC_ANN, _DC_REC = 0, 1


class _UpcastProgram(NodeProgram):
    def __init__(self, tree, frags, records, widths):
        self.tree = tree
        self.frags = frags
        self.records = records
        self.widths = widths

    def schema(self):
        return {_U_REC: ("vid", *self.widths)}

    def init(self, ctx: NodeCtx):
        st = _TreeNode(ctx, self.tree.parent[ctx.vid], self.tree.children(ctx.vid))
        st.collected = {}
        v = ctx.vid
        if self.frags.fragment_of[v] == v and v in self.records:
            if v == self.tree.root:
                st.collected[v] = tuple(self.records[v])
            else:
                st.up(_U_REC, v, *self.records[v])
        st.done = True
        return st

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        for _, rec in st.records(inbox):
            if ctx.vid == self.tree.root:
                st.collected[rec[1]] = rec[2:]
            else:
                st.up(_U_REC, *rec[1:])
        st.pump(out)
        return st, out, st.vote(out)


class _DowncastProgram(NodeProgram):
    def __init__(self, tree, frags, records, widths):
        self.tree = tree
        self.frags = frags
        self.records = records
        self.widths = widths

    def schema(self):
        return {_DC_ANN: ("vid",), _DC_REC: ("vid", *self.widths)}

    def init(self, ctx: NodeCtx):
        st = _TreeNode(ctx, self.tree.parent[ctx.vid], self.tree.children(ctx.vid))
        st.route = {}
        st.received = None
        st.expected = self.frags.count - 1  # root: announcements to await
        v = ctx.vid
        st.is_root = v == self.tree.root
        if self.frags.fragment_of[v] == v and not st.is_root:
            st.up(_DC_ANN, v)
        if st.is_root:
            if v in self.records:
                st.received = tuple(self.records[v])
            if st.expected == 0:
                pass
        st.done = True
        return st

    def step(self, st, rnd, inbox, ctx):
        out: dict = {}
        for nbr, rec in st.records(inbox):
            if rec[0] == _DC_ANN:
                st.route[rec[1]] = nbr
                if st.is_root:
                    st.expected -= 1
                    if st.expected == 0:
                        for fid in sorted(self.records):
                            if fid != ctx.vid:
                                st.down(st.route[fid], _DC_REC, fid, *self.records[fid])
                else:
                    st.up(_DC_ANN, rec[1])
            else:
                fid = rec[1]
                if fid == ctx.vid:
                    st.received = rec[2:]
                else:
                    st.down(st.route[fid], _DC_REC, *rec[1:])
        st.pump(out)
        return st, out, st.vote(out)


def _validate_record_widths(config_bits: int, codec_probe, widths) -> None:
    total = 4 + codec_probe.vid_bits + sum(codec_probe._width(k) for k in widths)
    if total > config_bits:
        raise UpcastRecordTooLarge(
            f"record needs {total} bits, channel budget is {config_bits}"
        )


def upcast(
    g: WeightedMultigraph,
    tree: RootedSpanningTree,
    frags: FragmentDecomposition,
    records: dict[int, tuple],
    widths: tuple,
    config: NetworkConfig,
) -> tuple[dict[int, tuple], RoundStats]:
    """Deliver one bounded record per fragment root to the tree root,
    pipelined. Each record must fit in a single message."""
    bits = config.resolve_bits(g.n)
    probe = MessageCodec(g.n, 2, {})
    _validate_record_widths(bits, probe, widths)
    prog = _UpcastProgram(tree, frags, records, widths)
    states, stats = run(g, prog, config, phase="upcast")
    return dict(states[tree.root].collected), stats


def downcast(
    g: WeightedMultigraph,
    tree: RootedSpanningTree,
    frags: FragmentDecomposition,
    records: dict[int, tuple],
    widths: tuple,
    config: NetworkConfig,
) -> tuple[dict[int, tuple], RoundStats]:
    """Deliver one bounded record from the tree root to each fragment root."""
    bits = config.resolve_bits(g.n)
    probe = MessageCodec(g.n, 2, {})
    _validate_record_widths(bits, probe, widths)
    prog = _DowncastProgram(tree, frags, records, widths)
    states, stats = run(g, prog, config, phase="downcast")
    out = {}
    for v, st in enumerate(states):
        if st.received is not None:
            out[v] = tuple(st.received)
    return out, stats
