"""Synchronous round engine for bandwidth-limited message passing.

Each round every vertex runs a local step on its state and inbox, then sends
at most one message per incident neighbor pair (parallel edges share one
channel per direction). Message sizes are metered bit-exactly against the
per-round budget B; local computation is free. A message sent in round r is
readable in round r+1.

Canonical message encoding: a 4-bit tag followed by fixed-width fields. The
field widths per tag are declared by the program's schema, so sizes are
data-independent. Records wider than B are sent as explicit chunk streams
(tag CHUNK, 1 continuation bit, up to B-5 payload bits per round).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .graph import WeightedMultigraph
from .rng import stream

__all__ = [
    "CHUNK_TAG",
    "NetworkConfig",
    "RoundStats",
    "MessageCodec",
    "RecordLink",
    "RecordAssembler",
    "NodeProgram",
    "NodeCtx",
    "BudgetViolation",
    "RoundLimitExceeded",
    "UnencodablePayload",
    "default_bits",
    "run",
]

CHUNK_TAG = 15


class BudgetViolation(RuntimeError):
    """A node tried to send more bits over one channel than B allows."""

    def __init__(self, node: int, rnd: int, edge: tuple[int, int], bits: int, limit: int):
        super().__init__(
            f"node {node} sent {bits} bits over edge {edge} in round {rnd}, budget {limit}"
        )
        self.node = node
        self.round = rnd
        self.edge = edge
        self.bits = bits
        self.limit = limit


class RoundLimitExceeded(RuntimeError):
    def __init__(self, stats: "RoundStats"):
        super().__init__(f"round limit hit after {stats.rounds_elapsed} rounds")
        self.stats = stats


class UnencodablePayload(ValueError):
    """Message field outside its declared fixed width."""


def default_bits(n: int) -> int:
    """Default per-edge budget: four ids' worth, floor 8 for the tag+payload."""
    return max(8, 4 * max(1, math.ceil(math.log2(max(n, 2)))))


@dataclass(frozen=True)
class NetworkConfig:
    bits: int | None = None  # None: default_bits(n) at run time
    round_limit: int = 10**6
    seed: int = 0

    def resolve_bits(self, n: int) -> int:
        b = self.bits if self.bits is not None else default_bits(n)
        need = math.ceil(math.log2(max(n, 2))) + 2
        if b < need:
            raise ValueError(f"budget {b} below minimum {need} for n={n}")
        if self.round_limit <= 0:
            raise ValueError("round_limit must be positive")
        return b


@dataclass
class RoundStats:
    rounds_elapsed: int = 0
    max_bits_per_edge_round: int = 0
    total_messages: int = 0
    phases: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "RoundStats") -> "RoundStats":
        out = RoundStats(
            rounds_elapsed=self.rounds_elapsed + other.rounds_elapsed,
            max_bits_per_edge_round=max(
                self.max_bits_per_edge_round, other.max_bits_per_edge_round
            ),
            total_messages=self.total_messages + other.total_messages,
            phases=dict(self.phases),
        )
        for k, v in other.phases.items():
            out.phases[k] = out.phases.get(k, 0) + v
        return out

    def scaled(self, factor: int) -> "RoundStats":
        """Account for `factor` identical repetitions of this schedule."""
        return RoundStats(
            rounds_elapsed=self.rounds_elapsed * factor,
            max_bits_per_edge_round=self.max_bits_per_edge_round,
            total_messages=self.total_messages * factor,
            phases={k: v * factor for k, v in self.phases.items()},
        )


class MessageCodec:
    """Bit-exact sizes and bitstream packing for one program's schema.

    Symbolic widths: "vid" = ceil(log2 n), "size" = ceil(log2 (n+1)),
    "wt" = ceil(log2 (n*W+1)), "bit" = 1; an int is an explicit width.
    """

    def __init__(self, n: int, W: int, schema: dict[int, tuple]):
        self.n = n
        self.W = W
        self.vid_bits = max(1, math.ceil(math.log2(max(n, 2))))
        self.size_bits = math.ceil(math.log2(n + 1))
        self.wt_bits = math.ceil(math.log2(n * W + 1))
        self.widths: dict[int, tuple[int, ...]] = {}
        self.total: dict[int, int] = {}
        for tag, kinds in schema.items():
            if not 0 <= tag < 16 or tag == CHUNK_TAG:
                raise ValueError(f"tag {tag} outside [0,15) or reserved")
            ws = tuple(self._width(k) for k in kinds)
            self.widths[tag] = ws
            self.total[tag] = sum(ws)

    def _width(self, kind) -> int:
        if isinstance(kind, int):
            if kind < 1:
                raise ValueError("explicit width must be >= 1")
            return kind
        return {
            "vid": self.vid_bits,
            "size": self.size_bits,
            "wt": self.wt_bits,
            "bit": 1,
        }[kind]

    def size(self, msg: tuple) -> int:
        """Exact serialized bits of one message; 0 for no message."""
        if msg is None:
            return 0
        tag = msg[0]
        if tag == CHUNK_TAG:
            return 5 + msg[3]  # tag + continuation bit + payload
        total = self.total.get(tag)
        if total is None:
            raise UnencodablePayload(f"unknown tag {tag}")
        ws = self.widths[tag]
        if len(msg) - 1 != len(ws):
            raise UnencodablePayload(f"tag {tag} expects {len(ws)} fields")
        for val, w in zip(msg[1:], ws):
            if not 0 <= val < (1 << w):
                raise UnencodablePayload(f"field {val} exceeds {w} bits (tag {tag})")
        return 4 + total

    def pack(self, tag: int, fields: tuple) -> tuple[int, int]:
        """(bit value, bit count) of tag+fields, MSB first."""
        ws = self.widths[tag]
        acc = tag
        nbits = 4
        for val, w in zip(fields, ws):
            if not 0 <= val < (1 << w):
                raise UnencodablePayload(f"field {val} exceeds {w} bits (tag {tag})")
            acc = (acc << w) | val
            nbits += w
        return acc, nbits

    def unpack(self, acc: int, nbits: int) -> tuple:
        tag = acc >> (nbits - 4)
        ws = self.widths[tag]
        fields = []
        pos = nbits - 4
        for w in ws:
            pos -= w
            fields.append((acc >> pos) & ((1 << w) - 1))
        return (tag, *fields)


class RecordLink:
    """FIFO record stream over one directed channel, chunking as needed."""

    __slots__ = ("codec", "cap", "budget", "queue", "cur", "cur_nbits")

    def __init__(self, codec: MessageCodec, budget: int):
        self.codec = codec
        self.budget = budget
        self.cap = budget - 5
        if self.cap < 1:
            raise ValueError("budget too small for chunk streaming")
        self.queue: deque[tuple] = deque()
        self.cur = 0
        self.cur_nbits = 0

    def send(self, tag: int, *fields) -> None:
        self.queue.append((tag, fields))

    def pending(self) -> bool:
        return bool(self.queue) or self.cur_nbits > 0

    def pump(self) -> tuple | None:
        """At most one message for this round, or None."""
        if self.cur_nbits == 0:
            if not self.queue:
                return None
            tag, fields = self.queue.popleft()
            if 4 + self.codec.total[tag] <= self.budget:
                # fits whole: skip framing
                msg = (tag, *fields)
                self.codec.size(msg)
                return msg
            self.cur, self.cur_nbits = self.codec.pack(tag, fields)
        take = min(self.cap, self.cur_nbits)
        shift = self.cur_nbits - take
        data = (self.cur >> shift) & ((1 << take) - 1)
        self.cur &= (1 << shift) - 1
        self.cur_nbits = shift
        more = 1 if shift > 0 else 0
        return (CHUNK_TAG, more, data, take)


class RecordAssembler:
    """Reassembles chunk streams from one directed channel."""

    __slots__ = ("codec", "acc", "nbits")

    def __init__(self, codec: MessageCodec):
        self.codec = codec
        self.acc = 0
        self.nbits = 0

    def push(self, msg: tuple) -> tuple | None:
        """Feed one received message; return a completed record or None."""
        if msg[0] != CHUNK_TAG:
            return msg
        _, more, data, take = msg
        self.acc = (self.acc << take) | data
        self.nbits += take
        if more:
            return None
        rec = self.codec.unpack(self.acc, self.nbits)
        self.acc = 0
        self.nbits = 0
        return rec


class NodeCtx:
    """Per-node view the engine exposes to step functions."""

    __slots__ = ("vid", "neighbors", "n", "codec", "bits", "_seed", "_rng")

    def __init__(self, vid: int, neighbors: tuple, n: int, codec: MessageCodec, bits: int, seed: int):
        self.vid = vid
        self.neighbors = neighbors
        self.n = n
        self.codec = codec
        self.bits = bits
        self._seed = seed
        self._rng = None

    @property
    def rng(self):
        if self._rng is None:
            self._rng = stream(self._seed, "node", self.vid)
        return self._rng


class NodeProgram:
    """Base for node programs. Subclasses define schema/init/step.

    step(state, rnd, inbox, ctx) -> (state, outbox, halted): inbox and outbox
    map neighbor id -> message tuple; the engine stops once every node
    reports halted in the same round.
    """

    W = 2  # override when messages carry weight-scale fields

    def schema(self) -> dict[int, tuple]:
        return {}

    def init(self, ctx: NodeCtx):
        raise NotImplementedError

    def step(self, state, rnd: int, inbox: dict, ctx: NodeCtx):
        raise NotImplementedError


_EMPTY: dict = {}


def run(
    g: WeightedMultigraph,
    program: NodeProgram,
    config: NetworkConfig,
    phase: str = "run",
) -> tuple[list, RoundStats]:
    """Execute until every node halts; returns final states and stats."""
    n = g.n
    bits = config.resolve_bits(n)
    codec = MessageCodec(n, getattr(program, "W", 2) or 2, program.schema())
    ctxs = [
        NodeCtx(u, g.neighbors(u), n, codec, bits, config.seed) for u in range(n)
    ]
    nbr_sets = [frozenset(g.neighbors(u)) for u in range(n)]
    states = [program.init(ctxs[u]) for u in range(n)]
    inboxes: list[dict | None] = [None] * n
    stats = RoundStats()
    max_bits = 0
    total_msgs = 0
    rounds = 0
    size_of = codec.size
    for rnd in range(1, config.round_limit + 1):
        rounds = rnd
        staged: list[dict | None] = [None] * n
        all_halt = True
        for u in range(n):
            st, outbox, halted = program.step(
                states[u], rnd, inboxes[u] or _EMPTY, ctxs[u]
            )
            states[u] = st
            if not halted:
                all_halt = False
            if outbox:
                for v, msg in outbox.items():
                    if msg is None:
                        continue
                    if v not in nbr_sets[u]:
                        raise ValueError(f"node {u} sent to non-neighbor {v}")
                    nbits = size_of(msg)
                    if nbits > bits:
                        raise BudgetViolation(u, rnd, (u, v), nbits, bits)
                    if nbits > max_bits:
                        max_bits = nbits
                    total_msgs += 1
                    box = staged[v]
                    if box is None:
                        box = staged[v] = {}
                    box[u] = msg
        inboxes = staged
        if all_halt:
            break
    else:
        stats.rounds_elapsed = rounds
        stats.max_bits_per_edge_round = max_bits
        stats.total_messages = total_msgs
        stats.phases[phase] = rounds
        raise RoundLimitExceeded(stats)
    stats.rounds_elapsed = rounds
    stats.max_bits_per_edge_round = max_bits
    stats.total_messages = total_msgs
    stats.phases[phase] = rounds
    return states, stats
