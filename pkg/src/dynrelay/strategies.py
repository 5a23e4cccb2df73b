"""Byzantine behaviours pluggable into the simulator.

A strategy reacts to the events the simulator shows its node and returns a
list of sends ``(receiver, records)``; ``receiver=None`` multicasts to the
current neighbours.  Receivers always learn the true sender id, so a
strategy can lie about content but never about who is talking.

Strategies only re-emit when their own output would change; two adjacent
Byzantine nodes echoing each other at zero latency would otherwise spin
forever inside one instant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable

from .protocol import CRYPTO, NONCRYPTO, NodeState, SignedRecord, TupleRecord
from .tvg import NodeId

Send = tuple  # (receiver | None, frozenset of records)


@dataclass
class ByzContext:
    """What a Byzantine node can see and do."""

    node: NodeId
    mode: str
    k: int
    nodes: tuple
    sign: Callable[[bytes], bytes] | None
    now: Callable[[], int]
    neighbors: Callable[[], list]


class ByzantineStrategy:
    kind = "scripted"
    wakeups: tuple[int, ...] = ()

    def on_start(self, ctx: ByzContext) -> list[Send]:
        return []

    def on_receive(self, ctx: ByzContext, sender: NodeId, records: frozenset) -> list[Send]:
        return []

    def on_topology(self, ctx: ByzContext) -> list[Send]:
        return []

    def on_wake(self, ctx: ByzContext) -> list[Send]:
        return []


class Crash(ByzantineStrategy):
    """Relays correctly (without broadcasting) until ``at``, silent from then on."""

    kind = "crash"

    def __init__(self, at: int = 0):
        self.at = at
        self._state: NodeState | None = None

    def _alive(self, ctx: ByzContext) -> bool:
        return ctx.now() < self.at

    def _relay(self, ctx: ByzContext) -> NodeState:
        if self._state is None:
            auth = _VerifyOnly() if ctx.mode == CRYPTO else None
            self._state = NodeState(ctx.node, ctx.k, ctx.mode, auth)
        return self._state

    def on_receive(self, ctx, sender, records):
        if not self._alive(ctx):
            return []
        changed, _ = self._relay(ctx).receive(sender, records)
        return [(None, self._relay(ctx).snapshot())] if changed else []

    def on_topology(self, ctx):
        if not self._alive(ctx) or self._state is None or not self._state.omega:
            return []
        return [(None, self._state.snapshot())]


class _VerifyOnly:
    """Relaying crash nodes never verify; rule 3 results are discarded anyway."""

    def sign(self, signer, m):
        raise RuntimeError("Byzantine relays cannot sign for others")

    def verify(self, claimed, blob):
        return None


class DropAll(ByzantineStrategy):
    kind = "drop_all"


MUTATION_MARK = b"~"


def mutate(payload: bytes) -> bytes:
    return MUTATION_MARK + payload


def is_mutation(payload: bytes) -> bool:
    return payload.startswith(MUTATION_MARK)


class MutatePayload(ByzantineStrategy):
    """Relays every record it hears, with the payload altered.

    Records that already carry an alteration (its own or a colluding
    node's) are left alone, otherwise two mutators echoing through correct
    neighbours would feed each other an endless chain of fresh payloads.
    The price is that genuine payloads starting with the mark are never
    attacked by this strategy.
    """

    kind = "mutate_payload"

    def __init__(self):
        self.omega: set = set()

    def on_receive(self, ctx, sender, records):
        before = len(self.omega)
        for rec in records:
            if ctx.mode == NONCRYPTO and isinstance(rec, TupleRecord):
                if sender in rec.visited or is_mutation(rec.payload):
                    continue
                self.omega.add(TupleRecord(rec.source, mutate(rec.payload), rec.visited | {sender}))
            elif ctx.mode == CRYPTO and isinstance(rec, SignedRecord):
                if is_mutation(rec.blob):
                    continue
                body = rec.blob[:-32] if len(rec.blob) >= 32 else rec.blob
                for fake in (ctx.sign(mutate(body)), mutate(rec.blob)):
                    self.omega.add(SignedRecord(rec.source, fake))
        if len(self.omega) != before:
            return [(None, frozenset(self.omega))]
        return []

    def on_topology(self, ctx):
        return [(None, frozenset(self.omega))] if self.omega else []


class ForgeSource(ByzantineStrategy):
    """Impersonates ``source`` with ``payload`` at every opportunity."""

    kind = "forge_source"

    def __init__(self, source: NodeId, payload: bytes):
        self.source = source
        self.payload = payload

    def records(self, ctx: ByzContext) -> frozenset:
        if ctx.mode == CRYPTO:
            return frozenset(
                {
                    SignedRecord(self.source, ctx.sign(self.payload)),
                    SignedRecord(self.source, self.payload + bytes(32)),
                }
            )
        out = {
            TupleRecord(self.source, self.payload, frozenset()),
            TupleRecord(self.source, self.payload, frozenset({self.source})),
        }
        for x in ctx.nodes:
            if x not in (self.source, ctx.node):
                out.add(TupleRecord(self.source, self.payload, frozenset({self.source, x})))
        return frozenset(out)

    def on_start(self, ctx):
        return [(None, self.records(ctx))]

    on_topology = on_start


class FabricateVisited(ByzantineStrategy):
    """Multicasts a fixed list of records verbatim whenever its topology changes."""

    kind = "fabricate_visited"

    def __init__(self, records: Iterable):
        self.records = frozenset(records)

    def on_start(self, ctx):
        return [(None, self.records)]

    on_topology = on_start


def fabricated_records(
    source: NodeId, payload: bytes, nodes: Iterable[NodeId], liar: NodeId, max_size: int = 2
) -> list[TupleRecord]:
    """Claims that ``(source, payload)`` travelled through every small set of other nodes."""
    others = sorted(u for u in nodes if u not in (source, liar))
    out = []
    for r in range(max_size + 1):
        for combo in combinations(others, r):
            out.append(TupleRecord(source, payload, frozenset(combo) | {source}))
    return out


class Replay(ByzantineStrategy):
    """Re-emits every record it has ever received, verbatim, plus at the given wake-up times."""

    kind = "replay"

    def __init__(self, wakeups: Iterable[int] = ()):
        self.wakeups = tuple(sorted(set(wakeups)))
        self.stored: set = set()

    def on_receive(self, ctx, sender, records):
        before = len(self.stored)
        self.stored |= records
        return [(None, frozenset(self.stored))] if len(self.stored) != before else []

    def on_topology(self, ctx):
        return [(None, frozenset(self.stored))] if self.stored else []

    on_wake = on_topology


class Scripted(ByzantineStrategy):
    """Hand-written behaviour: ``script(ctx, event, payload) -> sends``."""

    kind = "scripted"

    def __init__(self, script: Callable, wakeups: Iterable[int] = ()):
        self.script = script
        self.wakeups = tuple(sorted(set(wakeups)))

    def on_start(self, ctx):
        return self.script(ctx, "start", None)

    def on_receive(self, ctx, sender, records):
        return self.script(ctx, "receive", (sender, records))

    def on_topology(self, ctx):
        return self.script(ctx, "topology", None)

    def on_wake(self, ctx):
        return self.script(ctx, "wake", None)


@dataclass(frozen=True)
class Emission:
    """One point-to-point send attempt."""

    time: int
    sender: NodeId
    receiver: NodeId
    records: frozenset


class ReplayLog(ByzantineStrategy):
    """Re-issues logged sends verbatim at their logged times (same receiver, same content)."""

    kind = "replay_log"

    def __init__(self, entries: Iterable[Emission]):
        self.entries: dict[int, list[Emission]] = {}
        for e in entries:
            self.entries.setdefault(e.time, []).append(e)
        self.wakeups = tuple(sorted(self.entries))

    def on_wake(self, ctx):
        return [(e.receiver, e.records) for e in self.entries.get(ctx.now(), [])]


class Puppet(ByzantineStrategy):
    """No behaviour of its own; its sends are injected from outside."""

    kind = "puppet"


@dataclass
class Placement:
    byzantine: frozenset = frozenset()
    strategies: dict = field(default_factory=dict)

    def __post_init__(self):
        self.byzantine = frozenset(self.byzantine) | frozenset(self.strategies)
        for u in self.byzantine:
            self.strategies.setdefault(u, DropAll())

    def validate(self, k: int, protected: Iterable[NodeId] = ()) -> None:
        if len(self.byzantine) > k:
            raise ValueError(f"{len(self.byzantine)} Byzantine nodes exceed k={k}")
        bad = self.byzantine & set(protected)
        if bad:
            raise ValueError(f"protected nodes placed as Byzantine: {sorted(bad)}")


STRATEGY_KINDS = ("crash", "drop_all", "mutate_payload", "forge_source", "fabricate_visited", "replay")


def make_strategy(
    kind: str,
    node: NodeId,
    nodes: Iterable[NodeId],
    target: NodeId,
    fake: bytes = b"forged",
    horizon: int = 2,
) -> ByzantineStrategy:
    """Build one of the stock strategies aimed at ``target``'s broadcasts."""
    nodes = tuple(nodes)
    if kind == "crash":
        return Crash(at=horizon // 2)
    if kind == "drop_all":
        return DropAll()
    if kind == "mutate_payload":
        return MutatePayload()
    if kind == "forge_source":
        return ForgeSource(target, fake)
    if kind == "fabricate_visited":
        return FabricateVisited(fabricated_records(target, fake, nodes, node))
    if kind == "replay":
        return Replay()
    raise ValueError(f"unknown strategy {kind!r}")
