"""Deterministic discrete-event simulator for the broadcast protocols.

Events are ordered by ``(time, seq)`` with ``seq`` handed out in scheduling
order, so a zero-latency relay chain completes as a run of micro-steps
inside one timestamp.  A send at ``t`` over edge ``e`` is delivered at
``t + latency(e, t)`` only if ``e`` is present over that whole window;
otherwise it is dropped.

Correct nodes multicast their omega when it changes, when they start
broadcasting, and when their local topology changes.  Latency steps on an
incident edge count as topology changes: a send at an earlier change point
would see a different latency than the one a later dynamic path relies on.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .protocol import CRYPTO, NONCRYPTO, AuthProvider, HmacAuth, NodeState, encode_records, format_record
from .strategies import ByzContext, Emission, Placement, ReplayLog
from .tvg import NodeId, TimeVaryingGraph

log = logging.getLogger(__name__)

DEFAULT_MAX_OMEGA = 250_000
DEFAULT_MAX_STEPS_PER_INSTANT = 2_000_000


class SimulationError(RuntimeError):
    def __init__(self, message: str, partial: "RunResult | None" = None):
        super().__init__(message)
        self.partial = partial


def default_payload(node: NodeId) -> bytes:
    return f"m0:{node}".encode()


@dataclass
class RunConfig:
    graph: TimeVaryingGraph
    k: int
    mode: str = NONCRYPTO
    placement: Placement = field(default_factory=Placement)
    # nodes absent from broadcast_starts relay but never originate
    broadcast_starts: dict | None = None
    payloads: dict = field(default_factory=dict)
    horizon: int | None = None
    record_byzantine: bool = False
    # extra nodes (correct ones included) whose sends go to the emission log
    record: tuple = ()
    replay_log: list[Emission] | None = None
    observe: tuple = ()
    auth: AuthProvider | None = None
    multicast_on_loss: bool = True
    max_omega: int = DEFAULT_MAX_OMEGA
    trace_events: bool = False

    def payload(self, node: NodeId) -> bytes:
        return self.payloads.get(node, default_payload(node))


@dataclass
class RunResult:
    acceptances: dict  # (receiver, source) -> [(payload, time), ...] in acceptance order
    message_count: int = 0
    record_count: int = 0
    dropped: int = 0
    transcripts: dict = field(default_factory=dict)  # node -> [(time, sender, records)]
    emission_log: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    node_index: dict = field(default_factory=dict)
    byzantine: frozenset = frozenset()
    payloads: dict = field(default_factory=dict)

    def accepted(self, receiver: NodeId, source: NodeId) -> list[tuple[bytes, int]]:
        return self.acceptances.get((receiver, source), [])

    def safety_violations(self) -> list[tuple]:
        """``(receiver, source, payload, time)`` where a correct node accepted a wrong payload of a correct source."""
        out = []
        for (r, s), items in sorted(self.acceptances.items(), key=lambda kv: repr(kv[0])):
            if r in self.byzantine or s in self.byzantine or s not in self.payloads:
                continue
            for m, t in items:
                if m != self.payloads[s]:
                    out.append((r, s, m, t))
        return out

    def _per_instant(self, node: NodeId) -> dict[int, dict]:
        per_time: dict[int, dict] = {}
        for t, sender, records in self.transcripts.get(node, []):
            per_time.setdefault(t, {}).setdefault(sender, set()).update(records)
        return per_time

    def readable_transcript(self, node: NodeId) -> list[str]:
        """Same content as :meth:`canonical_transcript`, one readable line per (instant, sender)."""
        lines = []
        per_time = self._per_instant(node)
        for t in sorted(per_time):
            for sender in sorted(per_time[t], key=lambda s: self.node_index[s]):
                recs = sorted(format_record(r) for r in per_time[t][sender])
                lines.append(f"t={t} from {sender}: " + " ".join(recs))
        return lines

    def canonical_transcript(self, node: NodeId) -> bytes:
        """Per-instant union of ``(sender, record)`` observations at ``node``, byte encoded.

        Within one timestamp the state a node ends up in does not depend on
        the order of micro-steps, so the union per instant is the
        order-independent form of what the node saw.
        """
        per_time = self._per_instant(node)
        lines = []
        for t in sorted(per_time):
            for sender in sorted(per_time[t], key=lambda s: self.node_index[s]):
                blob = encode_records(per_time[t][sender], self.node_index)
                lines.append(f"{t} {self.node_index[sender]} {blob.hex()}")
        return ("\n".join(lines) + "\n").encode() if lines else b""

    def to_text(self) -> str:
        """Canonical serialization (sorted keys) for golden comparisons."""
        acc = {f"{s}->{r}": [[m.hex(), t] for m, t in items] for (r, s), items in self.acceptances.items()}
        doc = {
            "acceptances": acc,
            "message_count": self.message_count,
            "record_count": self.record_count,
            "dropped": self.dropped,
            "diagnostics": self.diagnostics,
            "byzantine": sorted(map(str, self.byzantine)),
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def first_acceptance_time(
    result: RunResult, source: NodeId, receiver: NodeId, payload: bytes | None = None
) -> int | None:
    for m, t in result.accepted(receiver, source):
        if payload is None or m == payload:
            return t
    return None


class Simulation:
    """One run; drive with :meth:`run` or step-wise with :meth:`step`."""

    def __init__(self, config: RunConfig):
        self.config = config
        g = config.graph
        self.g = g
        self.horizon = g.horizon if config.horizon is None else min(config.horizon, g.horizon)
        self.mode = config.mode
        if self.mode not in (NONCRYPTO, CRYPTO):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.auth = config.auth or (HmacAuth() if self.mode == CRYPTO else None)
        placement = config.placement
        unknown = set(placement.byzantine) - set(g.nodes)
        if unknown:
            raise ValueError(f"Byzantine nodes not in graph: {sorted(map(str, unknown))}")
        self.byzantine = frozenset(placement.byzantine)
        self.strategies = dict(placement.strategies)
        if config.replay_log:
            by_node: dict = {}
            for e in config.replay_log:
                by_node.setdefault(e.sender, []).append(e)
            for u, entries in by_node.items():
                if u not in self.byzantine:
                    raise ValueError(f"replay log entries for correct node {u!r}")
                self.strategies[u] = ReplayLog(entries)
        starts = config.broadcast_starts
        if starts is None:
            starts = {u: 0 for u in g.nodes if u not in self.byzantine}
        for u, t in starts.items():
            if t > self.horizon:
                raise ValueError(f"broadcast start of {u!r} after horizon")
        self.starts = {u: t for u, t in starts.items() if u not in self.byzantine}

        self.index = {u: i for i, u in enumerate(g.nodes)}
        self.states = {
            u: NodeState(u, config.k, self.mode, self.auth) for u in g.nodes if u not in self.byzantine
        }
        self.contexts = {u: self._context(u) for u in self.byzantine}
        self.observe = set(config.observe)
        self.recorded = set(config.record) | (set(self.byzantine) if config.record_byzantine else set())

        self.queue: list = []
        self.seq = 0
        self.now = 0
        self._instant_steps = 0
        self.on_send: Callable[[Emission], None] | None = None
        self.result = RunResult(
            acceptances={},
            node_index=self.index,
            byzantine=self.byzantine,
            payloads={u: config.payload(u) for u in self.starts},
        )
        self._schedule_initial()

    # -- setup ---------------------------------------------------------------

    def _context(self, u: NodeId) -> ByzContext:
        sign = self.auth.signer_for(u) if isinstance(self.auth, HmacAuth) else None
        return ByzContext(
            node=u,
            mode=self.mode,
            k=self.config.k,
            nodes=self.g.nodes,
            sign=sign,
            now=lambda: self.now,
            neighbors=lambda: self.neighbors(u),
        )

    def _schedule_initial(self) -> None:
        for u in self.g.nodes:
            ups: set[int] = set()
            downs: set[int] = set()
            for _, info in self.g.incident(u):
                for a, b in info.presence:
                    ups.add(a)
                    if b + 1 <= self.horizon:
                        downs.add(b + 1)
                for t, _ in info.latency.steps[1:]:
                    ups.add(t)
            times = ups | downs if self.config.multicast_on_loss else ups
            for t in sorted(x for x in times if x <= self.horizon):
                self._push(t, "topology", u)
        for u in self.byzantine:
            self._push(0, "byz_start", u)
            for t in getattr(self.strategies[u], "wakeups", ()):
                if 0 <= t <= self.horizon:
                    self._push(t, "wake", u)
        for u, t in sorted(self.starts.items(), key=lambda kv: (kv[1], self.index[kv[0]])):
            self._push(t, "start", u)

    def _push(self, t: int, kind: str, *data) -> None:
        heapq.heappush(self.queue, (t, self.seq, kind, data))
        self.seq += 1

    # -- network -------------------------------------------------------------

    def neighbors(self, u: NodeId) -> list:
        return [v for v, info in self.g.incident(u) if info.interval_at(self.now) is not None]

    def _send(self, sender: NodeId, receiver: NodeId, info, records: frozenset) -> None:
        t = self.now
        emission = Emission(t, sender, receiver, records)
        if sender in self.recorded:
            self.result.emission_log.append(emission)
        if self.on_send is not None:
            self.on_send(emission)
        iv = info.interval_at(t)
        if iv is None:
            self.result.dropped += 1
            return
        d = info.latency.at(t)
        if t + d > iv[1] or t + d > self.horizon:
            self.result.dropped += 1
            return
        self.result.message_count += 1
        self.result.record_count += len(records)
        self._push(t + d, "deliver", sender, receiver, records)

    def multicast(self, u: NodeId, records: frozenset) -> None:
        for v, info in self.g.incident(u):
            if info.interval_at(self.now) is not None:
                self._send(u, v, info, records)

    def unicast(self, u: NodeId, v: NodeId, records: frozenset) -> None:
        info = dict(self.g.incident(u)).get(v)
        if info is None:
            self.result.dropped += 1
            return
        self._send(u, v, info, records)

    def inject(self, emission: Emission) -> None:
        """Perform a send on behalf of ``emission.sender`` at the current instant."""
        if emission.time < self.now:
            raise SimulationError("cannot inject into the past")
        saved = self.now
        self.now = emission.time
        self.unicast(emission.sender, emission.receiver, emission.records)
        self.now = saved

    def _perform(self, u: NodeId, sends) -> None:
        for receiver, records in sends or ():
            records = frozenset(records)
            if receiver is None:
                self.multicast(u, records)
            else:
                self.unicast(u, receiver, records)

    # -- event loop ------------------------------------------------------------

    def peek(self) -> tuple | None:
        return self.queue[0][:2] if self.queue else None

    def step(self) -> None:
        t, seq, kind, data = heapq.heappop(self.queue)
        if t != self.now:
            self._instant_steps = 0
        self.now = t
        self._instant_steps += 1
        if self._instant_steps > DEFAULT_MAX_STEPS_PER_INSTANT:
            raise SimulationError(f"runaway cascade at t={t}", self.result)
        if self.config.trace_events:
            self.result.events.append(f"{t} {seq} {kind} {_describe(kind, data, self.index)}")
        getattr(self, "_on_" + kind)(*data)

    def run(self) -> RunResult:
        while self.queue:
            self.step()
        return self.finish()

    def finish(self) -> RunResult:
        diag = {"malformed": sum(s.malformed for s in self.states.values())}
        diag["max_omega"] = max((len(s.omega) for s in self.states.values()), default=0)
        self.result.diagnostics = diag
        return self.result

    def _accept(self, u: NodeId, pairs: Iterable) -> None:
        for s, m in sorted(pairs, key=lambda sm: (self.index.get(sm[0], -1), sm[1])):
            self.result.acceptances.setdefault((u, s), []).append((m, self.now))

    def _guard(self, state: NodeState) -> None:
        if len(state.omega) > self.config.max_omega:
            raise SimulationError(
                f"omega of {state.node!r} exceeded {self.config.max_omega} records", self.finish()
            )

    def _on_topology(self, u: NodeId) -> None:
        if u in self.byzantine:
            self._perform(u, self.strategies[u].on_topology(self.contexts[u]))
            return
        state = self.states[u]
        if state.omega:
            self.multicast(u, state.snapshot())

    def _on_start(self, u: NodeId) -> None:
        state = self.states[u]
        out = state.start(self.config.payload(u))
        self._accept(u, [(u, state.m0)])
        self.multicast(u, out)

    def _on_byz_start(self, u: NodeId) -> None:
        self._perform(u, self.strategies[u].on_start(self.contexts[u]))

    def _on_wake(self, u: NodeId) -> None:
        self._perform(u, self.strategies[u].on_wake(self.contexts[u]))

    def _on_deliver(self, sender: NodeId, receiver: NodeId, records: frozenset) -> None:
        if receiver in self.observe:
            self.result.transcripts.setdefault(receiver, []).append((self.now, sender, records))
        if receiver in self.byzantine:
            self._perform(receiver, self.strategies[receiver].on_receive(self.contexts[receiver], sender, records))
            return
        state = self.states[receiver]
        changed, accepted = state.receive(sender, records)
        if accepted:
            self._accept(receiver, accepted)
        if changed:
            self._guard(state)
            self.multicast(receiver, state.snapshot())


def _describe(kind: str, data: tuple, index: dict) -> str:
    if kind == "deliver":
        sender, receiver, records = data
        return f"{index[sender]}->{index[receiver]} records={len(records)}"
    return str(index[data[0]])


def run(config: RunConfig) -> RunResult:
    return Simulation(config).run()


def run_coupled(a: Simulation, b: Simulation, mirror_ab: Iterable[NodeId], mirror_ba: Iterable[NodeId]) -> None:
    """Run two simulations in time lockstep, copying sends between them.

    Every send by a node of ``mirror_ab`` in ``a`` is re-issued verbatim in
    ``b`` (where that node should be a puppet), and likewise ``mirror_ba``
    from ``b`` into ``a``.
    """
    mirror_ab, mirror_ba = set(mirror_ab), set(mirror_ba)

    def forward(target: Simulation, nodes: set):
        def hook(e: Emission) -> None:
            if e.sender in nodes:
                target.inject(e)

        return hook

    a.on_send = forward(b, mirror_ab)
    b.on_send = forward(a, mirror_ba)
    while a.queue or b.queue:
        ka, kb = a.peek(), b.peek()
        if kb is None or (ka is not None and ka[0] <= kb[0]):
            a.step()
        else:
            b.step()
    a.finish()
    b.finish()
