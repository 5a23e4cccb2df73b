"""Adversary search and the two-placement indistinguishability attack.

Strategy classes live in :mod:`dynrelay.strategies` and are re-exported here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .cut import dyn_min_cut, min_cut_witness
from .protocol import NONCRYPTO
from .sim import RunConfig, RunResult, Simulation, first_acceptance_time, run, run_coupled
from .strategies import (
    STRATEGY_KINDS,
    ByzantineStrategy,
    ByzContext,
    Crash,
    DropAll,
    Emission,
    FabricateVisited,
    ForgeSource,
    MutatePayload,
    Placement,
    Puppet,
    Replay,
    ReplayLog,
    Scripted,
    fabricated_records,
    make_strategy,
    mutate,
)
from .temporal_paths import enumerate_path_sets
from .tvg import NodeId, TimeVaryingGraph

__all__ = [
    "STRATEGY_KINDS",
    "AttackWitness",
    "ByzContext",
    "ByzantineStrategy",
    "Crash",
    "DropAll",
    "Emission",
    "FabricateVisited",
    "ForgeSource",
    "MutatePayload",
    "Outcome",
    "Placement",
    "PlacementBudgetExceeded",
    "PlacementReport",
    "Puppet",
    "Replay",
    "ReplayLog",
    "Scripted",
    "fabricated_records",
    "indistinguishability_attack",
    "make_strategy",
    "mutate",
    "worst_case_placement",
]


# -- worst-case placement ----------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    byzantine: tuple
    kind: str | None
    safety_violations: tuple
    accepted_at: int | None  # first time q accepted p's genuine payload

    def harm(self, horizon: int) -> tuple:
        """Sort key; larger is worse.  Safety beats liveness beats delay."""
        delay = horizon + 1 if self.accepted_at is None else self.accepted_at
        return (bool(self.safety_violations), self.accepted_at is None, delay)


@dataclass
class PlacementReport:
    placement: Placement
    worst: Outcome
    evaluated: list[Outcome] = field(default_factory=list)
    complete: bool = True

    @property
    def safety_violated(self) -> bool:
        return bool(self.worst.safety_violations)

    @property
    def liveness_violated(self) -> bool:
        return self.worst.accepted_at is None

    def summary(self) -> str:
        w = self.worst
        nodes = ",".join(map(str, w.byzantine)) or "-"
        acc = "never" if w.accepted_at is None else str(w.accepted_at)
        return (
            f"worst placement: {nodes} ({w.kind or 'none'}); q accepts genuine payload: {acc}; "
            f"safety violations: {len(w.safety_violations)}; placements tried: {len(self.evaluated)}"
        )


class PlacementBudgetExceeded(RuntimeError):
    def __init__(self, budget: int, partial: PlacementReport):
        super().__init__(f"placement search exceeded its budget of {budget} runs")
        self.partial = partial


def candidate_placements(g: TimeVaryingGraph, p: NodeId, q: NodeId, k: int) -> Iterable[tuple]:
    others = [u for u in g.nodes if u not in (p, q)]
    for size in range(min(k, len(others)) + 1):
        yield from combinations(others, size)


def worst_case_placement(
    g: TimeVaryingGraph,
    p: NodeId,
    q: NodeId,
    k: int,
    family: Iterable[str] = STRATEGY_KINDS,
    *,
    mode: str = NONCRYPTO,
    payload: bytes = b"genuine",
    fake: bytes = b"forged",
    budget: int | None = 20_000,
    start: int = 0,
) -> PlacementReport:
    """Exhaustive search over Byzantine subsets of size <= k and strategy kinds.

    Every node of one placement runs the same strategy kind.  Only ``p``
    broadcasts.  Ties keep the first placement in enumeration order.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    family = tuple(family)
    for kind in family:
        if kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {kind!r}")
    report: PlacementReport | None = None
    runs = 0
    for nodes in candidate_placements(g, p, q, k):
        for kind in family if nodes else (None,):
            if budget is not None and runs >= budget:
                report.complete = False
                raise PlacementBudgetExceeded(budget, report)
            runs += 1
            placement = Placement(
                frozenset(nodes),
                {u: make_strategy(kind, u, g.nodes, p, fake, g.horizon) for u in nodes},
            )
            result = run(
                RunConfig(g, k, mode, placement=placement, broadcast_starts={p: start}, payloads={p: payload})
            )
            outcome = Outcome(
                tuple(nodes),
                kind,
                tuple(result.safety_violations()),
                first_acceptance_time(result, p, q, payload),
            )
            if report is None:
                report = PlacementReport(placement, outcome)
            elif outcome.harm(g.horizon) > report.worst.harm(g.horizon):
                report.placement, report.worst = placement, outcome
            report.evaluated.append(outcome)
    return report


# -- indistinguishability attack ---------------------------------------------


@dataclass
class AttackWitness:
    """Two runs that differ in p's payload yet look the same from q."""

    p: NodeId
    q: NodeId
    k: int
    cut: tuple
    c1: tuple
    c2: tuple
    m: bytes
    m_alt: bytes
    transcript_1: bytes
    transcript_2: bytes
    accepted_1: list
    accepted_2: list
    replay_verified: bool
    lines_1: list = field(default_factory=list)
    lines_2: list = field(default_factory=list)

    @property
    def identical(self) -> bool:
        return self.transcript_1 == self.transcript_2

    def to_text(self) -> str:
        lines = [
            f"pair: {self.p} -> {self.q}, k={self.k}",
            f"cut: {{{', '.join(map(str, self.cut))}}}",
            f"scenario 1: p sends {self.m!r}, Byzantine {{{', '.join(map(str, self.c1))}}}",
            f"scenario 2: p sends {self.m_alt!r}, Byzantine {{{', '.join(map(str, self.c2))}}}",
            f"q accepts from p: scenario 1 {_acc(self.accepted_1)}; scenario 2 {_acc(self.accepted_2)}",
            f"transcripts identical: {'yes' if self.identical else 'no'}",
            f"standalone replay reproduces transcripts: {'yes' if self.replay_verified else 'no'}",
            "",
        ]
        left = self.lines_1 or ["(nothing received)"]
        right = self.lines_2 or ["(nothing received)"]
        width = max(len("scenario 1"), *(len(x) for x in left))
        lines.append(f"{'scenario 1':<{width}} | scenario 2")
        lines.append(f"{'-' * width}-+-{'-' * 10}")
        for i in range(max(len(left), len(right))):
            a = left[i] if i < len(left) else ""
            b = right[i] if i < len(right) else ""
            lines.append(f"{a:<{width}} | {b}")
        return "\n".join(lines) + "\n"


def _acc(items: list) -> str:
    return ", ".join(f"{m!r}@{t}" for m, t in items) or "nothing"


def _world(g, k, mode, p, q, payload, puppets, record) -> Simulation:
    placement = Placement(frozenset(puppets), {u: Puppet() for u in puppets})
    return Simulation(
        RunConfig(
            g,
            k,
            mode,
            placement=placement,
            broadcast_starts={p: 0},
            payloads={p: payload},
            observe=(q,),
            record=tuple(record),
        )
    )


def _replay(g, k, mode, p, q, payload, byzantine, log: list[Emission]) -> RunResult:
    placement = Placement(frozenset(byzantine), {u: Puppet() for u in byzantine})
    cfg = RunConfig(
        g,
        k,
        mode,
        placement=placement,
        broadcast_starts={p: 0},
        payloads={p: payload},
        observe=(q,),
        replay_log=[e for e in log if e.sender in byzantine],
    )
    return run(cfg)


def indistinguishability_attack(
    g: TimeVaryingGraph,
    p: NodeId,
    q: NodeId,
    k: int,
    m: bytes,
    m_alt: bytes,
    *,
    mode: str = NONCRYPTO,
) -> AttackWitness | None:
    """Build the two-placement attack when some cut of size <= 2k exists.

    The cut ``C`` is split into ``C1`` (its first ``min(k, |C|)`` nodes) and
    ``C2``.  In scenario 1 ``p`` sends ``m`` and ``C1`` is Byzantine,
    behaving exactly as ``C1`` behaves (correctly) in scenario 2.  In
    scenario 2 ``p`` sends ``m_alt`` and ``C2`` is Byzantine, behaving as
    ``C2`` does in scenario 1.  The two definitions refer to each other, so
    both worlds are simulated in lockstep with sends copied across.  The
    recorded logs are then replayed standalone to confirm they are
    self-contained.

    Returns ``None`` when no such cut exists.
    """
    if m == m_alt:
        raise ValueError("the two payloads must differ")
    if k < 0:
        raise ValueError("k must be non-negative")
    sets = enumerate_path_sets(g, p, q)
    cut = min_cut_witness(sets)
    if cut is None or len(cut) > 2 * k:
        return None
    order = sorted(cut, key=g.nodes.index)
    c1, c2 = tuple(order[: min(k, len(order))]), tuple(order[min(k, len(order)) :])

    w1 = _world(g, k, mode, p, q, m, c1, record=c2)
    w2 = _world(g, k, mode, p, q, m_alt, c2, record=c1)
    run_coupled(w1, w2, mirror_ab=c2, mirror_ba=c1)
    r1, r2 = w1.result, w2.result
    t1, t2 = r1.canonical_transcript(q), r2.canonical_transcript(q)

    # scenario 2 Byzantines replay what C2 sent in scenario 1, and vice versa
    s1 = _replay(g, k, mode, p, q, m, c1, r2.emission_log)
    s2 = _replay(g, k, mode, p, q, m_alt, c2, r1.emission_log)
    verified = s1.canonical_transcript(q) == t1 and s2.canonical_transcript(q) == t2

    return AttackWitness(
        p=p,
        q=q,
        k=k,
        cut=tuple(order),
        c1=c1,
        c2=c2,
        m=m,
        m_alt=m_alt,
        transcript_1=t1,
        transcript_2=t2,
        accepted_1=r1.accepted(q, p),
        accepted_2=r2.accepted(q, p),
        replay_verified=verified,
        lines_1=r1.readable_transcript(q),
        lines_2=r2.readable_transcript(q),
    )


def attack_expected(g: TimeVaryingGraph, p: NodeId, q: NodeId, k: int) -> bool:
    return dyn_min_cut(g, p, q) <= 2 * k
