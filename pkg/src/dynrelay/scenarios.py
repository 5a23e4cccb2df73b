"""Scenario builders: the Menger counterexample, grid robots, contact traces."""

from __future__ import annotations

import csv
import io
import random
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .tvg import (
    EdgeInfo,
    Latency,
    TimeVaryingGraph,
    TVGError,
    edge_key,
    from_ticks,
    normalize_intervals,
    to_ticks,
)

MENGER_NODES = ("a", "b", "c", "p", "q")


def menger_fixture(check: bool = True) -> TimeVaryingGraph:
    """Two-step zero-latency graph where three paths need a 2-node cut but no two are disjoint.

    Step 1 carries p-a, a-c, c-q and a-b; step 2 carries p-c, c-b, b-q.  The
    minimal intermediate sets from p to q are {a,c}, {b,c}, {a,b}.  p-c-q is
    impossible (c only hears from p in step 2, after c-q is gone), which
    forces p-a-c-b-q to exist as well; its set {a,b,c} is not minimal.
    """
    step1 = [(1, 1)]
    step2 = [(2, 2)]
    g = TimeVaryingGraph.build(
        MENGER_NODES,
        [
            ("p", "a", step1),
            ("a", "c", step1),
            ("c", "q", step1),
            ("a", "b", step1),
            ("p", "c", step2),
            ("c", "b", step2),
            ("b", "q", step2),
        ],
        horizon=2,
    )
    if check:
        from .cut import dyn_min_cut
        from .temporal_paths import enumerate_path_sets, max_disjoint_paths

        expected = {frozenset("ac"), frozenset("cb"), frozenset("ab")}
        assert enumerate_path_sets(g, "p", "q") == expected
        assert dyn_min_cut(g, "p", "q") == 2
        assert max_disjoint_paths(g, "p", "q") == 1
    return g


# -- grid robots -------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    n: int = 10
    robots: int = 10
    steps: int = 1000
    seed: int = 0
    ticks_per_unit: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid side must be >= 1")
        if self.robots < 2:
            raise ValueError("need at least two robots")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")


def grid_moves(pos: tuple[int, int], n: int) -> list[tuple[int, int]]:
    """Stay, then every in-grid vertex at Manhattan distance 1 (1-based coordinates)."""
    i, j = pos
    out = [pos]
    for di, dj in ((0, -1), (0, 1), (-1, 0), (1, 0)):
        a, b = i + di, j + dj
        if 1 <= a <= n and 1 <= b <= n:
            out.append((a, b))
    return out


def grid_positions(spec: GridSpec) -> Iterator[list[tuple[int, int]]]:
    """Positions of every robot at t = 0, 1, ..., steps."""
    rng = random.Random(spec.seed)
    pos = [(rng.randint(1, spec.n), rng.randint(1, spec.n)) for _ in range(spec.robots)]
    yield list(pos)
    for _ in range(spec.steps):
        pos = [rng.choice(grid_moves(x, spec.n)) for x in pos]
        yield list(pos)


def grid_walk(spec: GridSpec, until_meet: tuple[int, int] | None = None) -> TimeVaryingGraph:
    """Contact graph of robots random-walking on an ``n x n`` grid.

    Robots are nodes ``0 .. robots-1``.  Co-location at step ``t`` makes the
    pair's edge present over the whole slot ``[t, t+1)`` with zero latency.
    With ``until_meet=(p, q)`` the walk stops at the first step where p and q
    share a vertex; the random stream is the same as the full walk's.
    """
    tpu = spec.ticks_per_unit
    intervals: dict[tuple[int, int], list[tuple[int, int]]] = {}
    last = 0
    for t, pos in enumerate(grid_positions(spec)):
        last = t
        groups: dict[tuple[int, int], list[int]] = {}
        for r, x in enumerate(pos):
            groups.setdefault(x, []).append(r)
        for members in groups.values():
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    intervals.setdefault((members[a], members[b]), []).append((t * tpu, t * tpu + tpu - 1))
        if until_meet is not None and pos[until_meet[0]] == pos[until_meet[1]]:
            break
    edges = {key: EdgeInfo(normalize_intervals(iv)) for key, iv in intervals.items()}
    return TimeVaryingGraph(tuple(range(spec.robots)), edges, last * tpu + tpu - 1, tpu)


# -- contact traces ----------------------------------------------------------


@dataclass(frozen=True)
class ContactRow:
    u: object
    v: object
    start: int
    end: int
    latency: int = 0


@dataclass(frozen=True)
class ContactTrace:
    rows: tuple[ContactRow, ...]
    resolution: int = 1

    def __post_init__(self):
        for r in self.rows:
            if r.start > r.end:
                raise TVGError(f"contact {r} starts after it ends")

    def nodes(self) -> set:
        return {x for r in self.rows for x in (r.u, r.v)}


HEADER = ["node_u", "node_v", "t_start", "t_end", "latency"]


def _maybe_int_ids(rows: list[list[str]]) -> bool:
    try:
        for r in rows:
            int(r[0])
            int(r[1])
    except ValueError:
        return False
    return True


def parse_contact_trace(stream: TextIO, resolution: int = 1) -> ContactTrace:
    """Read ``node_u,node_v,t_start,t_end[,latency]`` rows (header required, ``#`` comments).

    Node ids that are all integers are read as ints, otherwise as strings.
    """
    lines = (line for line in stream if line.strip() and not line.lstrip().startswith("#"))
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TVGError("contact trace is missing its header row") from None
    if header[:4] != HEADER[:4]:
        raise TVGError(f"unexpected contact trace header {header!r}")
    raw = [[c.strip() for c in r] for r in reader]
    for r in raw:
        if len(r) not in (4, 5):
            raise TVGError(f"malformed contact row {r!r}")
    as_int = _maybe_int_ids(raw)
    rows = []
    for r in raw:
        u, v = (int(r[0]), int(r[1])) if as_int else (r[0], r[1])
        latency = to_ticks(r[4], resolution) if len(r) == 5 and r[4] != "" else 0
        rows.append(ContactRow(u, v, to_ticks(r[2], resolution), to_ticks(r[3], resolution), latency))
    return ContactTrace(tuple(rows), resolution)


def read_contact_trace(path: str | Path, resolution: int = 1) -> ContactTrace:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_contact_trace(fh, resolution)


def write_contact_trace(trace: ContactTrace, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    res = trace.resolution
    for r in trace.rows:
        writer.writerow([r.u, r.v, from_ticks(r.start, res), from_ticks(r.end, res), from_ticks(r.latency, res)])


def from_contact_trace(trace: ContactTrace, horizon: int | None = None, nodes: Iterable = ()) -> TimeVaryingGraph:
    """Merge contact rows into per-edge presence schedules."""
    intervals: dict = {}
    latency: dict = {}
    for r in trace.rows:
        key = edge_key(r.u, r.v)
        if latency.setdefault(key, r.latency) != r.latency:
            raise TVGError(f"inconsistent latency for edge {key!r}")
        intervals.setdefault(key, []).append((r.start, r.end))
    edges = {k: EdgeInfo(normalize_intervals(iv), Latency.constant(latency[k])) for k, iv in intervals.items()}
    end = max((r.end for r in trace.rows), default=0)
    return TimeVaryingGraph(tuple(trace.nodes() | set(nodes)), edges, end if horizon is None else horizon, trace.resolution)


def to_contact_trace(g: TimeVaryingGraph) -> ContactTrace:
    """Normalized trace of a graph: one row per presence interval, sorted."""
    rows = []
    for (u, v), info in sorted(g.edges.items()):
        if not info.latency.is_constant:
            raise TVGError(f"edge {(u, v)!r} has a time-varying latency; not expressible as a trace")
        d = info.latency.steps[0][1]
        rows.extend(ContactRow(u, v, a, b, d) for a, b in info.presence)
    return ContactTrace(tuple(rows), g.resolution)


def sociability_filter(trace: ContactTrace, top_n: int) -> ContactTrace:
    """Keep contacts among the ``top_n`` nodes with the most contact rows (ties: lower id)."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    counts = Counter()
    for r in trace.rows:
        counts[r.u] += 1
        counts[r.v] += 1
    ranked = sorted(counts, key=lambda u: (-counts[u], u))
    keep = set(ranked[:top_n])
    return ContactTrace(tuple(r for r in trace.rows if r.u in keep and r.v in keep), trace.resolution)


def synthetic_trace(nodes: int = 10, horizon: int = 480, seed: int = 2005, contacts: int = 260) -> ContactTrace:
    """Random conference-like trace: bursty contacts among ``nodes`` participants.

    Contact rate follows a crude daily programme (arrival peak, a break and a
    lunch exodus) so per-start-time curves have some shape.
    """
    rng = random.Random(seed)
    names = [f"n{i:02d}" for i in range(nodes)]
    weights = [rng.uniform(0.5, 2.0) for _ in names]
    peaks = [(30, 40), (120, 30), (240, 50)]
    rows = []
    for _ in range(contacts):
        if rng.random() < 0.6:
            centre, spread = rng.choice(peaks)
            start = int(min(max(rng.gauss(centre, spread / 2), 0), horizon - 1))
        else:
            start = rng.randrange(horizon)
        u, v = rng.choices(range(nodes), weights=weights, k=2)
        if u == v:
            continue
        end = min(start + rng.choice((0, 1, 2, 3, 5, 8)), horizon)
        rows.append(ContactRow(names[min(u, v)], names[max(u, v)], start, end, 0))
    rows.sort(key=lambda r: (r.start, r.u, r.v, r.end))
    return ContactTrace(tuple(rows), 1)


def bundled_trace_text() -> str:
    return resources.files("dynrelay").joinpath("data/synthetic_trace.csv").read_text(encoding="utf-8")


def bundled_trace() -> ContactTrace:
    return parse_contact_trace(io.StringIO(bundled_trace_text()))


# -- random graphs -----------------------------------------------------------


def random_tvg(
    rng: random.Random,
    nodes: int = 6,
    horizon: int = 12,
    density: float = 0.5,
    max_intervals: int = 3,
    max_latency: int = 2,
    varying_latency: bool = False,
) -> TimeVaryingGraph:
    """Small random graph over ``0 .. nodes-1`` for property checks and fuzzing."""
    edges = {}
    for u in range(nodes):
        for v in range(u + 1, nodes):
            if rng.random() >= density:
                continue
            ivs = []
            for _ in range(rng.randint(1, max_intervals)):
                a = rng.randint(0, horizon)
                ivs.append((a, min(horizon, a + rng.randint(0, max(1, horizon // 3)))))
            if varying_latency and rng.random() < 0.5:
                times = sorted(rng.sample(range(1, horizon + 1), k=min(2, horizon)))
                steps = [(0, rng.randint(0, max_latency))] + [(t, rng.randint(0, max_latency)) for t in times]
                latency = Latency(tuple(steps))
            else:
                latency = Latency.constant(rng.randint(0, max_latency))
            edges[(u, v)] = EdgeInfo(normalize_intervals(ivs), latency)
    return TimeVaryingGraph(tuple(range(nodes)), edges, horizon)
