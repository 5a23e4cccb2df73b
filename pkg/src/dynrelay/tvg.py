"""Time-varying graph model.

Time is kept as integer ticks.  A graph carries ``resolution`` (ticks per
time unit) so that decimal times read from traces map to ticks exactly;
the discrete model is simply ``resolution=1`` with integer latencies.

Edges are undirected.  Presence schedules are closed tick intervals,
normalized so that intervals are sorted and neither overlap nor touch
(``[0, 4]`` and ``[5, 8]`` cover every tick from 0 to 8 and merge into
``[0, 8]``).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Hashable, Iterable, Iterator, Mapping

NodeId = Hashable
Edge = tuple  # normalized (u, v) with u < v
Interval = tuple[int, int]


class TVGError(ValueError):
    pass


class UnknownNodeError(TVGError, KeyError):
    pass


class UnknownEdgeError(TVGError, KeyError):
    pass


class HorizonError(TVGError):
    pass


def edge_key(u: NodeId, v: NodeId) -> Edge:
    if u == v:
        raise TVGError(f"self-loop on {u!r}")
    return (u, v) if u < v else (v, u)


def normalize_intervals(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Sort and merge closed tick intervals (overlapping or adjacent ones merge)."""
    items = sorted((int(a), int(b)) for a, b in intervals)
    merged: list[list[int]] = []
    for a, b in items:
        if a > b:
            raise TVGError(f"interval start {a} > end {b}")
        if a < 0:
            raise TVGError(f"negative time {a}")
        if merged and a <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def to_ticks(value, resolution: int = 1) -> int:
    """Convert a decimal time (str/int/Decimal) to ticks; must be exact."""
    try:
        d = Decimal(str(value)) * resolution
    except InvalidOperation as exc:
        raise TVGError(f"not a number: {value!r}") from exc
    if d != d.to_integral_value():
        raise TVGError(f"time {value} is not a whole number of ticks at resolution {resolution}")
    if d < 0:
        raise TVGError(f"negative time {value}")
    return int(d)


def from_ticks(ticks: int, resolution: int = 1) -> str:
    if resolution == 1:
        return str(ticks)
    d = Decimal(ticks) / Decimal(resolution)
    text = format(d.normalize(), "f")
    return text


@dataclass(frozen=True)
class Latency:
    """Right-continuous step function of send time.

    ``steps`` is a tuple of ``(from_tick, ticks)`` pairs sorted by time; the
    first step must start at 0.  A constant latency is a single step.
    """

    steps: tuple[tuple[int, int], ...] = ((0, 0),)

    def __post_init__(self):
        steps = tuple((int(t), int(d)) for t, d in self.steps)
        if not steps or steps[0][0] != 0:
            raise TVGError("latency steps must start at time 0")
        if any(d < 0 for _, d in steps):
            raise TVGError("negative latency")
        if any(a[0] >= b[0] for a, b in zip(steps, steps[1:])):
            raise TVGError("latency steps must be strictly increasing in time")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "_times", tuple(t for t, _ in steps))

    @classmethod
    def constant(cls, ticks: int) -> "Latency":
        return cls(((0, ticks),))

    @property
    def is_constant(self) -> bool:
        return len(self.steps) == 1

    def at(self, t: int) -> int:
        return self.steps[bisect_right(self._times, t) - 1][1]

    def segments(self, start: int) -> Iterator[tuple[int, int | None, int]]:
        """Yield ``(lo, hi, latency)`` segments covering ``[start, inf)``; ``hi`` inclusive or None."""
        i = bisect_right(self._times, start) - 1
        while i < len(self.steps):
            lo = max(start, self.steps[i][0])
            hi = self.steps[i + 1][0] - 1 if i + 1 < len(self.steps) else None
            yield lo, hi, self.steps[i][1]
            i += 1


ZERO_LATENCY = Latency.constant(0)


@dataclass(frozen=True)
class EdgeInfo:
    presence: tuple[Interval, ...]
    latency: Latency = ZERO_LATENCY

    def __post_init__(self):
        object.__setattr__(self, "_starts", tuple(a for a, _ in self.presence))
        const = self.latency.steps[0][1] if self.latency.is_constant else None
        object.__setattr__(self, "_const", const)

    def interval_at(self, t: int) -> Interval | None:
        i = bisect_right(self._starts, t) - 1
        if i >= 0 and self.presence[i][1] >= t:
            return self.presence[i]
        return None

    def earliest_hop(self, ready: int) -> tuple[int, int] | None:
        """Earliest ``(send, arrival)`` with ``send >= ready`` whose latency window is fully present.

        Minimizes arrival, not send time: with a time-varying latency a
        later send may arrive sooner.
        """
        i = max(bisect_right(self._starts, ready) - 1, 0)
        d = self._const
        if d is not None:
            # earliest feasible send is also the earliest arrival
            for a, b in self.presence[i:]:
                lo = a if a > ready else ready
                if lo + d <= b:
                    return lo, lo + d
            return None
        best: tuple[int, int] | None = None
        for a, b in self.presence[i:]:
            lo = max(a, ready)
            if lo > b:
                continue
            if best is not None and lo >= best[1]:
                break
            for seg_lo, seg_hi, d in self.latency.segments(lo):
                if best is not None and seg_lo >= best[1]:
                    break
                if seg_lo > b:
                    break
                hi = b - d
                if seg_hi is not None:
                    hi = min(hi, seg_hi)
                if seg_lo <= hi and (best is None or seg_lo + d < best[1]):
                    best = (seg_lo, seg_lo + d)
        return best


@dataclass(frozen=True)
class TimeVaryingGraph:
    """Immutable graph ``(V, E, presence, latency)`` over ticks ``[0, horizon]``."""

    nodes: tuple
    edges: Mapping[Edge, EdgeInfo]
    horizon: int
    resolution: int = 1
    _incident: Mapping = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(sorted(set(self.nodes)))
        object.__setattr__(self, "nodes", nodes)
        if self.horizon < 0:
            raise TVGError("horizon must be non-negative")
        node_set = set(nodes)
        incident: dict = {u: [] for u in nodes}
        for (u, v), info in self.edges.items():
            if u not in node_set or v not in node_set:
                raise TVGError(f"edge {(u, v)!r} has an endpoint outside the node set")
            if (u, v) != edge_key(u, v):
                raise TVGError(f"edge {(u, v)!r} is not in normalized order")
            if info.presence and info.presence[-1][1] > self.horizon:
                raise TVGError(f"edge {(u, v)!r} is present after the horizon")
            incident[u].append((v, info))
            incident[v].append((u, info))
        for u in incident:
            incident[u].sort(key=lambda item: item[0])
        object.__setattr__(self, "_incident", {u: tuple(x) for u, x in incident.items()})

    @classmethod
    def build(
        cls,
        nodes: Iterable[NodeId],
        edges: Iterable[tuple],
        horizon: int,
        resolution: int = 1,
    ) -> "TimeVaryingGraph":
        """Build from ``(u, v, intervals)`` or ``(u, v, intervals, latency)`` rows.

        ``latency`` may be an int (constant ticks), a :class:`Latency`, or a
        list of ``(from_tick, ticks)`` steps.  Rows for the same pair merge.
        """
        raw: dict[Edge, list] = {}
        lat: dict[Edge, Latency] = {}
        for row in edges:
            u, v, intervals = row[:3]
            latency = _as_latency(row[3] if len(row) > 3 else 0)
            key = edge_key(u, v)
            if key in lat and lat[key] != latency:
                raise TVGError(f"inconsistent latency for edge {key!r}")
            lat[key] = latency
            raw.setdefault(key, []).extend(intervals)
        infos = {key: EdgeInfo(normalize_intervals(iv), lat[key]) for key, iv in raw.items()}
        return cls(tuple(nodes), infos, horizon, resolution)

    # -- lookups -----------------------------------------------------------

    def info(self, e: Edge) -> EdgeInfo:
        try:
            key = edge_key(*e)
            return self.edges[key]
        except (KeyError, TVGError):
            raise UnknownEdgeError(f"unknown edge {e!r}") from None

    def incident(self, u: NodeId) -> tuple:
        try:
            return self._incident[u]
        except KeyError:
            raise UnknownNodeError(f"unknown node {u!r}") from None

    def _check_time(self, t: int) -> None:
        if t < 0 or t > self.horizon:
            raise HorizonError(f"time {t} outside [0, {self.horizon}]")

    def truncated(self, t: int) -> "TimeVaryingGraph":
        """The graph restricted to ``[0, t]``."""
        t = min(t, self.horizon)
        edges = {}
        for key, info in self.edges.items():
            clipped = tuple((a, min(b, t)) for a, b in info.presence if a <= t)
            edges[key] = EdgeInfo(clipped, info.latency)
        return TimeVaryingGraph(self.nodes, edges, t, self.resolution)

    def without_edge(self, u: NodeId, v: NodeId) -> "TimeVaryingGraph":
        edges = {k: i for k, i in self.edges.items() if k != edge_key(u, v)}
        return TimeVaryingGraph(self.nodes, edges, self.horizon, self.resolution)


def _as_latency(spec) -> Latency:
    if isinstance(spec, Latency):
        return spec
    if isinstance(spec, int):
        return Latency.constant(spec)
    return Latency(tuple(tuple(s) for s in spec))


def edge_present(g: TimeVaryingGraph, e: Edge, t: int) -> bool:
    info = g.info(e)
    g._check_time(t)
    return info.interval_at(t) is not None


def present_throughout(g: TimeVaryingGraph, e: Edge, t0: int, d: int) -> bool:
    info = g.info(e)
    g._check_time(t0)
    if d < 0:
        raise TVGError("negative duration")
    iv = info.interval_at(t0)
    return iv is not None and t0 + d <= iv[1]


def latency_at(g: TimeVaryingGraph, e: Edge, t: int) -> int:
    return g.info(e).latency.at(t)


def neighbors_at(g: TimeVaryingGraph, u: NodeId, t: int) -> set:
    incident = g.incident(u)
    g._check_time(t)
    return {v for v, info in incident if info.interval_at(t) is not None}


def topology_change_times(g: TimeVaryingGraph, u: NodeId) -> list[int]:
    """Start and end ticks of every presence interval incident to ``u``."""
    times = set()
    for _, info in g.incident(u):
        for a, b in info.presence:
            times.add(a)
            times.add(b)
    return sorted(times)
