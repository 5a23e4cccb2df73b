"""Dynamic paths: validation, enumeration, foremost journeys, disjointness.

A dynamic path ``(u_1, ..., u_n)`` with dates ``(t_1, ..., t_n)`` requires, for
every hop, an edge present throughout ``[t_i, t_i + latency(t_i)]`` and
``t_i + latency(t_i) <= t_{i+1}``.  Dates here are send dates, with the last
one being the arrival date at the destination.

Node sets returned by the enumerators are the *intermediate* nodes of a
path (source and destination excluded), so a direct hop yields the empty
set.
"""

from __future__ import annotations

import heapq
import math
from typing import Iterable, Iterator, Sequence

from .tvg import NodeId, TimeVaryingGraph, TVGError, edge_key

DEFAULT_SET_CAP = 10**6
DEFAULT_DP_NODES = 18

PathSets = frozenset  # frozenset[frozenset[NodeId]]


class EnumerationCapExceeded(RuntimeError):
    def __init__(self, cap: int, partial: int):
        super().__init__(f"enumeration exceeded cap of {cap} (found {partial} so far)")
        self.cap = cap
        self.partial = partial


def _check_nodes(g: TimeVaryingGraph, *nodes: NodeId) -> None:
    for u in nodes:
        g.incident(u)


def is_dynamic_path(g: TimeVaryingGraph, nodes: Sequence[NodeId], dates: Sequence[int]) -> bool:
    if len(nodes) != len(dates):
        raise TVGError("nodes and dates differ in length")
    if not nodes:
        raise TVGError("empty path")
    _check_nodes(g, *nodes)
    if len(set(nodes)) != len(nodes):
        return False
    if any(t < 0 or t > g.horizon for t in dates):
        return False
    for i in range(len(nodes) - 1):
        key = edge_key(nodes[i], nodes[i + 1])
        info = g.edges.get(key)
        if info is None:
            return False
        t = dates[i]
        d = info.latency.at(t)
        iv = info.interval_at(t)
        if iv is None or t + d > iv[1]:
            return False
        if d > dates[i + 1] - t:
            return False
    return True


def enumerate_paths(
    g: TimeVaryingGraph, p: NodeId, q: NodeId, start: int = 0
) -> Iterator[tuple[tuple, tuple]]:
    """Yield every simple dynamic path ``p -> q`` with its earliest witness dates.

    For a fixed node sequence, taking each hop as early as possible is
    optimal: the time a node can hold the message is upward closed, so the
    earliest hop arrival is monotone in the ready time.
    """
    _check_nodes(g, p, q)
    if p == q:
        raise TVGError("source and destination must differ")
    path = [p]
    dates: list[int] = []
    on_path = {p}

    def extend(u: NodeId, ready: int):
        for v, info in g.incident(u):
            if v in on_path:
                continue
            hop = info.earliest_hop(ready)
            if hop is None:
                continue
            send, arrival = hop
            if v == q:
                yield tuple(path) + (q,), tuple(dates) + (send, arrival)
                continue
            path.append(v)
            dates.append(send)
            on_path.add(v)
            yield from extend(v, arrival)
            on_path.discard(v)
            dates.pop()
            path.pop()

    yield from extend(p, start)


def minimal_sets(sets: Iterable[frozenset]) -> frozenset:
    """Inclusion-minimal members of a set collection."""
    ordered = sorted(set(sets), key=len)
    kept: list[frozenset] = []
    for s in ordered:
        if not any(k <= s for k in kept):
            kept.append(s)
    return frozenset(kept)


def enumerate_path_sets(
    g: TimeVaryingGraph,
    p: NodeId,
    q: NodeId,
    *,
    start: int = 0,
    minimal: bool = True,
    cap: int = DEFAULT_SET_CAP,
) -> PathSets:
    """Intermediate-node sets of the dynamic paths from ``p`` to ``q``.

    With ``minimal=True`` only inclusion-minimal sets are returned.  Any
    superset ``S' ⊇ S`` is hit by every cut that hits ``S``, so dropping it
    changes neither the cut family nor disjoint-path packings; a DFS branch
    whose node set already contains an emitted set is therefore abandoned.
    """
    _check_nodes(g, p, q)
    if p == q:
        raise TVGError("source and destination must differ")
    found: set[frozenset] = set()
    emitted: list[frozenset] = []
    path = [p]
    inner: set = set()
    on_path = {p}

    def covered() -> bool:
        return any(e <= inner for e in emitted)

    def extend(u: NodeId, ready: int):
        for v, info in g.incident(u):
            if v in on_path:
                continue
            hop = info.earliest_hop(ready)
            if hop is None:
                continue
            if v == q:
                s = frozenset(inner)
                if s not in found:
                    found.add(s)
                    emitted.append(s)
                    if len(found) > cap:
                        raise EnumerationCapExceeded(cap, len(found))
                continue
            inner.add(v)
            on_path.add(v)
            if not (minimal and covered()):
                extend(v, hop[1])
            on_path.discard(v)
            inner.discard(v)

    extend(p, start)
    return minimal_sets(found) if minimal else frozenset(found)


def set_completion_times(
    g: TimeVaryingGraph,
    p: NodeId,
    q: NodeId,
    start: int = 0,
    *,
    max_nodes: int = DEFAULT_DP_NODES,
    until: int | None = None,
) -> dict[frozenset, int]:
    """Earliest arrival at ``q`` over dynamic paths with exactly each intermediate set.

    Dynamic programming over (visited set, last node): the earliest time the
    message can sit at ``v`` having crossed exactly ``S`` is enough to decide
    every extension, because holding times are upward closed.  Only sets with
    at least one dynamic path appear in the result.  With ``until``, paths
    arriving later than that are left out (and never explored).
    """
    limit = math.inf if until is None else until
    _check_nodes(g, p, q)
    if p == q:
        raise TVGError("source and destination must differ")
    inner_nodes = [u for u in g.nodes if u != p and u != q]
    if len(inner_nodes) > max_nodes:
        raise EnumerationCapExceeded(max_nodes, len(inner_nodes))
    index = {u: i for i, u in enumerate(inner_nodes)}
    n = len(inner_nodes)
    infos_q = {}
    adj: list[list[tuple[int, object]]] = [[] for _ in range(n)]
    for v, info in g.incident(q):
        if v in index:
            infos_q[index[v]] = info
    for i, u in enumerate(inner_nodes):
        for v, info in g.incident(u):
            j = index.get(v)
            if j is not None:
                adj[i].append((j, info))

    result: dict[frozenset, int] = {}
    direct = g.edges.get(edge_key(p, q))
    if direct is not None:
        hop = direct.earliest_hop(start)
        if hop is not None and hop[1] <= limit:
            result[frozenset()] = hop[1]

    # layer[mask] = {last_index: earliest holding time}
    layer: dict[int, dict[int, int]] = {}
    for v, info in g.incident(p):
        i = index.get(v)
        if i is None:
            continue
        hop = info.earliest_hop(start)
        if hop is not None and hop[1] <= limit:
            layer[1 << i] = {i: hop[1]}

    while layer:
        nxt: dict[int, dict[int, int]] = {}
        for mask, ends in layer.items():
            best_q = None
            for i, ready in ends.items():
                qi = infos_q.get(i)
                if qi is not None:
                    hop = qi.earliest_hop(ready)
                    if hop is not None and hop[1] <= limit and (best_q is None or hop[1] < best_q):
                        best_q = hop[1]
                for j, info in adj[i]:
                    bit = 1 << j
                    if mask & bit:
                        continue
                    hop = info.earliest_hop(ready)
                    if hop is None or hop[1] > limit:
                        continue
                    slot = nxt.setdefault(mask | bit, {})
                    if j not in slot or hop[1] < slot[j]:
                        slot[j] = hop[1]
            if best_q is not None:
                result[frozenset(inner_nodes[i] for i in range(n) if mask >> i & 1)] = best_q
        layer = nxt
    return result


def earliest_arrival(
    g: TimeVaryingGraph,
    p: NodeId,
    q: NodeId,
    start: int = 0,
    excluded: Iterable[NodeId] = (),
) -> int | None:
    """Foremost journey arrival time from ``p`` to ``q`` avoiding ``excluded``.

    Label-setting on earliest holding times.  A foremost journey never needs
    to revisit a node, so no distinctness bookkeeping is required.
    """
    _check_nodes(g, p, q)
    excluded = set(excluded)
    if p in excluded or q in excluded:
        raise TVGError("source or destination is excluded")
    if p == q:
        return start
    best = {p: start}
    heap = [(start, 0, p)]
    counter = 1
    done = set()
    while heap:
        t, _, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == q:
            return t
        done.add(u)
        for v, info in g.incident(u):
            if v in done or v in excluded:
                continue
            hop = info.earliest_hop(t)
            if hop is None:
                continue
            if v not in best or hop[1] < best[v]:
                best[v] = hop[1]
                heapq.heappush(heap, (hop[1], counter, v))
                counter += 1
    return None


def max_disjoint_paths(
    g: TimeVaryingGraph, p: NodeId, q: NodeId, *, start: int = 0, cap: int = DEFAULT_SET_CAP
) -> int:
    """Largest number of pairwise internally node-disjoint dynamic paths ``p -> q``.

    Exhaustive set packing over the minimal intermediate sets; replacing a
    path's set by a subset never breaks disjointness.
    """
    sets = enumerate_path_sets(g, p, q, start=start, minimal=True, cap=cap)
    direct = 1 if frozenset() in sets else 0
    if direct:
        # the empty set would swallow every other minimal set; pack the rest separately
        sets = enumerate_path_sets(g.without_edge(p, q), p, q, start=start, minimal=True, cap=cap)
    items = sorted((s for s in sets if s), key=lambda s: (len(s), sorted(s)))
    return direct + max_packing(items)


def max_packing(sets: Sequence[frozenset]) -> int:
    """Maximum number of pairwise disjoint sets (exact branch and bound)."""
    universe = sorted(set().union(*sets)) if sets else []
    index = {u: i for i, u in enumerate(universe)}
    masks = [sum(1 << index[u] for u in s) for s in sets]
    best = 0

    def search(i: int, used: int, count: int) -> None:
        nonlocal best
        if count > best:
            best = count
        if count + (len(masks) - i) <= best:
            return
        for j in range(i, len(masks)):
            if not masks[j] & used:
                search(j + 1, used | masks[j], count + 1)

    search(0, 0, 0)
    return best
