"""Exact minimum cuts of set collections and the feasibility conditions.

``min_cut`` is a minimum hitting set: the fewest nodes that intersect every
set of a collection.  A collection holding the empty set cannot be hit and
has cut size ``INFINITY``.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Iterable

from .temporal_paths import earliest_arrival, enumerate_path_sets, set_completion_times
from .tvg import NodeId, TimeVaryingGraph, TVGError, edge_key

INFINITY = math.inf

MODES = ("direct", "noncrypto", "crypto")


def is_cut(omega: Iterable[Iterable[NodeId]], c: Iterable[NodeId]) -> bool:
    c = set(c)
    return all(not c.isdisjoint(s) for s in omega)


def _as_masks(omega: Iterable[Iterable[NodeId]]) -> tuple[list, list[int]]:
    sets = [frozenset(s) for s in omega]
    universe = sorted(set().union(*sets)) if sets else []
    index = {u: i for i, u in enumerate(universe)}
    masks = {sum(1 << index[u] for u in s) for s in sets}
    return universe, sorted(masks, key=lambda m: (m.bit_count(), m))


def _reduce(masks: list[int]) -> list[int]:
    """Drop duplicates and supersets; hitting a set hits all its supersets."""
    kept: list[int] = []
    for m in sorted(set(masks), key=lambda m: (m.bit_count(), m)):
        if not any(k & m == k for k in kept):
            kept.append(m)
    return kept


def _disjoint_lower_bound(masks: list[int]) -> int:
    used = 0
    count = 0
    for m in masks:
        if not m & used:
            used |= m
            count += 1
    return count


def _search(masks: list[int], limit: int) -> int | None:
    """Smallest hitting set of size ``<= limit`` as a bitmask, or None.

    Branches on the smallest unhit set, elements in ascending order; in the
    i-th branch the earlier elements are excluded, which lets singleton
    propagation fire sooner.
    """
    best_size = limit + 1
    best: int | None = None

    def rec(sets: list[int], chosen: int, size: int) -> None:
        nonlocal best, best_size
        while True:
            forced = 0
            for s in sets:
                if s & (s - 1) == 0:
                    forced |= s
            if not forced:
                break
            chosen |= forced
            size += forced.bit_count()
            sets = [s for s in sets if not s & forced]
        if size >= best_size:
            return
        if not sets:
            best, best_size = chosen, size
            return
        sets = _reduce(sets)
        if size + _disjoint_lower_bound(sets) >= best_size:
            return
        pivot = sets[0]
        excluded = 0
        bits = pivot
        while bits:
            bit = bits & -bits
            bits ^= bit
            rest = []
            for s in sets:
                if s & bit:
                    continue
                s &= ~excluded
                if not s:
                    break
                rest.append(s)
            else:
                rec(rest, chosen | bit, size + 1)
            excluded |= bit

    rec(list(masks), 0, 0)
    return best


def min_cut_witness(omega: Iterable[Iterable[NodeId]]) -> frozenset | None:
    """A minimum hitting set, or None when the collection holds the empty set."""
    universe, masks = _as_masks(omega)
    if masks and masks[0] == 0:
        return None
    found = _search(masks, len(universe))
    return frozenset(u for i, u in enumerate(universe) if found >> i & 1)


def min_cut(omega: Iterable[Iterable[NodeId]]) -> int | float:
    witness = min_cut_witness(omega)
    return INFINITY if witness is None else len(witness)


def min_cut_exceeds(omega: Iterable[Iterable[NodeId]], k: int) -> bool:
    """True iff no hitting set of size ``<= k`` exists."""
    if k < 0:
        raise ValueError("k must be non-negative")
    universe, masks = _as_masks(omega)
    if masks and masks[0] == 0:
        return True
    return _search(masks, k) is None


def dyn_min_cut(g: TimeVaryingGraph, p: NodeId, q: NodeId, *, start: int = 0) -> int | float:
    """Minimum number of nodes whose removal severs every dynamic path (enumeration route)."""
    return min_cut(enumerate_path_sets(g, p, q, start=start))


def dyn_min_cut_by_removal(g: TimeVaryingGraph, p: NodeId, q: NodeId, *, start: int = 0) -> int | float:
    """Same quantity by cardinality-increasing node removal checked with foremost journeys."""
    if p == q:
        raise TVGError("source and destination must differ")
    others = [u for u in g.nodes if u != p and u != q]
    if earliest_arrival(g, p, q, start, others) is not None:
        return INFINITY
    for r in range(len(others) + 1):
        for c in combinations(others, r):
            if earliest_arrival(g, p, q, start, c) is None:
                return r
    raise AssertionError("removing every intermediate node must disconnect")


def feasible_noncrypto(g: TimeVaryingGraph, p: NodeId, q: NodeId, k: int) -> bool:
    return dyn_min_cut(g, p, q) > 2 * k


def feasible_crypto(g: TimeVaryingGraph, p: NodeId, q: NodeId, k: int) -> bool:
    return dyn_min_cut(g, p, q) > k


def threshold_times(completion: dict[frozenset, int], thresholds: Iterable[int]) -> dict[int, int | None]:
    """First time at which the sets completed so far have a cut larger than each threshold."""
    pending = sorted(set(thresholds))
    out: dict[int, int | None] = {h: None for h in pending}
    by_time: dict[int, list[frozenset]] = {}
    for s, t in completion.items():
        by_time.setdefault(t, []).append(s)
    antichain: list[frozenset] = []
    for t in sorted(by_time):
        changed = False
        for s in sorted(by_time[t], key=len):
            if any(a <= s for a in antichain):
                continue
            antichain = [a for a in antichain if not s <= a]
            antichain.append(s)
            changed = True
        if not changed:
            continue
        while pending and min_cut_exceeds(antichain, pending[0]):
            out[pending.pop(0)] = t
        if not pending:
            break
    return out


def mode_threshold(mode: str, k: int) -> int | None:
    if k < 0:
        raise ValueError("k must be non-negative")
    if mode == "noncrypto":
        return 2 * k
    if mode == "crypto":
        return k
    if mode == "direct":
        return None
    raise ValueError(f"unknown mode {mode!r}")


def direct_time(g: TimeVaryingGraph, p: NodeId, q: NodeId, start: int = 0) -> int | None:
    info = g.edges.get(edge_key(p, q))
    if info is None:
        return None
    hop = info.earliest_hop(start)
    return None if hop is None else hop[1]


def condition_times(
    g: TimeVaryingGraph,
    p: NodeId,
    q: NodeId,
    ks: Iterable[int],
    modes: Iterable[str] = MODES,
    start: int = 0,
    until: int | None = None,
) -> dict[tuple[str, int], int | None]:
    """``condition_time`` for several ``(mode, k)`` at once, sharing one completion sweep.

    ``until`` caps the search: conditions first met after it report ``None``.
    """
    ks = list(ks)
    modes = list(modes)
    wanted = {(m, k): mode_threshold(m, k) for m in modes for k in ks}
    out: dict[tuple[str, int], int | None] = {}
    thresholds = {h for h in wanted.values() if h is not None}
    if thresholds:
        times = threshold_times(set_completion_times(g, p, q, start, until=until), thresholds)
    d = direct_time(g, p, q, start)
    if d is not None and until is not None and d > until:
        d = None
    for key, h in wanted.items():
        out[key] = d if h is None else times[h]
    return out


def condition_time(
    g: TimeVaryingGraph, p: NodeId, q: NodeId, k: int, mode: str, start: int = 0
) -> int | None:
    """Earliest time by which the graph truncated there satisfies the mode's condition.

    ``direct``: a one-hop path has delivered.  ``noncrypto``: the dynamic
    min-cut of paths delivered so far exceeds ``2k``.  ``crypto``: exceeds
    ``k``.  Only paths sent no earlier than ``start`` count.
    """
    return condition_times(g, p, q, [k], [mode], start)[(mode, k)]
