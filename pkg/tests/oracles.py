"""Slow, obviously-correct reference implementations used only by the tests.

They walk time tick by tick and enumerate subsets exhaustively, sharing no
code with the library beyond the graph accessors.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import networkx as nx

from dynrelay.tvg import TimeVaryingGraph, edge_key, edge_present, latency_at


def brute_min_cut(sets) -> float:
    sets = [frozenset(s) for s in sets]
    if any(not s for s in sets):
        return float("inf")
    universe = sorted(set().union(*sets)) if sets else []
    for size in range(len(universe) + 1):
        for c in combinations(universe, size):
            cs = set(c)
            if all(s & cs for s in sets):
                return size
    raise AssertionError("unreachable")


def hop_arrivals(g: TimeVaryingGraph, u, v, ready: int) -> set[int]:
    """Every arrival time of a single hop u->v sent at some tick >= ready."""
    e = edge_key(u, v)
    if e not in g.edges:
        return set()
    out = set()
    for t in range(ready, g.horizon + 1):
        d = latency_at(g, e, t)
        if t + d > g.horizon:
            continue
        if all(edge_present(g, e, x) for x in range(t, t + d + 1)):
            out.add(t + d)
    return out


def brute_completion(g: TimeVaryingGraph, p, q, start: int = 0) -> dict[frozenset, int]:
    """Every intermediate set of a dynamic path p->q, with its earliest arrival."""
    best: dict[frozenset, int] = {}

    @lru_cache(maxsize=None)
    def explore(u, ready, visited: frozenset):
        for v in g.nodes:
            if v in visited:
                continue
            for arr in sorted(hop_arrivals(g, u, v, ready)):
                if v == q:
                    inner = visited - {p}
                    if inner not in best or arr < best[inner]:
                        best[inner] = arr
                else:
                    explore(v, arr, visited | {v})

    explore(p, start, frozenset({p}))
    return best


def brute_path_sets(g, p, q, start: int = 0) -> set[frozenset]:
    return set(brute_completion(g, p, q, start))


def brute_dyn_min_cut(g, p, q) -> float:
    return brute_min_cut(brute_path_sets(g, p, q))


THRESHOLD = {"noncrypto": lambda k: 2 * k, "crypto": lambda k: k}


def scan_condition_time(g, p, q, k: int, mode: str, start: int = 0):
    """Smallest T such that the paths delivered by T meet the mode's condition."""
    comp = brute_completion(g, p, q, start)
    for T in range(start, g.horizon + 1):
        delivered = [s for s, t in comp.items() if t <= T]
        if mode == "direct":
            if frozenset() in delivered:
                return T
        elif delivered and brute_min_cut(delivered) > THRESHOLD[mode](k):
            return T
    return None


def static_vertex_connectivity(edges, nodes, p, q) -> float:
    """Local vertex connectivity of a static graph (infinite when p and q are adjacent)."""
    G = nx.Graph()
    G.add_nodes_from(nodes)
    G.add_edges_from(edges)
    if G.has_edge(p, q):
        return float("inf")
    return nx.node_connectivity(G, p, q)


def static_disjoint_paths(edges, nodes, p, q) -> int:
    """Max internally disjoint p-q paths, the direct edge counting as one."""
    G = nx.Graph()
    G.add_nodes_from(nodes)
    G.add_edges_from(edges)
    direct = 1 if G.has_edge(p, q) else 0
    if direct:
        G.remove_edge(p, q)
    if not nx.has_path(G, p, q):
        return direct
    return direct + nx.node_connectivity(G, p, q)
