"""Hypothesis strategies for small random graphs."""

from hypothesis import strategies as st

from dynrelay.tvg import EdgeInfo, Latency, TimeVaryingGraph, normalize_intervals


@st.composite
def tvgs(draw, min_nodes=3, max_nodes=6, max_horizon=8, latencies=(0, 1, 2), varying=True):
    """Small random graphs over nodes 0..n-1 (0 and 1 serve as p and q)."""
    n = draw(st.integers(min_nodes, max_nodes))
    horizon = draw(st.integers(1, max_horizon))
    edges = {}
    for u in range(n):
        for v in range(u + 1, n):
            if not draw(st.booleans()):
                continue
            raw = draw(
                st.lists(
                    st.tuples(st.integers(0, horizon), st.integers(0, horizon)).map(lambda ab: (min(ab), max(ab))),
                    min_size=1,
                    max_size=3,
                )
            )
            if varying and draw(st.booleans()):
                times = draw(st.lists(st.integers(1, horizon), max_size=2, unique=True))
                steps = [(0, draw(st.sampled_from(latencies)))]
                steps += [(t, draw(st.sampled_from(latencies))) for t in sorted(times)]
                latency = Latency(tuple(steps))
            else:
                latency = Latency.constant(draw(st.sampled_from(latencies)))
            edges[(u, v)] = EdgeInfo(normalize_intervals(raw), latency)
    return TimeVaryingGraph(tuple(range(n)), edges, horizon)


def bounded_tvg(rng, max_nodes=8, max_intervals=20, max_horizon=16, latencies=(0, 1, 2), dense=0.5):
    """Random graph with at most ``max_intervals`` presence intervals in total (plain ``random``)."""
    import itertools

    n = rng.randint(3, max_nodes)
    horizon = rng.randint(3, max_horizon)
    pairs = [pq for pq in itertools.combinations(range(n), 2) if rng.random() < dense]
    rng.shuffle(pairs)
    budget = max_intervals
    edges = {}
    for u, v in pairs:
        if budget <= 0:
            break
        count = min(budget, rng.randint(1, 3))
        budget -= count
        raw = []
        for _ in range(count):
            a = rng.randint(0, horizon)
            raw.append((a, min(horizon, a + rng.randint(0, max(1, horizon // 3)))))
        if rng.random() < 0.25:
            times = sorted(rng.sample(range(1, horizon + 1), k=min(2, horizon)))
            latency = Latency(((0, rng.choice(latencies)),) + tuple((t, rng.choice(latencies)) for t in times))
        else:
            latency = Latency.constant(rng.choice(latencies))
        edges[(u, v)] = EdgeInfo(normalize_intervals(raw), latency)
    return TimeVaryingGraph(tuple(range(n)), edges, horizon)
