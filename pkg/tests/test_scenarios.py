import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynrelay.scenarios import (
    ContactRow,
    ContactTrace,
    GridSpec,
    bundled_trace,
    from_contact_trace,
    grid_moves,
    grid_positions,
    grid_walk,
    menger_fixture,
    parse_contact_trace,
    sociability_filter,
    synthetic_trace,
    to_contact_trace,
    write_contact_trace,
)
from dynrelay.tvg import Latency, TimeVaryingGraph, TVGError, edge_present


def test_menger_fixture_self_checks():
    g = menger_fixture(check=True)
    assert g.nodes == ("a", "b", "c", "p", "q")
    assert g.horizon == 2


def test_corner_has_three_moves():
    assert sorted(grid_moves((1, 1), 10)) == [(1, 1), (1, 2), (2, 1)]
    assert len(grid_moves((5, 5), 10)) == 5
    assert grid_moves((1, 1), 1) == [(1, 1)]


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(2, 6))
def test_positions_stay_on_grid_and_move_by_at_most_one(seed, n, robots):
    spec = GridSpec(n=n, robots=robots, steps=30, seed=seed)
    prev = None
    for pos in grid_positions(spec):
        assert all(1 <= i <= n and 1 <= j <= n for i, j in pos)
        if prev is not None:
            assert all(abs(a[0] - b[0]) + abs(a[1] - b[1]) <= 1 for a, b in zip(prev, pos))
        prev = pos


def test_colocated_robots_share_an_edge_at_zero():
    g = grid_walk(GridSpec(n=1, robots=2, steps=3, seed=0))
    assert edge_present(g, (0, 1), 0)
    assert g.edges[(0, 1)].presence == ((0, 3),)


def test_grid_is_deterministic_per_seed():
    a = grid_walk(GridSpec(seed=42, steps=200))
    b = grid_walk(GridSpec(seed=42, steps=200))
    c = grid_walk(GridSpec(seed=43, steps=200))
    assert a == b
    assert a != c


def test_until_meet_is_a_prefix_of_the_full_walk():
    spec = GridSpec(seed=5, steps=1000)
    short = grid_walk(spec, until_meet=(0, 1))
    full = grid_walk(spec)
    assert edge_present(short, (0, 1), short.horizon)
    clipped = {k: v for k, v in full.truncated(short.horizon).edges.items() if v.presence}
    assert clipped == dict(short.edges)


def test_grid_ticks_per_unit():
    g = grid_walk(GridSpec(n=1, robots=2, steps=2, seed=0, ticks_per_unit=10))
    assert g.edges[(0, 1)].presence == ((0, 29),)
    assert g.resolution == 10


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(n=0)
    with pytest.raises(ValueError):
        GridSpec(robots=1)


TRACE = """# comment line
node_u,node_v,t_start,t_end,latency
a,b,0,5,0
a,b,3,8,0
b,c,1.5,2,0.5
"""


def test_parse_and_merge():
    tr = parse_contact_trace(io.StringIO(TRACE), resolution=10)
    g = from_contact_trace(tr)
    assert g.edges[("a", "b")].presence == ((0, 80),)
    assert g.edges[("b", "c")].latency == Latency.constant(5)
    assert g.edges[("b", "c")].presence == ((15, 20),)


def test_integer_ids_and_optional_latency():
    tr = parse_contact_trace(io.StringIO("node_u,node_v,t_start,t_end\n2,1,0,3\n"))
    assert tr.rows == (ContactRow(2, 1, 0, 3, 0),)
    assert from_contact_trace(tr).nodes == (1, 2)


@pytest.mark.parametrize(
    "text",
    ["", "u,v,start,end\n", "node_u,node_v,t_start,t_end\na,b,5,1\n", "node_u,node_v,t_start,t_end\na,b,1\n",
     "node_u,node_v,t_start,t_end,latency\na,b,0,1,0\nb,a,3,4,1\n"],
)
def test_bad_traces(text):
    with pytest.raises(TVGError):
        from_contact_trace(parse_contact_trace(io.StringIO(text)))


def test_empty_trace_has_no_edges():
    g = from_contact_trace(ContactTrace(()), nodes=["x"])
    assert g.edges == {} and g.nodes == ("x",)


def test_round_trip():
    tr = parse_contact_trace(io.StringIO(TRACE), resolution=10)
    g = from_contact_trace(tr)
    out = io.StringIO()
    write_contact_trace(to_contact_trace(g), out)
    again = from_contact_trace(parse_contact_trace(io.StringIO(out.getvalue()), resolution=10))
    assert again == g
    assert to_contact_trace(again) == to_contact_trace(g)


def test_time_varying_latency_cannot_export():
    g = TimeVaryingGraph.build(["a", "b"], [("a", "b", [(0, 5)], [(0, 1), (3, 2)])], 5)
    with pytest.raises(TVGError):
        to_contact_trace(g)


def test_sociability_filter():
    rows = (ContactRow("a", "b", 0, 1), ContactRow("a", "c", 0, 1), ContactRow("b", "c", 2, 3), ContactRow("d", "e", 0, 0))
    tr = ContactTrace(rows)
    assert sociability_filter(tr, 5) == tr
    kept = sociability_filter(tr, 3)
    assert {x for r in kept.rows for x in (r.u, r.v)} == {"a", "b", "c"}
    # e and f tie with one contact each; e has the lower id
    tie = sociability_filter(ContactTrace(rows[3:] + (ContactRow("d", "f", 1, 1),)), 2)
    assert tie.rows == (ContactRow("d", "e", 0, 0),)
    with pytest.raises(ValueError):
        sociability_filter(tr, 0)


def test_bundled_trace_is_the_synthetic_generator_output():
    assert bundled_trace().rows == synthetic_trace().rows
    g = from_contact_trace(bundled_trace())
    assert len(g.nodes) == 10
