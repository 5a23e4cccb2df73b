import random

import pytest

from dynrelay.adversary import (
    STRATEGY_KINDS,
    AttackWitness,
    PlacementBudgetExceeded,
    indistinguishability_attack,
    worst_case_placement,
)
from dynrelay.cut import dyn_min_cut
from dynrelay.protocol import CRYPTO, NONCRYPTO, TupleRecord
from dynrelay.scenarios import menger_fixture, random_tvg
from dynrelay.sim import RunConfig, first_acceptance_time, run
from dynrelay.strategies import (
    Crash,
    FabricateVisited,
    ForgeSource,
    MutatePayload,
    Placement,
    fabricated_records,
    is_mutation,
    make_strategy,
    mutate,
)
from dynrelay.tvg import TimeVaryingGraph


def three_relays():
    """p reaches q through three disjoint relays at distinct times; DynMinCut = 3."""
    rows = []
    for i, r in enumerate("abc"):
        rows += [("p", r, [(i, i)]), (r, "q", [(i + 1, i + 1)])]
    return TimeVaryingGraph.build(["a", "b", "c", "p", "q"], rows, 4)


def test_three_relays_fixture():
    assert dyn_min_cut(three_relays(), "p", "q") == 3


def test_worst_case_k0_is_harmless():
    report = worst_case_placement(menger_fixture(), "p", "q", 0)
    assert report.placement.byzantine == frozenset()
    assert not report.safety_violated and not report.liveness_violated
    assert len(report.evaluated) == 1


def test_worst_case_on_figure_one_blocks_noncrypto():
    report = worst_case_placement(menger_fixture(), "p", "q", 1)
    assert report.liveness_violated and not report.safety_violated
    assert len(report.placement.byzantine) == 1


def test_worst_case_feasible_instance_is_safe_and_live():
    g = three_relays()
    for mode in (NONCRYPTO, CRYPTO):
        report = worst_case_placement(g, "p", "q", 1, mode=mode)
        assert not report.safety_violated and not report.liveness_violated
        # delay is the remaining harm: the best placement pushes acceptance to the last path
        assert report.worst.accepted_at == 3 if mode == NONCRYPTO else report.worst.accepted_at >= 1


def test_worst_case_budget_error_carries_partial_results():
    with pytest.raises(PlacementBudgetExceeded) as info:
        worst_case_placement(menger_fixture(), "p", "q", 1, budget=4)
    assert len(info.value.partial.evaluated) == 4
    assert not info.value.partial.complete


def test_worst_case_rejects_bad_arguments():
    with pytest.raises(ValueError):
        worst_case_placement(menger_fixture(), "p", "q", -1)
    with pytest.raises(ValueError):
        worst_case_placement(menger_fixture(), "p", "q", 1, ["teleport"])


def test_attack_on_figure_one():
    w = indistinguishability_attack(menger_fixture(), "p", "q", 1, b"x", b"y")
    assert isinstance(w, AttackWitness)
    assert w.identical and w.replay_verified
    assert w.transcript_1 and w.transcript_1 == w.transcript_2
    assert len(w.cut) == 2 and len(w.c1) == 1 and len(w.c2) == 1
    assert w.accepted_1 == w.accepted_2
    text = w.to_text()
    assert "transcripts identical: yes" in text
    assert text == indistinguishability_attack(menger_fixture(), "p", "q", 1, b"x", b"y").to_text()


def test_attack_returns_none_when_cut_is_large():
    assert indistinguishability_attack(three_relays(), "p", "q", 1, b"x", b"y") is None
    direct = TimeVaryingGraph.build(["p", "q"], [("p", "q", [(0, 2)])], 2)
    assert indistinguishability_attack(direct, "p", "q", 0, b"x", b"y") is None


def test_attack_rejects_equal_payloads():
    with pytest.raises(ValueError):
        indistinguishability_attack(menger_fixture(), "p", "q", 1, b"x", b"x")


def test_attack_holds_on_random_small_cuts():
    rng = random.Random(3)
    seen = 0
    while seen < 25:
        g = random_tvg(rng, nodes=rng.randint(4, 7), horizon=rng.randint(4, 10), density=0.6, varying_latency=True)
        k = rng.randint(1, 2)
        if dyn_min_cut(g, 0, 1) > 2 * k:
            continue
        seen += 1
        for mode in (NONCRYPTO, CRYPTO):
            w = indistinguishability_attack(g, 0, 1, k, b"m", b"m'", mode=mode)
            assert w.identical and w.replay_verified


def test_strategy_factory_covers_family():
    g = menger_fixture()
    for kind in STRATEGY_KINDS:
        s = make_strategy(kind, "a", g.nodes, "p", horizon=10)
        assert s.kind == kind
    assert make_strategy("crash", "a", g.nodes, "p", horizon=10).at == 5
    with pytest.raises(ValueError):
        make_strategy("nope", "a", g.nodes, "p")


def test_placement_validation():
    pl = Placement({"a"}, {"b": Crash()})
    assert pl.byzantine == {"a", "b"}
    with pytest.raises(ValueError):
        pl.validate(1)
    with pytest.raises(ValueError):
        Placement({"p"}).validate(1, ("p", "q"))
    Placement({"a"}).validate(1, ("p", "q"))


def test_mutate_is_an_involution_free_change():
    assert mutate(b"x") != b"x"
    assert is_mutation(mutate(b"x")) and not is_mutation(b"x")


def test_fabricated_records_claim_many_routes():
    recs = fabricated_records("p", b"f", ["a", "b", "c", "p", "q"], "a", max_size=1)
    assert TupleRecord("p", b"f", frozenset({"p"})) in recs
    assert TupleRecord("p", b"f", frozenset({"p", "b"})) in recs
    assert all("a" not in r.visited for r in recs)


@pytest.mark.parametrize("strategy", [ForgeSource("p", b"evil"), MutatePayload(), FabricateVisited(fabricated_records("p", b"evil", "abcpq", "a"))])
@pytest.mark.parametrize("mode", [NONCRYPTO, CRYPTO])
def test_lying_relay_cannot_fool_q_when_condition_holds(strategy, mode):
    g = three_relays()
    r = run(RunConfig(g, 1, mode, placement=Placement({"a"}, {"a": strategy}), broadcast_starts={"p": 0}))
    assert r.safety_violations() == []
    assert first_acceptance_time(r, "p", "q") is not None
