import csv
import io
from pathlib import Path

import pytest

from dynrelay.cli import main, parse_ks, parse_modes, read_config, UsageError

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_helpers():
    assert parse_ks("0-3") == [0, 1, 2, 3]
    assert parse_ks("2,0,2") == [0, 2]
    assert parse_modes("all") == ["direct", "noncrypto", "crypto"]
    assert parse_modes("crypto,direct") == ["direct", "crypto"]
    with pytest.raises(UsageError):
        parse_ks("")
    with pytest.raises(UsageError):
        parse_modes("magic")


def test_analyze_menger_pair(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--k", "1", "--pair", "p,q")
    assert code == 0
    got = {r["mode"]: float(r["fraction"]) for r in rows(out)}
    assert got == {"direct": 0.0, "noncrypto": 0.0, "crypto": 1.0}


def test_analyze_zero_window_counts_only_immediate_pairs(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--scenario", "trace", "--k", "0", "--window", "0", "--mode", "direct")
    assert code == 0
    from dynrelay.cut import condition_time
    from dynrelay.scenarios import bundled_trace, from_contact_trace

    g = from_contact_trace(bundled_trace())
    for r in rows(out)[:20]:
        s = int(r["start_time"])
        pairs = [(p, q) for i, p in enumerate(g.nodes) for q in g.nodes[i + 1 :]]
        hits = sum(condition_time(g, p, q, 0, "direct", s) == s for p, q in pairs)
        assert float(r["fraction"]) == pytest.approx(hits / len(pairs), abs=1e-6)


def test_analyze_fractions_nested_and_monotone_in_k(capsys):
    _, out, _ = run_cli(capsys, "analyze", "--scenario", "trace", "--k", "0-3")
    table = {(r["start_time"], r["mode"], int(r["k"])): float(r["fraction"]) for r in rows(out)}
    for (s, mode, k), f in table.items():
        assert table[(s, "direct", k)] <= table[(s, "crypto", k)]
        assert table[(s, "noncrypto", k)] <= table[(s, "crypto", k)]
        if k > 0:
            assert f <= table[(s, mode, k - 1)]


def test_analyze_golden(capsys):
    _, out, _ = run_cli(capsys, "analyze", "--scenario", "trace", "--k", "0-2")
    assert out == (GOLDEN / "analyze_trace.csv").read_text()


def test_ordered_pairs(capsys):
    from dynrelay.cut import condition_time
    from dynrelay.scenarios import menger_fixture

    _, out, _ = run_cli(capsys, "analyze", "--k", "0", "--mode", "crypto", "--pairs", "ordered")
    g = menger_fixture()
    pairs = [(p, q) for p in g.nodes for q in g.nodes if p != q]
    hits = sum(condition_time(g, p, q, 0, "crypto") is not None for p, q in pairs)
    assert float(rows(out)[0]["fraction"]) == pytest.approx(hits / 20, abs=1e-6)


def test_meantime_grid(capsys):
    code, out, _ = run_cli(capsys, "meantime", "--runs", "20", "--k", "0-1")
    assert code == 0
    table = {(int(r["k"]), r["mode"]): r for r in rows(out)}
    assert set(table) == {(k, m) for k in (0, 1) for m in ("direct", "noncrypto", "crypto")}
    assert all(int(r["runs"]) == 20 for r in table.values())
    mean = lambda k, m: float(table[(k, m)]["mean"])  # noqa: E731
    assert mean(1, "crypto") <= mean(1, "noncrypto") <= mean(1, "direct")


def test_meantime_trace_and_bad_scenario(capsys):
    code, out, _ = run_cli(capsys, "meantime", "--scenario", "trace", "--k", "0")
    assert code == 0 and out.startswith("k,mode,mean,failures,runs\n")
    code, _, err = run_cli(capsys, "meantime", "--scenario", "menger")
    assert code == 1 and "grid or trace" in err


def test_simulate_menger_worst(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--k", "1", "--mode", "crypto", "--placement", "worst")
    assert code == 0 and "q accepts p's message: at 2" in out
    code, out, _ = run_cli(capsys, "simulate", "--k", "1", "--mode", "noncrypto", "--placement", "worst")
    assert code == 0 and "q accepts p's message: never" in out


def test_simulate_explicit_placement_and_events(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--k", "1", "--placement", "b", "--strategy", "forge_source", "--events")
    assert code == 0
    assert "Byzantine placement: b (forge_source)" in out
    assert "events:" in out


def test_simulate_exit_code_two_on_violation(capsys):
    # one liar against k=0 voids the guarantee, so forging succeeds
    code, out, err = run_cli(capsys, "simulate", "--k", "0", "--placement", "a", "--strategy", "forge_source", "--pair", "p,c")
    assert code == 2
    assert "exceeds k" in err
    assert "safety violations: 0" not in out


def test_simulate_grid_all_sources(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--scenario", "grid", "--horizon", "30", "--k", "0", "--all-sources")
    assert code == 0 and "receiver,source,payload,time" in out


def test_simulate_rejects_bad_placement(capsys):
    code, _, err = run_cli(capsys, "simulate", "--k", "1", "--placement", "p")
    assert code == 1 and "protected" in err
    code, _, err = run_cli(capsys, "simulate", "--k", "1", "--placement", "zz")
    assert code == 1 and "unknown node" in err


def test_attack_outputs(capsys):
    code, out, _ = run_cli(capsys, "attack", "--k", "1")
    assert code == 0 and out == (GOLDEN / "attack_menger.txt").read_text()
    code, out, _ = run_cli(capsys, "attack", "--k", "0", "--scenario", "trace")
    assert code == 0 and out.startswith("no witness")


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# menger pair\nscenario = menger\nk = 1\npair = p,q\n--mode = crypto\n")
    code, out, _ = run_cli(capsys, "analyze", "--config", str(cfg))
    assert code == 0 and rows(out) == [{"start_time": "0", "mode": "crypto", "k": "1", "fraction": "1.000000"}]
    # flags win over the file
    code, out, _ = run_cli(capsys, "analyze", "--config", str(cfg), "--k", "0")
    assert rows(out)[0]["k"] == "0"


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    code, _, err = run_cli(capsys, "analyze", "--config", str(bad))
    assert code == 1 and "colour" in err
    code, _, err = run_cli(capsys, "analyze", "--config", str(tmp_path / "missing.cfg"))
    assert code == 1
    bad.write_text("just words\n")
    with pytest.raises(UsageError):
        read_config(str(bad))


def test_unreadable_trace(capsys, tmp_path):
    code, _, err = run_cli(capsys, "analyze", "--scenario", "trace", "--trace", str(tmp_path / "nope.csv"))
    assert code == 1 and "cannot read trace" in err


def test_output_file(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert main(["analyze", "--k", "1", "--out", str(out)]) == 0
    assert out.read_text().startswith("start_time,mode,k,fraction\n")
