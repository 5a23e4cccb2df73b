"""Command-line experiment runner.

Subcommands: ``analyze`` (pair fractions per start time), ``meantime``
(mean communication time against k), ``simulate`` (one protocol run with
optional Byzantine placement) and ``attack`` (two-placement
indistinguishability witness).  Every flag can also come from a
``--config`` file of ``key = value`` lines; command-line flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import adversary, experiments
from .cut import MODES, dyn_min_cut
from .protocol import CRYPTO, NONCRYPTO
from .scenarios import (
    GridSpec,
    bundled_trace,
    from_contact_trace,
    grid_walk,
    menger_fixture,
    read_contact_trace,
    sociability_filter,
)
from .sim import RunConfig, first_acceptance_time, run
from .strategies import STRATEGY_KINDS, Placement, make_strategy
from .tvg import TimeVaryingGraph, TVGError, to_ticks

log = logging.getLogger("dynrelay")

SCENARIOS = ("menger", "grid", "trace")


class UsageError(Exception):
    pass


# -- argument helpers --------------------------------------------------------


def parse_ks(text: str) -> list[int]:
    """``"1"``, ``"0,2,3"`` or ``"0-4"`` (inclusive)."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out or any(k < 0 for k in out):
        raise UsageError(f"bad k list {text!r}")
    return sorted(set(out))


def parse_modes(text: str, allowed: Sequence[str] = MODES) -> list[str]:
    if text in ("all", "", None):
        return list(allowed)
    modes = [m.strip() for m in str(text).split(",") if m.strip()]
    for m in modes:
        if m not in allowed:
            raise UsageError(f"unknown mode {m!r}; choose from {', '.join(allowed)}")
    return [m for m in allowed if m in modes]


def resolve_nodes(g: TimeVaryingGraph, text: str) -> list:
    by_name = {str(u): u for u in g.nodes}
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok not in by_name:
            raise UsageError(f"unknown node {tok!r}")
        out.append(by_name[tok])
    return out


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names with or without dashes."""
    cfg: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        cfg[key.lstrip("-").replace("-", "_")] = value
    return cfg


# -- scenario loading --------------------------------------------------------


def load_scenario(args) -> tuple[TimeVaryingGraph, tuple]:
    """Graph plus its default (sender, receiver) pair."""
    if args.scenario == "menger":
        g, pair = menger_fixture(), ("p", "q")
    elif args.scenario == "grid":
        steps = 1000 if args.horizon is None else int(args.horizon)
        g, pair = grid_walk(GridSpec(seed=args.seed, steps=steps)), (0, 1)
    elif args.scenario == "trace":
        try:
            trace = bundled_trace() if args.trace in (None, "bundled") else read_contact_trace(args.trace)
        except OSError as exc:
            raise UsageError(f"cannot read trace {args.trace}: {exc}") from None
        if args.top:
            trace = sociability_filter(trace, int(args.top))
        g = from_contact_trace(trace)
        pair = tuple(g.nodes[:2])
    else:
        raise UsageError(f"unknown scenario {args.scenario!r}")
    if args.horizon is not None and args.scenario != "grid":
        g = g.truncated(to_ticks(args.horizon, g.resolution))
    if getattr(args, "pair", None):
        nodes = resolve_nodes(g, args.pair)
        if len(nodes) != 2 or nodes[0] == nodes[1]:
            raise UsageError("--pair needs two distinct nodes, e.g. --pair p,q")
        pair = tuple(nodes)
    return g, pair


def _write(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------


def cmd_analyze(args) -> int:
    g, pair = load_scenario(args)
    ks = parse_ks(args.k)
    modes = parse_modes(args.mode)
    window = to_ticks(args.window, g.resolution)
    every = to_ticks(args.every, g.resolution)
    if args.pair:
        pairs = [pair]
    else:
        pairs = experiments.pair_universe(g, ordered=args.pairs == "ordered")
    rows = experiments.analyze_fractions(g, ks, modes, experiments.start_lattice(g, every), window, pairs)
    _write(experiments.fractions_csv(rows, g.resolution), args.out)
    return 0


def cmd_meantime(args) -> int:
    ks = parse_ks(args.k)
    modes = parse_modes(args.mode)
    if args.scenario == "grid":
        steps = 1000 if args.horizon is None else int(args.horizon)
        samples = experiments.grid_samples(GridSpec(seed=args.seed, steps=steps), int(args.runs), ks, modes)
        res = 1
    elif args.scenario == "trace":
        g, pair = load_scenario(args)
        pairs = [pair] if args.pair else None
        samples = experiments.trace_samples(g, ks, modes, pairs)
        res = g.resolution
    else:
        raise UsageError("meantime needs --scenario grid or trace")
    _write(experiments.means_csv(experiments.summarize(samples, ks, modes), res), args.out)
    return 0


def _placement(args, g, p, q, k, mode) -> tuple[Placement, str]:
    spec = (args.placement or "none").strip()
    if spec == "none":
        return Placement(), "none"
    if spec == "worst":
        family = STRATEGY_KINDS if args.strategy in (None, "all") else [args.strategy]
        report = adversary.worst_case_placement(g, p, q, k, family, mode=mode, payload=_payload(p))
        return report.placement, report.summary()
    nodes = resolve_nodes(g, spec)
    kind = args.strategy if args.strategy not in (None, "all") else "drop_all"
    if kind not in STRATEGY_KINDS:
        raise UsageError(f"unknown strategy {kind!r}")
    placement = Placement(frozenset(nodes), {u: make_strategy(kind, u, g.nodes, p, horizon=g.horizon) for u in nodes})
    try:
        placement.validate(len(nodes), (p, q))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(nodes) > k:
        print(f"warning: {len(nodes)} Byzantine nodes exceeds k={k}; the protocol promises nothing", file=sys.stderr)
    return placement, f"{','.join(map(str, nodes))} ({kind})"


def _payload(p) -> bytes:
    return f"m0:{p}".encode()


def cmd_simulate(args) -> int:
    g, (p, q) = load_scenario(args)
    ks = parse_ks(args.k)
    if len(ks) != 1:
        raise UsageError("simulate takes a single k")
    k = ks[0]
    mode = args.mode if args.mode not in (None, "all") else NONCRYPTO
    if mode not in (NONCRYPTO, CRYPTO):
        raise UsageError("simulate needs --mode noncrypto or crypto")
    placement, described = _placement(args, g, p, q, k, mode)
    starts = {u: 0 for u in g.nodes if u not in placement.byzantine} if args.all_sources else {p: 0}
    result = run(RunConfig(g, k, mode, placement=placement, broadcast_starts=starts, trace_events=args.events))
    violations = result.safety_violations()
    lines = [
        f"scenario: {args.scenario}  mode: {mode}  k: {k}  pair: {p} -> {q}",
        f"Byzantine placement: {described}",
        f"DynMinCut({p},{q}) = {dyn_min_cut(g, p, q)}",
        f"messages: {result.message_count}  records: {result.record_count}  dropped: {result.dropped}",
        "",
        "receiver,source,payload,time",
    ]
    for (r, s), items in sorted(result.acceptances.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
        if r == s:
            continue
        for m, t in items:
            lines.append(f"{r},{s},{m.decode(errors='backslashreplace')},{t}")
    t = first_acceptance_time(result, p, q, _payload(p))
    lines += ["", f"{q} accepts {p}'s message: {'never' if t is None else f'at {t}'}"]
    lines.append(f"safety violations: {len(violations)}")
    for r, s, m, tt in violations:
        lines.append(f"  {r} accepted {m!r} as from {s} at {tt}")
    if args.events:
        lines += ["", "events:"] + result.events
    _write("\n".join(lines) + "\n", args.out)
    return 2 if violations else 0


def cmd_attack(args) -> int:
    g, (p, q) = load_scenario(args)
    ks = parse_ks(args.k)
    if len(ks) != 1:
        raise UsageError("attack takes a single k")
    k = ks[0]
    m, m_alt = args.m.encode(), args.m_alt.encode()
    if m == m_alt:
        raise UsageError("--m and --m-alt must differ")
    mode = args.mode if args.mode in (NONCRYPTO, CRYPTO) else NONCRYPTO
    witness = adversary.indistinguishability_attack(g, p, q, k, m, m_alt, mode=mode)
    cut = dyn_min_cut(g, p, q)
    expected = cut <= 2 * k
    if witness is None:
        _write(f"no witness: DynMinCut({p},{q}) = {cut} > 2k = {2 * k}\n", args.out)
    else:
        _write(witness.to_text(), args.out)
    ok = (witness is not None) == expected and (witness is None or (witness.identical and witness.replay_verified))
    return 0 if ok else 1


COMMANDS = {"analyze": cmd_analyze, "meantime": cmd_meantime, "simulate": cmd_simulate, "attack": cmd_attack}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynrelay", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, k_default="1", mode_default="all"):
        sp.add_argument("--config", help="file of 'key = value' lines mirroring these flags")
        sp.add_argument("--scenario", choices=SCENARIOS, default="menger")
        sp.add_argument("--trace", help="contact-trace CSV (default: the bundled synthetic trace)")
        sp.add_argument("--top", type=int, help="keep only the N nodes with most contacts")
        sp.add_argument("--k", default=k_default, help="k, list '0,1' or range '0-4'")
        sp.add_argument("--mode", default=mode_default, help="comma list of direct,noncrypto,crypto or 'all'")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--horizon", help="truncate the scenario (grid: number of steps)")
        sp.add_argument("--pair", help="sender,receiver")
        sp.add_argument("--out", help="output file (default stdout)")
        return sp

    a = common(sub.add_parser("analyze", help="fraction of pairs meeting each condition per start time"))
    a.add_argument("--window", default="10", help="time allowed after each start (time units)")
    a.add_argument("--every", default="5", help="start-time lattice step (time units)")
    a.add_argument("--pairs", choices=("unordered", "ordered"), default="unordered")

    mt = common(sub.add_parser("meantime", help="mean condition time against k"), k_default="0-8")
    mt.add_argument("--runs", type=int, default=100)
    mt.set_defaults(scenario="grid")

    s = common(sub.add_parser("simulate", help="run the protocol once"), mode_default=NONCRYPTO)
    s.add_argument("--placement", default="none", help="'none', 'worst' or a comma list of nodes")
    s.add_argument("--strategy", default=None, help=f"one of {', '.join(STRATEGY_KINDS)} (or 'all' with worst)")
    s.add_argument("--all-sources", action="store_true", help="every correct node broadcasts, not just the sender")
    s.add_argument("--events", action="store_true", help="append the event trace")

    at = common(sub.add_parser("attack", help="indistinguishability witness for a small cut"), mode_default=NONCRYPTO)
    at.add_argument("--m", default="x")
    at.add_argument("--m-alt", dest="m_alt", default="y")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = set(cfg) - known - {"config"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        converted = {}
        for action in sp._actions:
            if action.dest in cfg:
                value = cfg[action.dest]
                if action.type is not None:
                    value = action.type(value)
                elif isinstance(action, (argparse._StoreTrueAction,)):
                    value = value.lower() in ("1", "true", "yes", "on")
                converted[action.dest] = value
        sp.set_defaults(**converted)
        args = parser.parse_args(argv)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return COMMANDS[args.command](args)
    except (UsageError, TVGError, ValueError) as exc:
        print(f"dynrelay: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
