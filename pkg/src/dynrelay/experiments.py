"""Batch experiments behind the CLI: pair fractions over time and mean communication times."""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Sequence

from .cut import MODES, condition_times
from .scenarios import GridSpec, grid_walk
from .tvg import NodeId, TimeVaryingGraph, from_ticks


def pair_universe(g: TimeVaryingGraph, ordered: bool = False, nodes: Iterable[NodeId] | None = None) -> list[tuple]:
    """Sender/receiver pairs.  Unordered pairs use the lower id as sender."""
    nodes = sorted(g.nodes if nodes is None else nodes)
    return list(permutations(nodes, 2) if ordered else combinations(nodes, 2))


def start_lattice(g: TimeVaryingGraph, every: int, until: int | None = None) -> list[int]:
    """Start ticks ``0, every, 2*every, ...`` up to ``until`` (default: the horizon)."""
    if every < 1:
        raise ValueError("lattice step must be positive")
    end = g.horizon if until is None else min(until, g.horizon)
    return list(range(0, end + 1, every))


@dataclass(frozen=True)
class FractionRow:
    start: int
    mode: str
    k: int
    fraction: float


def analyze_fractions(
    g: TimeVaryingGraph,
    ks: Sequence[int],
    modes: Sequence[str] = MODES,
    starts: Sequence[int] = (0,),
    window: int = 0,
    pairs: Sequence[tuple] | None = None,
) -> list[FractionRow]:
    """Fraction of pairs whose condition holds within ``window`` ticks of each start."""
    if window < 0:
        raise ValueError("window must be non-negative")
    pairs = pair_universe(g) if pairs is None else list(pairs)
    if not pairs:
        raise ValueError("no pairs to analyze")
    rows = []
    for s in starts:
        hits = {(m, k): 0 for m in modes for k in ks}
        for p, q in pairs:
            times = condition_times(g, p, q, ks, modes, start=s, until=s + window)
            for key, t in times.items():
                if t is not None and t <= s + window:
                    hits[key] += 1
        for m in modes:
            for k in ks:
                rows.append(FractionRow(s, m, k, hits[(m, k)] / len(pairs)))
    return rows


def fractions_csv(rows: Iterable[FractionRow], resolution: int = 1) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["start_time", "mode", "k", "fraction"])
    for r in rows:
        w.writerow([from_ticks(r.start, resolution), r.mode, r.k, f"{r.fraction:.6f}"])
    return out.getvalue()


@dataclass(frozen=True)
class MeanRow:
    k: int
    mode: str
    mean: float | None
    failures: int
    runs: int


def summarize(samples: dict[tuple[str, int], list], ks: Sequence[int], modes: Sequence[str]) -> list[MeanRow]:
    """Means over successful trials; ``None`` samples are counted as failures instead."""
    rows = []
    for k in ks:
        for m in modes:
            values = samples[(m, k)]
            ok = [v for v in values if v is not None]
            mean = statistics.fmean(ok) if ok else None
            rows.append(MeanRow(k, m, mean, len(values) - len(ok), len(values)))
    return rows


def grid_samples(
    spec: GridSpec, runs: int, ks: Sequence[int], modes: Sequence[str] = MODES, pair: tuple = (0, 1)
) -> dict[tuple[str, int], list]:
    """Condition times (in ticks, from t=0) for ``runs`` walks seeded ``spec.seed, spec.seed+1, ...``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    samples: dict[tuple[str, int], list] = {(m, k): [] for m in modes for k in ks}
    for i in range(runs):
        trial = GridSpec(spec.n, spec.robots, spec.steps, spec.seed + i, spec.ticks_per_unit)
        g = grid_walk(trial, until_meet=pair)
        for key, t in condition_times(g, pair[0], pair[1], ks, modes).items():
            samples[key].append(t)
    return samples


def trace_samples(
    g: TimeVaryingGraph,
    ks: Sequence[int],
    modes: Sequence[str] = MODES,
    pairs: Sequence[tuple] | None = None,
    start: int = 0,
) -> dict[tuple[str, int], list]:
    """Condition times from ``start`` for every pair of a single trace."""
    pairs = pair_universe(g) if pairs is None else pairs
    samples: dict[tuple[str, int], list] = {(m, k): [] for m in modes for k in ks}
    for p, q in pairs:
        for key, t in condition_times(g, p, q, ks, modes, start=start).items():
            samples[key].append(None if t is None else t - start)
    return samples


def means_csv(rows: Iterable[MeanRow], resolution: int = 1) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["k", "mode", "mean", "failures", "runs"])
    for r in rows:
        mean = "" if r.mean is None else f"{r.mean / resolution:.4f}"
        w.writerow([r.k, r.mode, mean, r.failures, r.runs])
    return out.getvalue()


def reduction(rows: Iterable[MeanRow], mode: str, k: int) -> float:
    """Relative drop of the mean time of ``mode`` against direct meeting, at ``k``."""
    by = {(r.mode, r.k): r.mean for r in rows}
    return 1.0 - by[(mode, k)] / by[("direct", k)]
