"""Byzantine-resilient reliable communication over time-varying graphs."""

from .adversary import AttackWitness, PlacementReport, indistinguishability_attack, worst_case_placement
from .cut import (
    INFINITY,
    condition_time,
    condition_times,
    dyn_min_cut,
    dyn_min_cut_by_removal,
    feasible_crypto,
    feasible_noncrypto,
    min_cut,
    min_cut_witness,
)
from .protocol import CRYPTO, NONCRYPTO, HmacAuth, NodeState, SignedRecord, TupleRecord
from .scenarios import GridSpec, from_contact_trace, grid_walk, menger_fixture, read_contact_trace
from .sim import RunConfig, RunResult, Simulation, first_acceptance_time, run
from .strategies import Placement
from .temporal_paths import earliest_arrival, enumerate_path_sets, is_dynamic_path, max_disjoint_paths
from .tvg import EdgeInfo, Latency, TimeVaryingGraph

__version__ = "0.1.0"

__all__ = [
    "CRYPTO",
    "INFINITY",
    "NONCRYPTO",
    "AttackWitness",
    "EdgeInfo",
    "GridSpec",
    "HmacAuth",
    "Latency",
    "NodeState",
    "Placement",
    "PlacementReport",
    "RunConfig",
    "RunResult",
    "SignedRecord",
    "Simulation",
    "TimeVaryingGraph",
    "TupleRecord",
    "condition_time",
    "condition_times",
    "dyn_min_cut",
    "dyn_min_cut_by_removal",
    "earliest_arrival",
    "enumerate_path_sets",
    "feasible_crypto",
    "feasible_noncrypto",
    "first_acceptance_time",
    "from_contact_trace",
    "grid_walk",
    "indistinguishability_attack",
    "is_dynamic_path",
    "max_disjoint_paths",
    "menger_fixture",
    "min_cut",
    "min_cut_witness",
    "read_contact_trace",
    "run",
    "worst_case_placement",
]
