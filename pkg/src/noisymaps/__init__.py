"""Interval maps under bounded uniform noise: simulation and analysis.

The package simulates processes X_{n+1} = f_{k+n}(X_n) + xi_n where (f_n)
is a sequence of piecewise linear maps of [0, 1] and the xi_n are i.i.d.
uniform on [-delta, delta].  On top of the simulator it provides empirical
probes for recurrence, trapping regions, delta-chain reachability, periodic
structure and sensitive dependence.
"""

from .chains import (
    Ball,
    ChainSearchResult,
    CorridorEstimate,
    DeltaChain,
    corridor_probability,
    find_delta_chain,
    monte_carlo_corridor,
    validate_chain,
)
from .maps import (
    MapSequence,
    PiecewiseLinearMap,
    compose_prefix,
    evaluate,
    iterate,
    sup_distance,
    tail_shift,
)
from .periodic import (
    DecompositionError,
    DecompositionTree,
    IntervalDecomposition,
    LiYorkeReport,
    PeriodicOrbit,
    PeriodicScan,
    Plateau,
    ShadowResult,
    ShadowSummary,
    classify_attractivity,
    decompose_omega,
    decompose_tree,
    find_periodic_points,
    liyorke_scan,
    shadow_candidates,
    shadow_fraction,
    shadow_test,
)
from .recurrence import (
    EscapeEstimate,
    RecurrenceQuery,
    RecurrenceReport,
    Region,
    TrapReport,
    detect_trap,
    escape_probability,
    estimate_recurrence,
)
from .stochproc import (
    ProcessConfig,
    Trajectory,
    TrajectoryBatch,
    noise_stream,
    realized_noise,
    simulate,
    simulate_batch,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # maps
    "PiecewiseLinearMap",
    "MapSequence",
    "evaluate",
    "iterate",
    "compose_prefix",
    "sup_distance",
    "tail_shift",
    # stochastic process
    "ProcessConfig",
    "Trajectory",
    "TrajectoryBatch",
    "noise_stream",
    "realized_noise",
    "simulate",
    "simulate_batch",
    # recurrence / trapping / escape
    "Region",
    "RecurrenceQuery",
    "RecurrenceReport",
    "TrapReport",
    "EscapeEstimate",
    "estimate_recurrence",
    "detect_trap",
    "escape_probability",
    # chains and corridors
    "Ball",
    "DeltaChain",
    "ChainSearchResult",
    "CorridorEstimate",
    "find_delta_chain",
    "validate_chain",
    "corridor_probability",
    "monte_carlo_corridor",
    # periodic structure, shadowing, Li-Yorke
    "PeriodicOrbit",
    "Plateau",
    "PeriodicScan",
    "find_periodic_points",
    "classify_attractivity",
    "DecompositionError",
    "IntervalDecomposition",
    "DecompositionTree",
    "decompose_omega",
    "decompose_tree",
    "ShadowResult",
    "ShadowSummary",
    "shadow_test",
    "shadow_fraction",
    "shadow_candidates",
    "LiYorkeReport",
    "liyorke_scan",
]
