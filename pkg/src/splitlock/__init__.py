"""Split-manufacturing security toolkit for combinational BENCH netlists.

The flow: parse a netlist, lock it with fault-injection logic locking keyed
on tie cells, place it so the tie-to-key-gate wiring routes above a chosen
split layer, separate the front end from the withheld back end, attack the
front end by pin proximity or random guessing, and score the attack with
connection-recovery and output-corruption metrics.
"""

from .bench import (
    BenchSyntaxError,
    CycleError,
    DuplicateDriverError,
    Gate,
    Netlist,
    NetlistError,
    Partition,
    UndefinedNetError,
    UnknownGateKindError,
    extract_module,
    parse_bench,
    partition_random_balanced,
    structurally_equal,
    topological_order,
    write_bench,
)
from .benchmarks import benchmark_names, load_benchmark
from .sim import (
    EquivalenceVerdict,
    FailingPattern,
    Fault,
    check_equivalence,
    find_failing_patterns,
    simulate,
    simulate_faulty,
)
from .locking import (
    Key,
    KeyAssignment,
    LockedDesign,
    LockingError,
    ModuleRecord,
    apply_key,
    build_restore,
    evaluate_fault_cost,
    inject_and_simplify,
    load_locked_design,
    lock,
    save_locked_design,
    select_fault,
    unlocked_design,
)
from .layout import (
    BEOLSecret,
    FEOLView,
    LayerAssignment,
    LayoutError,
    Placement,
    assign_layers,
    design_connections,
    place,
    recombine,
    split,
)
from .attack import (
    AttackConfig,
    InferredSecret,
    postprocess_keygates,
    proximity_attack,
    random_key_attack,
)
from .metrics import (
    MetricsReport,
    aggregate_oer,
    ccr,
    error_stats,
    evaluate_attack,
    hamming_distance,
    oer,
    pnr,
    recovered_netlist,
)
from .seeds import derive
from .synth import PROFILES, profile_circuit, random_circuit

__version__ = "0.1.0"
