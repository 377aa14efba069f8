"""Consensus-based supply-demand balancing for distributed power grids.

The package splits a total demand into per-generator targets (coordination),
moves generation toward targets under capacity bounds (generation control),
and cancels per-node mismatches by pairwise flows (flow control) — each
phase runnable as a closed form or as a distributed consensus iteration
over the grid graph, and all of it wired into a seeded, auditable
multi-step simulator with a CLI.
"""

from .consensus import (
    DENOMINATOR_FLOOR,
    ConsensusResult,
    ConvergenceCriteria,
    FlowAccumulator,
    flow_accumulate,
    iterate_linear,
    ratio_consensus,
)
from .config import (
    config_to_dict,
    default_config_path,
    dump_config,
    load_config,
    parse_config,
)
from .coordination import (
    CoordinationResult,
    NodeCapacities,
    RealizabilityReport,
    check_realizability,
    coordinate_closed_form,
    coordinate_distributed,
)
from .dispatch import (
    DeltaBounds,
    FlowControlResult,
    GenerationResult,
    GridState,
    StepAudit,
    apply_step,
    audit_state,
    compute_delta_bounds,
    flow_control,
    generation_closed_form,
    generation_distributed,
    generation_with_coordination,
)
from .errors import (
    AuditError,
    BalanceError,
    BoundViolationError,
    CapacityError,
    ConfigError,
    ConvergenceError,
    DegenerateDenominatorError,
    DisconnectedGraphError,
    DuplicateEdgeError,
    EndpointOutOfRangeError,
    GridConsensusError,
    InfeasibleStepError,
    NotRealizableError,
    SelfLoopError,
    TopologyError,
)
from .export import (
    CSV_COLUMNS,
    export_record,
    summarize,
    write_timeseries_csv,
)
from .graph import (
    GridTopology,
    build_topology,
    degree_weight_matrix,
    metropolis_edge_weights,
    metropolis_weight_matrix,
    random_connected_topology,
)
from .simulation import (
    MODE_WITH,
    MODE_WITHOUT,
    DemandSpec,
    DesiredSpec,
    ScenarioConfig,
    SimulationRecord,
    generate_demand_profile,
    generate_desired_profile,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "BalanceError",
    "BoundViolationError",
    "CSV_COLUMNS",
    "CapacityError",
    "ConfigError",
    "ConsensusResult",
    "ConvergenceCriteria",
    "ConvergenceError",
    "CoordinationResult",
    "DENOMINATOR_FLOOR",
    "DegenerateDenominatorError",
    "DeltaBounds",
    "DemandSpec",
    "DesiredSpec",
    "DisconnectedGraphError",
    "DuplicateEdgeError",
    "EndpointOutOfRangeError",
    "FlowAccumulator",
    "FlowControlResult",
    "GenerationResult",
    "GridConsensusError",
    "GridState",
    "GridTopology",
    "InfeasibleStepError",
    "MODE_WITH",
    "MODE_WITHOUT",
    "NodeCapacities",
    "NotRealizableError",
    "RealizabilityReport",
    "ScenarioConfig",
    "SelfLoopError",
    "SimulationRecord",
    "StepAudit",
    "TopologyError",
    "apply_step",
    "audit_state",
    "build_topology",
    "check_realizability",
    "compute_delta_bounds",
    "config_to_dict",
    "coordinate_closed_form",
    "coordinate_distributed",
    "default_config_path",
    "degree_weight_matrix",
    "dump_config",
    "export_record",
    "flow_accumulate",
    "flow_control",
    "generate_demand_profile",
    "generate_desired_profile",
    "generation_closed_form",
    "generation_distributed",
    "generation_with_coordination",
    "iterate_linear",
    "load_config",
    "metropolis_edge_weights",
    "metropolis_weight_matrix",
    "parse_config",
    "random_connected_topology",
    "ratio_consensus",
    "run",
    "summarize",
    "write_timeseries_csv",
]
