"""Multi-step scenario runner.

Each physical step runs the fast consensus phases to convergence, commits
the resulting generation changes and flows, and audits the committed state
against capacities and balance targets. Profiles (total demand, or per-node
desired net power) come from explicit lists or a seeded sampler, so a run
is reproducible end to end from its config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .consensus import ConvergenceCriteria
from .coordination import NodeCapacities, check_realizability, coordinate_distributed
from .dispatch import (
    GridState,
    StepAudit,
    apply_step,
    audit_state,
    compute_delta_bounds,
    flow_control,
    generation_distributed,
    generation_with_coordination,
)
from .errors import (
    AuditError,
    BoundViolationError,
    GridConsensusError,
    NotRealizableError,
)
from .graph import GridTopology, metropolis_weight_matrix

MODE_WITH = "with-coordination"
MODE_WITHOUT = "without-coordination"

_HALVING_CAP = 80


@dataclass(frozen=True)
class DemandSpec:
    """Where per-step total demand comes from: a sampler or a fixed list."""

    kind: str = "seeded"  # "seeded" | "explicit"
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("seeded", "explicit"):
            raise ValueError(f"unknown demand kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.values:
                raise ValueError("explicit demand needs a nonempty value list")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        elif self.values is not None:
            raise ValueError("seeded demand takes no explicit values")


@dataclass(frozen=True)
class DesiredSpec:
    """Per-node desired net power source: sampler or explicit per-step rows."""

    kind: str = "seeded"
    values: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("seeded", "explicit"):
            raise ValueError(f"unknown desired kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.values:
                raise ValueError("explicit desired profile needs nonempty rows")
            object.__setattr__(
                self, "values", tuple(tuple(float(v) for v in row) for row in self.values)
            )
        elif self.values is not None:
            raise ValueError("seeded desired profile takes no explicit values")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs; immutable so runs can be repeated exactly."""

    mode: str
    topology: GridTopology
    capacities: NodeCapacities | tuple[NodeCapacities, ...]
    horizon: int
    demand: DemandSpec | None = None
    desired: DesiredSpec | None = None
    seed: int = 0
    leader: int = 1
    criteria: ConvergenceCriteria = field(default_factory=ConvergenceCriteria)
    initial_generation: tuple[float, ...] | None = None
    fail_fast: bool = True

    def __post_init__(self):
        if self.mode not in (MODE_WITH, MODE_WITHOUT):
            raise ValueError(f"mode must be {MODE_WITH!r} or {MODE_WITHOUT!r}, got {self.mode!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if isinstance(self.capacities, NodeCapacities):
            schedule = (self.capacities,)
        else:
            schedule = tuple(self.capacities)
            object.__setattr__(self, "capacities", schedule)
            if len(schedule) != self.horizon:
                raise ValueError(
                    f"capacity schedule has {len(schedule)} entries for horizon {self.horizon}"
                )
        for caps in schedule:
            if caps.n != self.topology.n:
                raise ValueError(
                    f"capacities cover {caps.n} nodes, topology has {self.topology.n}"
                )
        if not 1 <= self.leader <= self.topology.n:
            raise ValueError(f"leader {self.leader} outside 1..{self.topology.n}")
        if self.mode == MODE_WITH:
            if self.demand is None or self.desired is not None:
                raise ValueError(
                    "with-coordination runs take a demand source and no desired profile"
                )
        else:
            if self.desired is None or self.demand is not None:
                raise ValueError(
                    "without-coordination runs take a desired profile and no demand source"
                )
        if self.initial_generation is not None:
            p_G0 = tuple(float(v) for v in self.initial_generation)
            object.__setattr__(self, "initial_generation", p_G0)
            caps0 = self.capacities_at(0)
            if len(p_G0) != self.topology.n:
                raise ValueError(
                    f"initial generation has {len(p_G0)} entries for {self.topology.n} nodes"
                )
            arr = np.asarray(p_G0)
            if np.any(arr < caps0.gen_lo) or np.any(arr > caps0.gen_hi):
                bad = int(np.argmax((arr < caps0.gen_lo) | (arr > caps0.gen_hi))) + 1
                raise ValueError(
                    f"initial generation at node {bad} outside its generation bounds"
                )

    def capacities_at(self, k: int) -> NodeCapacities:
        """Capacities in force at step index k (0-based)."""
        if isinstance(self.capacities, NodeCapacities):
            return self.capacities
        return self.capacities[k]


@dataclass(frozen=True)
class SimulationRecord:
    """Per-step time series of one run, plus audits.

    Row k (0-based) describes physical step k+1. Iteration counters hold
    the consensus rounds each phase needed; phases a mode never runs stay
    at zero.
    """

    mode: str
    p_D: np.ndarray
    p_d: np.ndarray
    delta: np.ndarray
    p_G: np.ndarray
    p_F_net: np.ndarray
    p: np.ndarray
    p_e: np.ndarray
    coord_iters: np.ndarray
    gen_iters: np.ndarray
    flow_iters: np.ndarray
    audits: tuple[StepAudit, ...]

    @property
    def horizon(self) -> int:
        return self.p_D.shape[0]

    @property
    def n(self) -> int:
        return self.p_d.shape[1]

    @property
    def all_audits_passed(self) -> bool:
        return all(a.passed for a in self.audits)

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.p_e), initial=0.0))

    @property
    def max_balance_residual(self) -> float:
        return max((abs(a.balance_residual) for a in self.audits), default=0.0)

    @property
    def max_iters_used(self) -> int:
        return int(max(self.coord_iters.max(initial=0),
                       self.gen_iters.max(initial=0),
                       self.flow_iters.max(initial=0)))


def _caps_schedule(caps, horizon: int) -> list[NodeCapacities]:
    if isinstance(caps, NodeCapacities):
        return [caps] * horizon
    return list(caps)


def generate_demand_profile(spec: DemandSpec, caps, horizon: int, seed: int) -> np.ndarray:
    """Per-step total demand, uniform over the realizable interval when seeded.

    Explicit lists are length-checked and realizability-checked against the
    capacities in force at each step.
    """
    schedule = _caps_schedule(caps, horizon)
    if spec.kind == "explicit":
        if len(spec.values) != horizon:
            raise ValueError(
                f"explicit demand has {len(spec.values)} entries for horizon {horizon}"
            )
        out = np.asarray(spec.values, dtype=float)
        for k, (p_D, caps_k) in enumerate(zip(out, schedule)):
            report = check_realizability(float(p_D), caps_k)
            if not report:
                raise NotRealizableError(
                    f"step {k + 1}: demand {p_D} outside [{report.lower}, {report.upper}]",
                    report=report,
                )
        return out
    rng = np.random.default_rng(seed)
    out = np.empty(horizon)
    for k, caps_k in enumerate(schedule):
        out[k] = rng.uniform(caps_k.total_gen_lo, caps_k.total_gen_hi)
    return out


def _interior_profile(caps: NodeCapacities, target_sum: float) -> np.ndarray:
    """Net-bound-respecting profile whose sum is target_sum, by proportional split."""
    net_range = caps.net_hi - caps.net_lo
    total = float(np.sum(net_range))
    if total <= 0.0:
        return caps.net_lo.copy()
    frac = (target_sum - float(np.sum(caps.net_lo))) / total
    return caps.net_lo + net_range * frac


def generate_desired_profile(
    spec: DesiredSpec, caps, horizon: int, seed: int
) -> np.ndarray:
    """Per-step, per-node desired net power.

    Sampled rows are uniform in each node's net-power box, then pulled
    toward a box-interior center by successive halving until the row sum
    is realizable by the generators — deterministic and rejection-free.
    Generation bounds are deliberately not enforced per node; targets a
    generator cannot meet alone are the point of the flow-control regime.
    """
    schedule = _caps_schedule(caps, horizon)
    n = schedule[0].n
    if spec.kind == "explicit":
        if len(spec.values) != horizon:
            raise ValueError(
                f"explicit desired profile has {len(spec.values)} rows for horizon {horizon}"
            )
        out = np.empty((horizon, n))
        for k, (row, caps_k) in enumerate(zip(spec.values, schedule)):
            if len(row) != n:
                raise ValueError(f"step {k + 1}: desired row has {len(row)} values for {n} nodes")
            arr = np.asarray(row, dtype=float)
            low = arr < caps_k.net_lo
            high = arr > caps_k.net_hi
            if np.any(low | high):
                i = int(np.nonzero(low | high)[0][0])
                raise BoundViolationError(
                    f"step {k + 1}, node {i + 1}: desired net power {arr[i]} outside "
                    f"net-power bounds [{caps_k.net_lo[i]}, {caps_k.net_hi[i]}]"
                )
            total = float(np.sum(arr))
            report = check_realizability(total, caps_k)
            if not report:
                raise NotRealizableError(
                    f"step {k + 1}: desired profile sums to {total}, outside "
                    f"[{report.lower}, {report.upper}]",
                    report=report,
                )
            out[k] = arr
        return out

    rng = np.random.default_rng(seed)
    out = np.empty((horizon, n))
    for k, caps_k in enumerate(schedule):
        lower = caps_k.total_gen_lo
        upper = caps_k.total_gen_hi
        center = _interior_profile(caps_k, 0.5 * (lower + upper))
        row = rng.uniform(caps_k.net_lo, caps_k.net_hi)
        for _ in range(_HALVING_CAP):
            if lower <= float(np.sum(row)) <= upper:
                break
            row = center + 0.5 * (row - center)
        else:
            row = center
        out[k] = row
    return out


def run(config: ScenarioConfig) -> SimulationRecord:
    """Execute a scenario and return its full time series.

    With coordination: split each step's demand into per-generator targets,
    track them, keep flows at zero. Without: generators balance the total
    while flows cancel what each node's own generator cannot supply. Audit
    failures raise unless the config says to continue and flag.
    """
    K = config.horizon
    n = config.topology.n
    schedule = _caps_schedule(config.capacities, K)
    s_weights = metropolis_weight_matrix(config.topology)

    if config.initial_generation is not None:
        p_G0 = np.asarray(config.initial_generation, dtype=float)
    else:
        p_G0 = schedule[0].gen_lo.copy()
    state = GridState.initial(p_G0)

    if config.mode == MODE_WITH:
        demand = generate_demand_profile(config.demand, schedule, K, config.seed)
        desired_rows = None
    else:
        desired_rows = generate_desired_profile(config.desired, schedule, K, config.seed)
        demand = desired_rows.sum(axis=1)

    p_d = np.empty((K, n))
    delta = np.empty((K, n))
    p_G = np.empty((K, n))
    p_F_net = np.empty((K, n))
    p_net = np.empty((K, n))
    p_e = np.empty((K, n))
    coord_iters = np.zeros(K, dtype=int)
    gen_iters = np.zeros(K, dtype=int)
    flow_iters = np.zeros(K, dtype=int)
    audits: list[StepAudit] = []
    zero_flows = np.zeros((n, n))

    for k in range(K):
        caps_k = schedule[k]
        step = k + 1
        if config.mode == MODE_WITH:
            phase = "coordination"
            try:
                coord = coordinate_distributed(
                    float(demand[k]), caps_k, config.topology,
                    leader=config.leader, criteria=config.criteria,
                )
                phase = "generation"
                staged = state.with_desired(coord.desired)
                step_delta = generation_with_coordination(staged, coord.desired, caps_k)
                phase = "commit"
                state = apply_step(staged, step_delta, zero_flows, config.topology)
            except GridConsensusError as exc:
                raise type(exc)(f"step {step} ({phase}): {exc}") from exc
            coord_iters[k] = coord.iters_x
        else:
            phase = "generation"
            try:
                staged = state.with_desired(desired_rows[k])
                db = compute_delta_bounds(staged, caps_k)
                gen = generation_distributed(
                    desired_rows[k], staged, db, config.topology, config.criteria
                )
                step_delta = gen.delta
                phase = "flow control"
                fc = flow_control(
                    staged.after_generation(step_delta), config.topology,
                    s_weights, config.criteria,
                )
                phase = "commit"
                state = apply_step(staged, step_delta, fc.flows, config.topology)
            except GridConsensusError as exc:
                raise type(exc)(f"step {step} ({phase}): {exc}") from exc
            gen_iters[k] = gen.iters
            flow_iters[k] = fc.iters

        audit = audit_state(state, caps_k)
        audits.append(audit)
        if config.fail_fast and not audit.passed:
            raise AuditError(
                f"step {step} audit failed: {', '.join(audit.failures())} "
                f"(max |error| {audit.max_abs_error:.3e}, "
                f"balance residual {audit.balance_residual:.3e})",
                step=step,
                phase="audit",
            )

        p_d[k] = state.p_d
        delta[k] = step_delta
        p_G[k] = state.p_G
        p_F_net[k] = state.p_F_net
        p_net[k] = state.p
        p_e[k] = state.p_e

    return SimulationRecord(
        mode=config.mode,
        p_D=demand,
        p_d=p_d,
        delta=delta,
        p_G=p_G,
        p_F_net=p_F_net,
        p=p_net,
        p_e=p_e,
        coord_iters=coord_iters,
        gen_iters=gen_iters,
        flow_iters=flow_iters,
        audits=tuple(audits),
    )
