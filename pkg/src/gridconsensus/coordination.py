"""Splitting total demand into per-node desired net power.

Each node's share of the demand surplus above the aggregate generation
floor is proportional to its generation range. The closed form needs the
global capacity sums; the distributed version reaches the same split with
ratio consensus, where only the leading node knows the total demand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .consensus import ConvergenceCriteria, ratio_consensus
from .errors import (
    CapacityError,
    ConvergenceError,
    DegenerateDenominatorError,
    NotRealizableError,
)
from .graph import GridTopology, degree_weight_matrix

log = logging.getLogger(__name__)

_BALANCE_TOL = 1e-6


@dataclass(frozen=True)
class NodeCapacities:
    """Per-node generation bounds and net-power bounds.

    Validates gen_lo <= gen_hi, net_lo <= net_hi, and that each node's
    generation interval sits inside its net-power interval.
    """

    gen_lo: np.ndarray
    gen_hi: np.ndarray
    net_lo: np.ndarray
    net_hi: np.ndarray

    def __post_init__(self):
        for name in ("gen_lo", "gen_hi", "net_lo", "net_hi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        shapes = {getattr(self, f).shape for f in ("gen_lo", "gen_hi", "net_lo", "net_hi")}
        if len(shapes) != 1 or self.gen_lo.ndim != 1:
            raise CapacityError(f"capacity arrays must share one 1-D shape, got {shapes}")
        for i in range(self.n):
            if self.gen_lo[i] > self.gen_hi[i]:
                raise CapacityError(
                    f"node {i + 1}: generation bounds [{self.gen_lo[i]}, {self.gen_hi[i]}] inverted"
                )
            if self.net_lo[i] > self.net_hi[i]:
                raise CapacityError(
                    f"node {i + 1}: net-power bounds [{self.net_lo[i]}, {self.net_hi[i]}] inverted"
                )
            if self.gen_lo[i] < self.net_lo[i] or self.gen_hi[i] > self.net_hi[i]:
                raise CapacityError(
                    f"node {i + 1}: generation interval [{self.gen_lo[i]}, {self.gen_hi[i]}] "
                    f"not contained in net-power interval [{self.net_lo[i]}, {self.net_hi[i]}]"
                )

    @property
    def n(self) -> int:
        return self.gen_lo.shape[0]

    @property
    def gen_range(self) -> np.ndarray:
        return self.gen_hi - self.gen_lo

    @property
    def total_gen_lo(self) -> float:
        return float(np.sum(self.gen_lo))

    @property
    def total_gen_hi(self) -> float:
        return float(np.sum(self.gen_hi))


@dataclass(frozen=True)
class RealizabilityReport:
    """Outcome of the demand-vs-capacity check, with both margins."""

    realizable: bool
    demand: float
    lower: float
    upper: float

    @property
    def lower_margin(self) -> float:
        """How far demand sits above the aggregate generation floor."""
        return self.demand - self.lower

    @property
    def upper_margin(self) -> float:
        """How far demand sits below the aggregate generation ceiling."""
        return self.upper - self.demand

    def __bool__(self) -> bool:
        return self.realizable


@dataclass(frozen=True)
class CoordinationResult:
    """Per-node desired net power plus how it was computed."""

    desired: np.ndarray
    method: str  # "closed-form" | "distributed"
    iters_x: int = 0
    iters_y: int = 0


def check_realizability(p_demand: float, caps: NodeCapacities) -> RealizabilityReport:
    """Demand is realizable iff it lies between the sums of the lower and
    upper generation bounds (inclusive on both ends)."""
    lower = caps.total_gen_lo
    upper = caps.total_gen_hi
    p_demand = float(p_demand)
    return RealizabilityReport(
        realizable=bool(lower <= p_demand <= upper),
        demand=p_demand,
        lower=lower,
        upper=upper,
    )


def _require_realizable(p_demand: float, caps: NodeCapacities) -> RealizabilityReport:
    report = check_realizability(p_demand, caps)
    if not report:
        raise NotRealizableError(
            f"demand {p_demand} outside [{report.lower}, {report.upper}] "
            f"(margins: {report.lower_margin}, {report.upper_margin})",
            report=report,
        )
    return report


def _audit_net_bounds(desired: np.ndarray, caps: NodeCapacities) -> None:
    # Capacity validation makes violations impossible for consistent inputs;
    # a hit here signals hand-built capacities that skipped it. The slack
    # absorbs consensus dust at boundary demands (desired can undershoot a
    # coincident gen/net floor by range*eps), which is not a violation.
    low = desired < caps.net_lo - 1e-6
    high = desired > caps.net_hi + 1e-6
    if np.any(low | high):
        bad = np.nonzero(low | high)[0] + 1
        log.warning(
            "desired net power violates net-power bounds at nodes %s; "
            "input capacities are inconsistent",
            bad.tolist(),
        )


def coordinate_closed_form(p_demand: float, caps: NodeCapacities) -> CoordinationResult:
    """Split demand using global capacity sums.

    Each node receives its generation floor plus a share of the remaining
    demand proportional to its generation range, which keeps every node
    inside its generation bounds and makes the shares sum to the demand.

    When every generator is fixed (zero total range) the demand must equal
    the aggregate floor exactly; the floors are then the only answer.
    """
    _require_realizable(p_demand, caps)
    total_range = float(np.sum(caps.gen_range))
    surplus = p_demand - caps.total_gen_lo
    if total_range <= 0.0:
        if abs(surplus) > 1e-9 * (1.0 + abs(p_demand)):
            raise DegenerateDenominatorError(
                f"all generators fixed but demand {p_demand} != "
                f"aggregate floor {caps.total_gen_lo}"
            )
        desired = caps.gen_lo.copy()
    else:
        desired = caps.gen_lo + caps.gen_range * (surplus / total_range)
    _audit_net_bounds(desired, caps)
    return CoordinationResult(desired=desired, method="closed-form")


def coordinate_distributed(
    p_demand: float,
    caps: NodeCapacities,
    topology: GridTopology,
    leader: int = 1,
    criteria: ConvergenceCriteria = ConvergenceCriteria(),
) -> CoordinationResult:
    """Split demand knowing the total only at the leading node.

    Runs ratio consensus: the numerator starts at demand minus the local
    generation floor on the leader and at minus the floor elsewhere; the
    denominator starts at each node's generation range. Every node's ratio
    converges to the global surplus over the total range, so applying it to
    the local range reproduces the closed-form split.
    """
    if caps.n != topology.n:
        raise CapacityError(f"capacities for {caps.n} nodes, topology has {topology.n}")
    if not 1 <= leader <= topology.n:
        raise ValueError(f"leader {leader} outside 1..{topology.n}")
    _require_realizable(p_demand, caps)

    total_range = float(np.sum(caps.gen_range))
    if total_range <= 0.0:
        # Nothing to negotiate: consensus cannot run on a zero denominator,
        # but the all-floors profile is still the answer when it matches.
        if abs(p_demand - caps.total_gen_lo) > 1e-9 * (1.0 + abs(p_demand)):
            raise DegenerateDenominatorError(
                f"all generators fixed but demand {p_demand} != "
                f"aggregate floor {caps.total_gen_lo}"
            )
        return CoordinationResult(desired=caps.gen_lo.copy(), method="distributed")

    x0 = -caps.gen_lo.copy()
    x0[leader - 1] += p_demand
    y0 = caps.gen_range
    weights = degree_weight_matrix(topology)
    result = ratio_consensus(weights, x0, y0, criteria)
    if not result.converged:
        raise ConvergenceError(
            f"coordination did not converge within {criteria.max_iters} rounds",
            values=result.values,
            iters=result.iters,
        )
    desired = caps.gen_lo + caps.gen_range * result.values
    total = float(np.sum(desired))
    if abs(total - p_demand) > _BALANCE_TOL * (1.0 + abs(p_demand)):
        raise ConvergenceError(
            f"coordinated total {total} misses demand {p_demand}",
            values=desired,
            iters=result.iters,
        )
    _audit_net_bounds(desired, caps)
    return CoordinationResult(
        desired=desired,
        method="distributed",
        iters_x=result.iters,
        iters_y=result.iters,
    )
