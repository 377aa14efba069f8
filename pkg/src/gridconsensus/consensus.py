"""Synchronous-round linear consensus iterations.

Three engines, all operating on per-node value arrays:

* ``iterate_linear`` — repeated multiplication x <- W @ x, stopping on
  per-round quiescence.
* ``ratio_consensus`` — two coupled sum-preserving iterations whose
  per-node ratio converges to sum(x0)/sum(y0).
* ``flow_accumulate`` — Metropolis-weighted averaging that additionally
  integrates the per-edge disagreement into an antisymmetric accumulator;
  its steady state supplies pairwise power flows.

All rounds are synchronous: every node updates from the previous round's
values. Nothing here mutates its inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateDenominatorError
from .graph import GridTopology, metropolis_edge_weights

log = logging.getLogger(__name__)

# Denominators below this are treated as collapsed rather than divided by.
DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class ConvergenceCriteria:
    """Stopping rule: max per-node change per round vs. a round cap."""

    eps: float = 1e-10
    max_iters: int = 100_000

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class ConsensusResult:
    """Per-node values at termination, rounds executed, and whether the
    stopping tolerance was met (False means the round cap was hit)."""

    values: np.ndarray
    iters: int
    converged: bool


@dataclass(frozen=True)
class FlowAccumulator:
    """Antisymmetric per-pair accumulator h and node values g at
    termination of the flow iteration, plus rounds executed."""

    h: np.ndarray
    g: np.ndarray
    iters: int


def iterate_linear(
    weights: np.ndarray, x0, criteria: ConvergenceCriteria
) -> ConsensusResult:
    """Iterate x <- weights @ x until the largest per-node change in one
    round is at most ``criteria.eps``.

    Non-convergence within ``max_iters`` is reported through the returned
    ``converged`` flag (the last values are kept), never raised.
    """
    w = np.asarray(weights, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] != x.shape[0]:
        raise ValueError(f"weight shape {w.shape} does not match values {x.shape}")
    if np.any(w < 0):
        raise ValueError("weight matrix entries must be nonnegative")

    for t in range(1, criteria.max_iters + 1):
        x_next = w @ x
        change = np.max(np.abs(x_next - x)) if x.size else 0.0
        x = x_next
        if change <= criteria.eps:
            return ConsensusResult(values=x, iters=t, converged=True)
    log.debug("linear iteration hit cap %d (last change > %g)", criteria.max_iters, criteria.eps)
    return ConsensusResult(values=x, iters=criteria.max_iters, converged=False)


def ratio_consensus(
    weights: np.ndarray, x0, y0, criteria: ConvergenceCriteria
) -> ConsensusResult:
    """Run x and y through the same sum-preserving iteration and return the
    per-node ratios x_i/y_i, which all converge to sum(x0)/sum(y0).

    Convergence is judged on the ratio vector, not on x and y separately:
    once every denominator clears the floor, each new ratio is a convex
    combination of the previous round's ratios, so the spread
    max_i r_i - min_i r_i shrinks monotonically and always brackets the
    limit. Stopping when the spread is at most ``eps`` therefore certifies
    every node's ratio is within ``eps`` of the limit.

    Raises DegenerateDenominatorError if y0 carries no positive mass or a
    denominator is still below the floor at termination.
    """
    w = np.asarray(weights, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    if x.shape != y.shape:
        raise ValueError(f"x0 shape {x.shape} != y0 shape {y.shape}")
    if np.any(y < 0):
        raise ValueError("y0 entries must be nonnegative")
    if not np.any(y > 0):
        raise DegenerateDenominatorError("y0 has no positive entries")

    ratio = None
    for t in range(1, criteria.max_iters + 1):
        x = w @ x
        y = w @ y
        if np.min(y) <= DENOMINATOR_FLOOR:
            continue
        ratio = x / y
        spread = np.max(ratio) - np.min(ratio)
        if spread <= criteria.eps:
            return ConsensusResult(values=ratio, iters=t, converged=True)
    if np.min(y) <= DENOMINATOR_FLOOR:
        raise DegenerateDenominatorError(
            f"denominator still below {DENOMINATOR_FLOOR:g} after "
            f"{criteria.max_iters} rounds"
        )
    return ConsensusResult(values=x / y, iters=criteria.max_iters, converged=False)


def flow_accumulate(
    topology: GridTopology, weights: np.ndarray, g0, criteria: ConvergenceCriteria
) -> FlowAccumulator:
    """Average g across the graph while integrating per-edge disagreement.

    Each round, every edge (i, j) carries an increment
    a_ij * (g_j - g_i); node values absorb their incident increments (one
    Metropolis averaging round) and the accumulator records them with
    h[i, j] += inc, h[j, i] -= inc, keeping h exactly antisymmetric. By
    telescoping, g_i(t) = g_i(0) + sum_j h[i, j](t) holds at every round.

    Stops once a round both changes no node by more than ``eps`` and has
    the node values agreeing to within ``eps`` (values bracket their mean
    throughout, so the spread certifies distance from it). Raises
    ConvergenceError at the round cap.
    """
    n = topology.n
    w = np.asarray(weights, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"weight shape {w.shape} does not match {n} nodes")
    g = np.asarray(g0, dtype=float).copy()
    if g.shape != (n,):
        raise ValueError(f"g0 shape {g.shape} does not match {n} nodes")

    h = np.zeros((n, n))
    heads, tails = topology.edge_index_arrays()
    a = metropolis_edge_weights(topology)

    for t in range(1, criteria.max_iters + 1):
        inc = a * (g[tails] - g[heads])
        h[heads, tails] += inc
        h[tails, heads] -= inc
        g_next = g.copy()
        np.add.at(g_next, heads, inc)
        np.subtract.at(g_next, tails, inc)
        change = np.max(np.abs(g_next - g))
        g = g_next
        if change <= criteria.eps and np.max(g) - np.min(g) <= criteria.eps:
            return FlowAccumulator(h=h, g=g, iters=t)
    raise ConvergenceError(
        f"flow iteration did not settle within {criteria.max_iters} rounds",
        values=g,
        iters=criteria.max_iters,
    )
