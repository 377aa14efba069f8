"""Shared fixtures: the six-node reference system and random instance helpers."""

from __future__ import annotations

import numpy as np
import pytest

from gridconsensus import (
    GridState,
    NodeCapacities,
    build_topology,
    compute_delta_bounds,
    random_connected_topology,
)

# Reference six-node system used throughout: generation and net-power
# intervals per node, ring topology with one chord.
REF_GEN_CAPS = ((10, 50), (20, 80), (20, 40), (10, 45), (15, 60), (10, 55))
REF_NET_CAPS = ((10, 80), (20, 120), (20, 60), (10, 75), (15, 90), (10, 80))
RING_CHORD_EDGES = ((1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6), (1, 4))

# Closed-form split of demand 150 over the reference system, recomputed
# independently with exact rational arithmetic before being frozen here.
DESIRED_AT_150 = (
    20.612244897959183,
    35.91836734693877,
    25.306122448979593,
    19.285714285714285,
    26.93877551020408,
    21.93877551020408,
)


def make_reference_caps() -> NodeCapacities:
    return NodeCapacities(
        gen_lo=[g[0] for g in REF_GEN_CAPS],
        gen_hi=[g[1] for g in REF_GEN_CAPS],
        net_lo=[v[0] for v in REF_NET_CAPS],
        net_hi=[v[1] for v in REF_NET_CAPS],
    )


@pytest.fixture
def ref_caps() -> NodeCapacities:
    return make_reference_caps()


@pytest.fixture
def ring_chord():
    return build_topology(6, RING_CHORD_EDGES)


@pytest.fixture
def path3():
    return build_topology(3, [(1, 2), (2, 3)])


def random_capacities(rng: np.random.Generator, n: int) -> NodeCapacities:
    """Consistent random capacities; generation ranges kept <= 100 so
    consensus dust stays well under the 1e-8 comparison slack."""
    gen_lo = rng.uniform(0.0, 50.0, n)
    gen_hi = gen_lo + rng.uniform(0.5, 100.0, n)
    net_lo = gen_lo - rng.uniform(0.0, 30.0, n)
    net_hi = gen_hi + rng.uniform(0.0, 30.0, n)
    return NodeCapacities(gen_lo=gen_lo, gen_hi=gen_hi, net_lo=net_lo, net_hi=net_hi)


def random_generation_instance(rng: np.random.Generator, max_nodes: int = 12):
    """Random (topology, caps, state, bounds, desired) with a feasible step.

    The per-node desired values are a random positive split of a realizable
    total, so they may individually violate generation bounds — only the
    aggregate is guaranteed feasible.
    """
    n = int(rng.integers(1, max_nodes + 1))
    topology = random_connected_topology(n, rng)
    caps = random_capacities(rng, n)
    p_G = rng.uniform(caps.gen_lo, caps.gen_hi)
    state = GridState.initial(p_G).with_desired(p_G)
    bounds = compute_delta_bounds(state, caps)
    p_D = rng.uniform(caps.total_gen_lo, caps.total_gen_hi)
    weights = rng.random(n) + 1e-3
    desired = p_D * weights / weights.sum()
    return topology, caps, state, bounds, desired
