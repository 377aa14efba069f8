"""Demand coordination: capacity validation, realizability, and the
closed-form vs distributed split."""

from __future__ import annotations

import numpy as np
import pytest

from gridconsensus import (
    CapacityError,
    ConvergenceCriteria,
    ConvergenceError,
    NodeCapacities,
    NotRealizableError,
    build_topology,
    check_realizability,
    coordinate_closed_form,
    coordinate_distributed,
    random_connected_topology,
)
from conftest import DESIRED_AT_150, random_capacities


class TestNodeCapacities:
    def test_valid_reference_system(self, ref_caps):
        assert ref_caps.n == 6
        assert ref_caps.total_gen_lo == 85.0
        assert ref_caps.total_gen_hi == 330.0
        assert np.allclose(ref_caps.gen_range, [40, 60, 20, 35, 45, 45])

    def test_inverted_generation_bounds(self):
        with pytest.raises(CapacityError, match="node 2"):
            NodeCapacities(gen_lo=[0, 20], gen_hi=[10, 10],
                           net_lo=[0, 0], net_hi=[10, 30])

    def test_inverted_net_bounds(self):
        with pytest.raises(CapacityError, match="node 1"):
            NodeCapacities(gen_lo=[0], gen_hi=[1], net_lo=[5], net_hi=[2])

    def test_generation_must_sit_inside_net(self):
        with pytest.raises(CapacityError, match="node 1"):
            NodeCapacities(gen_lo=[0], gen_hi=[10], net_lo=[1], net_hi=[20])
        with pytest.raises(CapacityError, match="node 1"):
            NodeCapacities(gen_lo=[0], gen_hi=[10], net_lo=[0], net_hi=[9])

    def test_shape_mismatch(self):
        with pytest.raises(CapacityError):
            NodeCapacities(gen_lo=[0, 0], gen_hi=[1], net_lo=[0, 0], net_hi=[1, 1])


class TestRealizability:
    def test_interior_demand(self, ref_caps):
        report = check_realizability(150.0, ref_caps)
        assert report
        assert report.lower == 85.0 and report.upper == 330.0
        assert report.lower_margin == pytest.approx(65.0)
        assert report.upper_margin == pytest.approx(180.0)

    def test_boundaries_inclusive(self, ref_caps):
        assert check_realizability(85.0, ref_caps)
        assert check_realizability(330.0, ref_caps)

    def test_outside(self, ref_caps):
        assert not check_realizability(84.0, ref_caps)
        assert not check_realizability(330.0001, ref_caps)
        report = check_realizability(84.0, ref_caps)
        assert report.lower_margin == pytest.approx(-1.0)


class TestClosedForm:
    def test_reference_anchor_at_150(self, ref_caps):
        result = coordinate_closed_form(150.0, ref_caps)
        assert result.method == "closed-form"
        assert np.max(np.abs(result.desired - np.array(DESIRED_AT_150))) <= 1e-12
        assert result.desired.sum() == pytest.approx(150.0, abs=1e-12)

    def test_floor_demand_forces_lower_bounds(self, ref_caps):
        result = coordinate_closed_form(85.0, ref_caps)
        assert np.allclose(result.desired, ref_caps.gen_lo, atol=1e-13)

    def test_ceiling_demand_forces_upper_bounds(self, ref_caps):
        result = coordinate_closed_form(330.0, ref_caps)
        assert np.allclose(result.desired, ref_caps.gen_hi, atol=1e-13)

    def test_not_realizable_raises_with_report(self, ref_caps):
        with pytest.raises(NotRealizableError) as info:
            coordinate_closed_form(400.0, ref_caps)
        assert info.value.report is not None
        assert info.value.report.upper_margin == pytest.approx(-70.0)

    def test_bounds_and_balance_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            caps = random_capacities(rng, int(rng.integers(1, 13)))
            p_D = rng.uniform(caps.total_gen_lo, caps.total_gen_hi)
            desired = coordinate_closed_form(p_D, caps).desired
            assert np.all(desired >= caps.gen_lo - 1e-9)
            assert np.all(desired <= caps.gen_hi + 1e-9)
            assert abs(desired.sum() - p_D) <= 1e-8 * (1.0 + abs(p_D))

    def test_monotone_in_demand(self, ref_caps):
        lower = coordinate_closed_form(120.0, ref_caps).desired
        higher = coordinate_closed_form(240.0, ref_caps).desired
        assert np.all(higher >= lower - 1e-12)

    def test_all_generators_fixed(self):
        # realizable interval collapses to a point, so the only acceptable
        # demand is the floor itself; anything else fails realizability
        caps = NodeCapacities(gen_lo=[5, 7], gen_hi=[5, 7], net_lo=[5, 7], net_hi=[5, 7])
        result = coordinate_closed_form(12.0, caps)
        assert np.allclose(result.desired, [5.0, 7.0])
        with pytest.raises(NotRealizableError):
            coordinate_closed_form(12.5, caps)


class TestDistributed:
    def test_single_node(self):
        caps = NodeCapacities(gen_lo=[10], gen_hi=[50], net_lo=[10], net_hi=[50])
        topo = build_topology(1, [])
        result = coordinate_distributed(30.0, caps, topo)
        assert result.desired[0] == pytest.approx(30.0, abs=1e-9)

    def test_matches_closed_form_on_reference(self, ref_caps, ring_chord):
        closed = coordinate_closed_form(150.0, ref_caps).desired
        dist = coordinate_distributed(150.0, ref_caps, ring_chord, leader=1)
        assert dist.method == "distributed"
        assert dist.iters_x == dist.iters_y > 0
        assert np.max(np.abs(dist.desired - closed)) <= 1e-8

    def test_leader_choice_does_not_matter(self, ref_caps, ring_chord):
        results = [
            coordinate_distributed(203.0, ref_caps, ring_chord, leader=l).desired
            for l in range(1, 7)
        ]
        for other in results[1:]:
            assert np.max(np.abs(other - results[0])) <= 1e-8

    def test_leader_out_of_range(self, ref_caps, ring_chord):
        with pytest.raises(ValueError):
            coordinate_distributed(150.0, ref_caps, ring_chord, leader=0)
        with pytest.raises(ValueError):
            coordinate_distributed(150.0, ref_caps, ring_chord, leader=7)

    def test_size_mismatch(self, ref_caps, path3):
        with pytest.raises(CapacityError):
            coordinate_distributed(150.0, ref_caps, path3)

    def test_not_realizable(self, ref_caps, ring_chord):
        with pytest.raises(NotRealizableError):
            coordinate_distributed(84.9, ref_caps, ring_chord)

    def test_round_cap_raises(self, ref_caps, ring_chord):
        with pytest.raises(ConvergenceError):
            coordinate_distributed(150.0, ref_caps, ring_chord,
                                   criteria=ConvergenceCriteria(eps=1e-14, max_iters=4))

    def test_all_generators_fixed_degenerate(self, ring_chord):
        vals = [10.0, 20.0, 20.0, 10.0, 15.0, 10.0]
        caps = NodeCapacities(gen_lo=vals, gen_hi=vals, net_lo=vals, net_hi=vals)
        result = coordinate_distributed(85.0, caps, ring_chord)
        assert np.allclose(result.desired, vals)
        with pytest.raises(NotRealizableError):
            coordinate_distributed(86.0, caps, ring_chord)

    def test_matches_closed_form_on_random_instances(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            n = int(rng.integers(1, 13))
            topo = random_connected_topology(n, rng)
            caps = random_capacities(rng, n)
            p_D = rng.uniform(caps.total_gen_lo, caps.total_gen_hi)
            closed = coordinate_closed_form(p_D, caps).desired
            dist = coordinate_distributed(p_D, caps, topo).desired
            assert np.max(np.abs(dist - closed)) <= 1e-8 * (1.0 + np.max(np.abs(closed)))
            assert np.all(dist >= caps.gen_lo - 1e-8)
            assert np.all(dist <= caps.gen_hi + 1e-8)
            assert abs(dist.sum() - p_D) <= 1e-8 * (1.0 + abs(p_D))
