"""Mobility tests: initialization layouts, stepping, boundary reflection."""

import math

import numpy as np
import pytest

from uavbs.mobility import (
    CIRCLE_RADIUS_M,
    MobilityScenario,
    ScenarioKind,
    init_ues,
    reflect,
    scenario_for,
    step_ues,
)

ALL_KINDS = list(ScenarioKind)


class TestReflect:
    def test_mirror_above(self):
        assert reflect(107.0, -100.0, 100.0) == (93.0, True)

    def test_in_range(self):
        assert reflect(50.0, -100.0, 100.0) == (50.0, False)

    def test_mirror_below(self):
        assert reflect(-103.0, -100.0, 100.0) == (-97.0, True)

    def test_large_overshoot_folds(self):
        coord, flipped = reflect(100.0 + 350.0, -100.0, 100.0)
        assert -100.0 <= coord <= 100.0
        # two folds: 450 -> -250 -> 50; net velocity flip cancels
        assert coord == pytest.approx(50.0)
        assert flipped is False

    def test_invalid_interval(self):
        with pytest.raises(ValueError):
            reflect(0.0, 10.0, -10.0)


class TestInit:
    def test_no_move_cluster(self):
        ues = init_ues(scenario_for("no_move"), np.random.default_rng(0))
        assert len(ues) == 10
        for ue in ues:
            assert np.all(np.abs(ue.position) <= 5.0)
            assert np.all(ue.velocity == 0.0)

    def test_straight_random_shared_velocity(self):
        ues = init_ues(scenario_for("straight_random"), np.random.default_rng(1))
        speeds = [np.linalg.norm(ue.velocity) for ue in ues]
        assert np.allclose(speeds, 8.0)
        for ue in ues[1:]:
            np.testing.assert_array_equal(ue.velocity, ues[0].velocity)

    def test_circular_init_square(self):
        ues = init_ues(scenario_for("circular"), np.random.default_rng(2))
        for ue in ues:
            assert 0.0 <= ue.position[0] <= 10.0
            assert -200.0 <= ue.position[1] <= -190.0
            assert ue.circular_phase == pytest.approx(-math.pi / 2.0)

    @pytest.mark.parametrize("kind,gap", [("straight_90", 90.0), ("straight_180", 180.0)])
    def test_crossed_groups(self, kind, gap):
        ues = init_ues(scenario_for(kind), np.random.default_rng(3))
        groups = {g: [u for u in ues if u.group_id == g] for g in (0, 1)}
        assert len(groups[0]) == 5 and len(groups[1]) == 5
        h0 = math.degrees(math.atan2(*groups[0][0].velocity[::-1]))
        h1 = math.degrees(math.atan2(*groups[1][0].velocity[::-1]))
        diff = abs((h1 - h0 + 180.0) % 360.0 - 180.0)
        assert diff == pytest.approx(gap, abs=1e-9)

    def test_hotspot_two_groups_of_five(self):
        ues = init_ues(scenario_for("hotspot_random"), np.random.default_rng(4))
        counts = {0: 0, 1: 0}
        for ue in ues:
            counts[ue.group_id] += 1
            assert np.linalg.norm(ue.velocity) <= 8.0 + 1e-12
        assert counts == {0: 5, 1: 5}


class TestStep:
    def test_no_move_fixed_point(self):
        scenario = scenario_for("no_move")
        rng = np.random.default_rng(0)
        ues = init_ues(scenario, rng)
        before = [ue.position.copy() for ue in ues]
        step_ues(ues, scenario, 1.0, rng)
        for b, ue in zip(before, ues):
            np.testing.assert_array_equal(b, ue.position)

    def test_straight_displacement_magnitude(self):
        scenario = scenario_for("straight_random")
        rng = np.random.default_rng(1)
        ues = init_ues(scenario, rng)
        before = [ue.position.copy() for ue in ues]
        step_ues(ues, scenario, 1.0, rng)
        for b, ue in zip(before, ues):
            assert np.linalg.norm(ue.position - b) == pytest.approx(8.0)

    def test_circular_angular_advance(self):
        scenario = scenario_for("circular")
        rng = np.random.default_rng(2)
        ues = init_ues(scenario, rng)
        phase0 = ues[0].circular_phase
        step_ues(ues, scenario, 1.0, rng)
        assert ues[0].circular_phase - phase0 == pytest.approx(8.0 / CIRCLE_RADIUS_M)

    def test_circular_radius_band(self):
        scenario = scenario_for("circular")
        rng = np.random.default_rng(3)
        ues = init_ues(scenario, rng)
        band = 10.0 * math.sqrt(2.0)
        for _ in range(400):
            step_ues(ues, scenario, 1.0, rng)
            for ue in ues:
                r = np.linalg.norm(ue.position)
                assert CIRCLE_RADIUS_M - band <= r <= CIRCLE_RADIUS_M + band

    @pytest.mark.parametrize("kind", [k.value for k in ALL_KINDS])
    def test_bounds_invariant(self, kind):
        scenario = scenario_for(kind)
        rng = np.random.default_rng(5)
        ues = init_ues(scenario, rng)
        for _ in range(2000):
            step_ues(ues, scenario, 1.0, rng)
            for ue in ues:
                assert np.all(np.abs(ue.position) <= scenario.area_half_width_m + 1e-9)

    def test_reflection_preserves_speed(self):
        scenario = scenario_for("straight_random")
        rng = np.random.default_rng(6)
        ues = init_ues(scenario, rng)
        for _ in range(200):
            step_ues(ues, scenario, 1.0, rng)
            for ue in ues:
                assert np.linalg.norm(ue.velocity) == pytest.approx(8.0)

    def test_deterministic_trajectories(self):
        scenario = scenario_for("hotspot_random")

        def roll(seed):
            rng = np.random.default_rng(seed)
            ues = init_ues(scenario, rng)
            for _ in range(100):
                step_ues(ues, scenario, 1.0, rng)
            return np.stack([ue.position for ue in ues])

        np.testing.assert_array_equal(roll(42), roll(42))

    def test_invalid_dt(self):
        scenario = scenario_for("no_move")
        rng = np.random.default_rng(0)
        ues = init_ues(scenario, rng)
        with pytest.raises(ValueError):
            step_ues(ues, scenario, 0.0, rng)


class TestScenarioConfig:
    def test_circular_widens_arena(self):
        assert scenario_for("circular").area_half_width_m == pytest.approx(
            CIRCLE_RADIUS_M + 10.0 * math.sqrt(2.0)
        )
        assert scenario_for("no_move").area_half_width_m == 100.0

    def test_invariants(self):
        with pytest.raises(ValueError):
            MobilityScenario(num_ues=0)
        with pytest.raises(ValueError):
            MobilityScenario(area_half_width_m=0.0)
        with pytest.raises(ValueError):
            MobilityScenario(ue_speed_mps=-1.0)
        with pytest.raises(ValueError):
            MobilityScenario(kind="warp_drive")
