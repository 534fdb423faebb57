"""
VFH baseline tests: histogram construction, valley steering, closed-loop behaviour.
"""

import math

import numpy as np
import pytest

from agents.vfh_agent import (
    PolarHistogram,
    VFHAgent,
    build_histogram,
    find_valleys,
    free_sectors,
    vfh_steer,
)
from config_loader import SimConfig, VFHConfig
from environment.nav_env import ACTION_TABLE, Observation
from tools.metric_calculator import compute_metrics
from tools.simulator import LaserScan, Pose, World, raycast, scan_angles

from conftest import forward_goal_scenarios, frame_sequence, stack_of


SECTOR = math.pi / 36


def scan_of(ranges, config=SimConfig()):
    angle_min, angle_max, _ = scan_angles(config)
    return LaserScan(np.asarray(ranges, dtype=np.float64), angle_min, angle_max, config.max_range)


def histogram(densities):
    return PolarHistogram(np.asarray(densities, dtype=np.float64), -math.pi / 2, SECTOR)


class TestHistogram:
    def test_empty_scan(self):
        hist = build_histogram(scan_of(np.full(181, 6.0)))
        assert hist.num_sectors == 36
        assert np.all(hist.densities == 0.0)
        assert hist.sector_width == pytest.approx(SECTOR)

    def test_far_hit_is_nearly_free(self):
        ranges = np.full(181, 6.0)
        ranges[41] = 5.99
        hist = build_histogram(scan_of(ranges))
        assert hist.densities[8] == pytest.approx(0.01 ** 2 / 36)
        assert np.count_nonzero(hist.densities) == 1

    def test_edge_beam_is_split(self):
        ranges = np.full(181, 6.0)
        ranges[90] = 3.0
        hist = build_histogram(scan_of(ranges))
        assert hist.densities[17] == pytest.approx(0.5 * 9.0 / 36)
        assert hist.densities[18] == pytest.approx(0.5 * 9.0 / 36)

    def test_wall_ahead_is_symmetric(self):
        world = World((-5.0, -5.0, 2.0, 5.0))
        hist = build_histogram(raycast(world, Pose(0.0, 0.0, 0.0), SimConfig()))
        np.testing.assert_allclose(hist.densities, hist.densities[::-1], atol=1e-9)
        assert int(np.argmax(hist.densities)) in (17, 18)

    def test_total_mass(self):
        rng = np.random.default_rng(0)
        ranges = rng.uniform(0.5, 6.0, 181)
        ranges[rng.random(181) < 0.3] = 6.0
        hist = build_histogram(scan_of(ranges))
        expected = np.sum(np.where(ranges < 6.0, (6.0 - ranges) ** 2 / 36, 0.0))
        assert hist.densities.sum() == pytest.approx(expected)


class TestValleys:
    def test_find_valleys(self):
        free = np.array([True, True, False, True, False, False, True])
        assert find_valleys(free) == [(0, 1), (3, 3), (6, 6)]
        assert find_valleys(np.zeros(4, dtype=bool)) == []

    def test_threshold_monotone(self):
        rng = np.random.default_rng(1)
        hist = histogram(rng.uniform(0.0, 5.0, 36))
        previous = None
        for threshold in np.linspace(0.0, 5.0, 21):
            free = free_sectors(hist, threshold)
            if previous is not None:
                assert np.all(free[previous])
            previous = free


class TestSteer:
    def test_all_free_goal_ahead(self):
        action = vfh_steer(histogram(np.zeros(36)), (2.0, 0.0))
        assert action == ACTION_TABLE.index_of(0.6, 0.0)

    def test_all_blocked_turns_in_place(self):
        action = vfh_steer(histogram(np.full(36, 3.0)), (2.0, 0.0))
        assert action == ACTION_TABLE.index_of(0.0, 0.9)

    def test_forward_blocked(self):
        densities = np.zeros(36)
        densities[15:21] = 10.0
        action = vfh_steer(histogram(densities), (2.0, 0.0))
        twist = ACTION_TABLE[action]
        # equal detours either side; the goal side (bearing 0 counts as left) wins
        assert twist.w == 0.3
        assert twist.v == 0.6

    def test_narrow_valley_uses_centre(self):
        densities = np.full(36, 10.0)
        densities[26:28] = 0.0
        action = vfh_steer(histogram(densities), (2.0, 0.0))
        twist = ACTION_TABLE[action]
        # centre of sectors 26-27 is +45 deg; nearest turn rate is 0.9
        assert twist.w == 0.9
        assert twist.v == 0.2

    def test_slows_near_goal(self):
        action = vfh_steer(histogram(np.zeros(36)), (0.3, 0.0))
        assert ACTION_TABLE[action].v == 0.2

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(2)
        config = VFHConfig()
        for _ in range(200):
            ranges = rng.uniform(0.3, 6.0, 181)
            ranges[rng.random(181) < 0.5] = 6.0
            gx = rng.uniform(-1.0, 3.0)
            gy = rng.uniform(0.05, 3.0) * rng.choice([-1.0, 1.0])
            hist = build_histogram(scan_of(ranges), config)
            if not find_valleys(free_sectors(hist, config.threshold)):
                # the blocked fallback always turns left
                continue
            left = ACTION_TABLE[vfh_steer(hist, (gx, gy), config)]
            right = ACTION_TABLE[vfh_steer(build_histogram(scan_of(ranges[::-1]), config), (gx, -gy), config)]
            assert left.v == right.v
            assert left.w == -right.w


class TestAgent:
    def test_needs_scan(self):
        frames = frame_sequence(np.random.default_rng(0), 3)
        observation = Observation(maps=stack_of(frames), goal=np.array([1.0, 0.0]), velocity=np.zeros(2))
        with pytest.raises(ValueError):
            VFHAgent().select_action(observation)

    def test_reaches_goals_without_obstacles(self):
        agent = VFHAgent()
        rows = [agent.run_episode(scenario, seed=i).to_row()
                for i, scenario in enumerate(forward_goal_scenarios(10, seed=4))]
        metrics = compute_metrics(rows)
        assert metrics.success_rate == 1.0
        assert metrics.reach_step is not None
