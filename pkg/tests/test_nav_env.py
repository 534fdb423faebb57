"""
MDP tests: rewards, action table, episode stepping and termination.
"""

import math

import numpy as np
import pytest

from config_loader import RewardParams
from environment.nav_env import (
    ACTION_TABLE,
    EnvParams,
    EpisodeFinishedError,
    NavigationEnv,
    Outcome,
    compute_reward,
    env_step,
    goal_reward,
    reset_episode,
)
from tools.simulator import Pose, World, check_collision

from conftest import OPEN_BOUNDS, make_scenario


REWARD = RewardParams()


class TestReward:
    def test_arrival(self):
        reward, outcome = compute_reward(Pose(1.0, 0.0), Pose(0.15, 0.0), (0.0, 0.0), False, REWARD)
        assert reward == 495.0
        assert outcome is Outcome.ARRIVED

    def test_progress(self):
        reward, outcome = compute_reward(Pose(2.0, 0.0), Pose(1.9, 0.0), (0.0, 0.0), False, REWARD)
        assert reward == pytest.approx(-4.0)
        assert outcome is Outcome.RUNNING

    def test_collision_without_progress(self):
        pose = Pose(1.0, 1.0)
        reward, outcome = compute_reward(pose, pose, (0.0, 0.0), True, REWARD)
        assert reward == -505.0
        assert outcome is Outcome.COLLIDED

    def test_arrival_takes_precedence(self):
        reward, outcome = compute_reward(Pose(1.0, 0.0), Pose(0.1, 0.0), (0.0, 0.0), True, REWARD)
        assert outcome is Outcome.ARRIVED
        assert reward == 500.0 - 500.0 - 5.0

    def test_goal_radius_is_strict(self):
        _, arrived = goal_reward(Pose(1.0, 0.0), Pose(0.2, 0.0), (0.0, 0.0), REWARD)
        assert not arrived

    def test_moving_away_is_penalized(self):
        reward, _ = compute_reward(Pose(1.0, 0.0), Pose(1.5, 0.0), (0.0, 0.0), False, REWARD)
        assert reward == pytest.approx(-10.0)


class TestActionTable:
    def test_size_and_bounds(self):
        assert len(ACTION_TABLE) == 28
        assert all(t.v >= 0 for t in ACTION_TABLE.actions)
        assert ACTION_TABLE.v_max == 0.6
        assert ACTION_TABLE.w_max == 0.9

    def test_bijection(self):
        for index in range(28):
            twist = ACTION_TABLE[index]
            assert ACTION_TABLE.index_of(twist.v, twist.w) == index
            v_idx, w_idx = divmod(index, 7)
            assert twist.v == (0.0, 0.2, 0.4, 0.6)[v_idx]
            assert twist.w == (-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9)[w_idx]

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            ACTION_TABLE[28]


class TestEnvStep:
    def test_reach_goal_in_one_step(self, open_world):
        env = NavigationEnv(EnvParams())
        env.reset(make_scenario(open_world, goal=(0.1, 0.0)), np.random.default_rng(0))
        _, reward, done, outcome = env.step(ACTION_TABLE.index_of(0.6, 0.0))
        assert done
        assert outcome is Outcome.ARRIVED
        assert reward == 495.0
        assert not env.state.timed_out

    def test_wall_ahead_collides(self):
        world = World((-5.0, -5.0, 0.25, 5.0))
        goal = (-2.0, 0.0)
        for action in range(len(ACTION_TABLE)):
            env = NavigationEnv(EnvParams())
            env.reset(make_scenario(world, goal=goal), np.random.default_rng(0))
            prev = env.state.pose
            _, reward, done, outcome = env.step(action)
            assert done and outcome is Outcome.COLLIDED
            progress = 10.0 * (prev.distance_to(goal) - env.state.pose.distance_to(goal))
            assert reward == pytest.approx(-505.0 + progress)

    def test_stepping_finished_episode_is_rejected(self, open_world):
        env = NavigationEnv(EnvParams())
        env.reset(make_scenario(open_world, goal=(0.1, 0.0)), np.random.default_rng(0))
        env.step(ACTION_TABLE.index_of(0.6, 0.0))
        with pytest.raises(EpisodeFinishedError):
            env.step(0)

    def test_step_before_reset(self):
        with pytest.raises(EpisodeFinishedError):
            NavigationEnv().step(0)

    def test_timeout_is_running(self, open_world):
        env = NavigationEnv(EnvParams())
        env.reset(make_scenario(open_world, goal=(10.0, 0.0)), np.random.default_rng(0))
        stay = ACTION_TABLE.index_of(0.0, 0.0)
        for step in range(1, 301):
            _, reward, done, outcome = env.step(stay)
            assert reward == -5.0
            assert outcome is Outcome.RUNNING
            assert done == (step == 300)
        assert env.state.timed_out
        assert env.state.episode_return == pytest.approx(-1500.0)

    def test_reward_decomposes(self, rng):
        world = World((-4.0, -4.0, 4.0, 4.0))
        goal = (2.5, 1.0)
        state, _ = reset_episode(world, Pose(-2.0, -1.0, 0.3), goal, EnvParams(), rng)
        while not state.done:
            prev = state.pose
            _, reward, _, _ = env_step(state, int(rng.integers(28)), EnvParams())
            r_goal, _ = goal_reward(prev, state.pose, goal, REWARD)
            r_col = REWARD.r_col if check_collision(world, state.pose) else 0.0
            assert reward == r_goal + r_col + REWARD.r_step

    def test_map_stack_advances(self, rng):
        world = World((-3.0, -3.0, 3.0, 3.0))
        state, obs = reset_episode(world, Pose(0.0, 0.0, 0.0), (2.0, 0.0), EnvParams(), rng)
        frames = obs.maps.frames
        assert frames[0] is frames[1] is frames[2]
        next_obs, _, _, _ = env_step(state, ACTION_TABLE.index_of(0.2, 0.3), EnvParams())
        assert next_obs.maps.frames[:2] == frames[1:]
        assert not next_obs.maps.frames[2].equals(frames[2])


class TestObservation:
    def test_goal_is_clipped_and_normalized(self):
        world = World(OPEN_BOUNDS)
        state, obs = reset_episode(world, Pose(0.0, 0.0, 0.0), (10.0, -10.0), EnvParams(), np.random.default_rng(0))
        np.testing.assert_allclose(obs.goal, [3.0, -3.0])
        np.testing.assert_allclose(obs.vector(), [1.0, -1.0, 0.0, 0.0])

    def test_goal_in_robot_frame(self):
        world = World(OPEN_BOUNDS)
        _, obs = reset_episode(world, Pose(1.0, 1.0, math.pi / 2), (1.0, 2.0), EnvParams(), np.random.default_rng(0))
        np.testing.assert_allclose(obs.goal, [1.0, 0.0], atol=1e-12)

    def test_velocity_channel(self, open_world):
        env = NavigationEnv(EnvParams())
        env.reset(make_scenario(open_world, goal=(5.0, 0.0)), np.random.default_rng(0))
        obs, _, _, _ = env.step(ACTION_TABLE.index_of(0.4, -0.6))
        np.testing.assert_allclose(obs.velocity, [0.4, -0.6])
        np.testing.assert_allclose(obs.vector()[2:], [0.4 / 0.6, -0.6 / 0.9], rtol=1e-6)
        assert obs.map_array().shape == (3, 60, 60)
        assert obs.scan is not None and obs.scan.num_beams == 181

    def test_noise_stream_is_episode_owned(self):
        world = World((-3.0, -3.0, 3.0, 3.0))
        scenario = make_scenario(world, goal=(2.0, 0.0))
        runs = []
        for _ in range(2):
            env = NavigationEnv(EnvParams(), noise_sigma=0.05)
            env.reset(scenario, np.random.default_rng(5))
            obs, _, _, _ = env.step(ACTION_TABLE.index_of(0.2, 0.0))
            runs.append(obs.scan.ranges)
        assert np.array_equal(runs[0], runs[1])
