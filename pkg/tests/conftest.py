"""
Shared fixtures for the navigation stack tests.
"""

import math

import numpy as np
import pytest

from config_loader import AppConfig, CostmapParams, SimConfig
from environment.curriculum import Scenario
from environment.nav_env import EnvParams, Observation
from memory.replay_buffer import Transition
from tools.costmap_generator import Costmap, MapStack
from tools.simulator import Pose, World


# walls this far away never show up inside the 6 m laser range
OPEN_BOUNDS = (-50.0, -50.0, 50.0, 50.0)


@pytest.fixture
def sim_config():
    return SimConfig()


@pytest.fixture
def costmap_params():
    return CostmapParams()


@pytest.fixture
def env_params():
    return EnvParams()


@pytest.fixture
def app_config():
    return AppConfig()


@pytest.fixture
def open_world():
    return World(bounds=OPEN_BOUNDS)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def make_scenario(world, start=(0.0, 0.0, 0.0), goal=(2.0, 0.0), scenario_id="fixture"):
    return Scenario(world=world, start=Pose(*start), goal=tuple(goal), scenario_id=scenario_id)


def forward_goal_scenarios(count, seed=0, max_bearing=math.radians(30), distance=(1.5, 3.0)):
    """Obstacle-free scenarios with the goal in front of the robot."""
    rng = np.random.default_rng(seed)
    world = World(bounds=OPEN_BOUNDS)
    scenarios = []
    for i in range(count):
        bearing = rng.uniform(-max_bearing, max_bearing)
        dist = rng.uniform(*distance)
        scenarios.append(make_scenario(
            world,
            start=(0.0, 0.0, 0.0),
            goal=(dist * math.cos(bearing), dist * math.sin(bearing)),
            scenario_id=f"open_{i:02d}",
        ))
    return scenarios


def frame_sequence(rng, count, size=60):
    """Random costmaps quantized to 8-bit levels."""
    return [Costmap(grid=rng.integers(0, 256, size=(size, size)) / 255.0) for _ in range(count)]


def stack_of(frames):
    return MapStack(frames=tuple(frames))


def observation_of(frames, goal=(1.5, -0.5), velocity=(0.2, 0.3)):
    return Observation(maps=stack_of(frames), goal=np.array(goal), velocity=np.array(velocity))


def transition_chain(count, seed=0):
    """Consecutive transitions whose stacks slide over one frame sequence."""
    frames = frame_sequence(np.random.default_rng(seed), count + 3)
    return [
        Transition(
            observation=observation_of(frames[i:i + 3]),
            action=i % 28,
            reward=float(i),
            next_observation=observation_of(frames[i + 1:i + 4]),
            done=(i % 5 == 4),
        )
        for i in range(count)
    ]
