"""
导航 MDP 环境
Action table, reward, observation assembly, termination and the episode step
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from config_loader import CostmapParams, RewardParams, SimConfig
from tools.costmap_generator import MapStack, push_frame, scan_to_costmap
from tools.simulator import (
    LaserScan,
    Pose,
    Twist,
    World,
    check_collision,
    raycast,
    step_kinematics,
)


logger = logging.getLogger(__name__)

V_VALUES = (0.0, 0.2, 0.4, 0.6)
W_VALUES = (-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9)
GOAL_CLIP = 3.0


class EpisodeFinishedError(RuntimeError):
    """对已结束的回合继续 step"""


class Outcome(str, Enum):
    RUNNING = 'running'
    ARRIVED = 'arrived'
    COLLIDED = 'collided'


class ActionTable:
    """28 个离散动作: index = 7 * v_index + w_index"""

    def __init__(self, v_values=V_VALUES, w_values=W_VALUES):
        if min(v_values) < 0:
            raise ValueError("backward velocities are not allowed in the action table")
        self.v_values = tuple(v_values)
        self.w_values = tuple(w_values)
        self.actions: List[Twist] = [Twist(v, w) for v in self.v_values for w in self.w_values]

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, index: int) -> Twist:
        if not 0 <= index < len(self.actions):
            raise IndexError(f"action index {index} out of range [0, {len(self.actions)})")
        return self.actions[index]

    def index_of(self, v: float, w: float) -> int:
        return len(self.w_values) * self.v_values.index(v) + self.w_values.index(w)

    @property
    def v_max(self) -> float:
        return max(self.v_values)

    @property
    def w_max(self) -> float:
        return max(abs(w) for w in self.w_values)


ACTION_TABLE = ActionTable()


@dataclass
class EnvParams:
    """环境所需的全部参数"""
    sim: SimConfig = field(default_factory=SimConfig)
    costmap: CostmapParams = field(default_factory=CostmapParams)
    reward: RewardParams = field(default_factory=RewardParams)
    episode_length: int = 300


@dataclass(eq=False)
class Observation:
    """观测: 地图栈 + 机器人坐标系局部目标 + 当前速度 (scan 供 VFH 使用)"""
    maps: MapStack
    goal: np.ndarray
    velocity: np.ndarray
    scan: Optional[LaserScan] = None

    def map_array(self, dtype=np.float32) -> np.ndarray:
        return self.maps.as_array(dtype)

    def vector(self, dtype=np.float32) -> np.ndarray:
        """网络向量输入: [gx/3, gy/3, v/0.6, w/0.9]"""
        return np.array([
            self.goal[0] / GOAL_CLIP,
            self.goal[1] / GOAL_CLIP,
            self.velocity[0] / ACTION_TABLE.v_max,
            self.velocity[1] / ACTION_TABLE.w_max,
        ], dtype=dtype)


@dataclass(eq=False)
class EpisodeState:
    """单个回合的可变状态，只由一个 runner 持有"""
    world: World
    pose: Pose
    goal: Tuple[float, float]
    maps: MapStack
    rng: np.random.Generator
    velocity: Twist = field(default_factory=lambda: Twist(0.0, 0.0))
    step_count: int = 0
    episode_return: float = 0.0
    done: bool = False
    outcome: Outcome = Outcome.RUNNING
    timed_out: bool = False
    scenario_id: str = ""


def goal_reward(prev_pose: Pose, pose: Pose, goal: Tuple[float, float], params: RewardParams) -> Tuple[float, bool]:
    dist = pose.distance_to(goal)
    if dist < params.goal_radius:
        return params.r_arr, True
    return params.epsilon_progress * (prev_pose.distance_to(goal) - dist), False


def compute_reward(
    prev_pose: Pose,
    pose: Pose,
    goal: Tuple[float, float],
    collided: bool,
    params: RewardParams,
) -> Tuple[float, Outcome]:
    """
    r_t = r^g + r^c + r^s，到达优先于碰撞

    Returns:
        (reward, outcome)
    """
    r_goal, arrived = goal_reward(prev_pose, pose, goal, params)
    r_col = params.r_col if collided else 0.0
    reward = r_goal + r_col + params.r_step

    if arrived:
        return reward, Outcome.ARRIVED
    if collided:
        return reward, Outcome.COLLIDED
    return reward, Outcome.RUNNING


def local_goal(pose: Pose, goal: Tuple[float, float]) -> np.ndarray:
    gx, gy = pose.to_robot_frame(goal)
    return np.clip(np.array([gx, gy], dtype=np.float64), -GOAL_CLIP, GOAL_CLIP)


def make_observation(state: EpisodeState, scan: LaserScan) -> Observation:
    return Observation(
        maps=state.maps,
        goal=local_goal(state.pose, state.goal),
        velocity=np.array([state.velocity.v, state.velocity.w], dtype=np.float64),
        scan=scan,
    )


def reset_episode(
    world: World,
    start: Pose,
    goal: Tuple[float, float],
    params: EnvParams,
    rng: np.random.Generator,
    noise_sigma: float = 0.0,
    scenario_id: str = "",
) -> Tuple[EpisodeState, Observation]:
    """开始新回合: 首帧复制填满地图栈"""
    scan = raycast(world, start, params.sim, noise_sigma, rng)
    first = scan_to_costmap(scan, params.costmap, world.robot_radius)
    state = EpisodeState(
        world=world,
        pose=start,
        goal=(float(goal[0]), float(goal[1])),
        maps=MapStack.reset(first, params.costmap.stack_frames),
        rng=rng,
        scenario_id=scenario_id,
    )
    return state, make_observation(state, scan)


def env_step(
    state: EpisodeState,
    action_index: int,
    params: EnvParams,
    noise_sigma: float = 0.0,
) -> Tuple[Observation, float, bool, Outcome]:
    """
    执行一个控制周期

    Args:
        state: 回合状态 (原地更新)
        action_index: 动作表索引 0..27
        params: 环境参数
        noise_sigma: 激光噪声标准差

    Returns:
        (observation, reward, done, outcome)
    """
    if state.done:
        raise EpisodeFinishedError(
            f"episode {state.scenario_id or '<unnamed>'} already finished at step {state.step_count}"
        )

    twist = ACTION_TABLE[action_index]
    prev_pose = state.pose
    pose = step_kinematics(prev_pose, twist, params.sim.dt)
    collided = check_collision(state.world, pose)
    reward, outcome = compute_reward(prev_pose, pose, state.goal, collided, params.reward)

    scan = raycast(state.world, pose, params.sim, noise_sigma, state.rng)
    state.maps = push_frame(state.maps, scan_to_costmap(scan, params.costmap, state.world.robot_radius))
    state.pose = pose
    state.velocity = twist
    state.step_count += 1
    state.episode_return += reward
    state.outcome = outcome

    done = outcome is not Outcome.RUNNING or state.step_count >= params.episode_length
    state.done = done
    state.timed_out = done and outcome is Outcome.RUNNING
    return make_observation(state, scan), reward, done, outcome


class NavigationEnv:
    """面向对象封装: reset(scenario) / step(action)"""

    def __init__(self, params: EnvParams = None, noise_sigma: float = 0.0):
        self.params = params or EnvParams()
        self.noise_sigma = noise_sigma
        self.state: Optional[EpisodeState] = None

    def reset(self, scenario, rng: np.random.Generator) -> Observation:
        self.state, observation = reset_episode(
            scenario.world,
            scenario.start,
            scenario.goal,
            self.params,
            rng,
            noise_sigma=self.noise_sigma,
            scenario_id=scenario.scenario_id,
        )
        return observation

    def step(self, action_index: int) -> Tuple[Observation, float, bool, Outcome]:
        if self.state is None:
            raise EpisodeFinishedError("reset() must be called before step()")
        return env_step(self.state, action_index, self.params, self.noise_sigma)
