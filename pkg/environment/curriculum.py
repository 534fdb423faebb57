"""
课程学习与场景采样
Curriculum levels, progress schedule, random scenario sampling with reachability check
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config_loader import CurriculumConfig, SimConfig
from tools.simulator import CircleObstacle, Pose, RectObstacle, World


logger = logging.getLogger(__name__)

MAX_SAMPLING_ATTEMPTS = 10_000
START_GOAL_MARGIN = 0.2
BFS_RESOLUTION = 0.1


class ScenarioSamplingError(RuntimeError):
    """关卡约束过紧，拒绝采样失败"""


@dataclass(frozen=True)
class CurriculumLevel:
    index: int
    obstacle_count: Tuple[int, int]
    distance: Tuple[float, float]
    threshold: float = 0.0


@dataclass(frozen=True)
class Scenario:
    """一个回合的初始条件"""
    world: World
    start: Pose
    goal: Tuple[float, float]
    level: int = -1
    seed: int = 0
    scenario_id: str = ""


def build_levels(config: CurriculumConfig = None) -> List[CurriculumLevel]:
    """从配置构建关卡表并检查单调性"""
    config = config or CurriculumConfig()
    levels = [
        CurriculumLevel(
            index=i,
            obstacle_count=(int(counts[0]), int(counts[1])),
            distance=(float(dist[0]), float(dist[1])),
            threshold=float(threshold),
        )
        for i, (threshold, counts, dist) in enumerate(
            zip(config.thresholds, config.obstacle_counts, config.distances)
        )
    ]
    for prev, cur in zip(levels, levels[1:]):
        if cur.threshold < prev.threshold or cur.obstacle_count[1] < prev.obstacle_count[1] \
                or cur.distance[1] < prev.distance[1]:
            raise ValueError(f"curriculum level {cur.index} is easier than level {prev.index}")
    for level in levels:
        if level.obstacle_count[0] > level.obstacle_count[1] or level.distance[0] > level.distance[1]:
            raise ValueError(f"curriculum level {level.index} has an inverted range")
    return levels


def curriculum_schedule(training_progress: float, config: CurriculumConfig = None) -> CurriculumLevel:
    """
    训练进度 -> 关卡 (阈值 0, 0.2, 0.4, 0.6, 0.8)

    Args:
        training_progress: 训练进度 [0, 1]

    Returns:
        CurriculumLevel
    """
    levels = build_levels(config)
    progress = min(max(training_progress, 0.0), 1.0)
    chosen = levels[0]
    for level in levels:
        if progress >= level.threshold:
            chosen = level
    return chosen


def level_for_progress(training_progress: float, config: CurriculumConfig) -> CurriculumLevel:
    """考虑 enabled / max_level 的训练关卡; 关闭课程时固定为最难关卡"""
    levels = build_levels(config)
    if not config.enabled:
        return levels[config.max_level]
    scheduled = curriculum_schedule(training_progress, config)
    return levels[min(scheduled.index, config.max_level)]


def arena_bounds(sim: SimConfig) -> Tuple[float, float, float, float]:
    half = sim.arena_size / 2.0
    return (-half, -half, half, half)


def _sample_obstacle(rng: np.random.Generator, bounds) -> object:
    xmin, ymin, xmax, ymax = bounds
    cx = rng.uniform(xmin, xmax)
    cy = rng.uniform(ymin, ymax)
    if rng.random() < 0.5:
        return CircleObstacle(cx, cy, rng.uniform(0.2, 0.5))
    hx = rng.uniform(0.15, 0.5)
    hy = rng.uniform(0.15, 0.5)
    return RectObstacle(cx - hx, cy - hy, cx + hx, cy + hy)


def goal_reachable(
    world: World,
    start: Tuple[float, float],
    goal: Tuple[float, float],
    resolution: float = BFS_RESOLUTION,
) -> bool:
    """在 0.1m 栅格上做 4 邻接 BFS，格子中心净空 >= R 视为可通行"""
    xmin, ymin, xmax, ymax = world.bounds
    nx = int(math.ceil((xmax - xmin) / resolution))
    ny = int(math.ceil((ymax - ymin) / resolution))
    xs = xmin + (np.arange(nx) + 0.5) * resolution
    ys = ymin + (np.arange(ny) + 0.5) * resolution
    free = world.clearance(xs[:, None], ys[None, :]) >= world.robot_radius

    def cell(point):
        i = min(max(int((point[0] - xmin) / resolution), 0), nx - 1)
        j = min(max(int((point[1] - ymin) / resolution), 0), ny - 1)
        return i, j

    source, target = cell(start), cell(goal)
    if not free[source] or not free[target]:
        return False

    visited = np.zeros_like(free)
    visited[source] = True
    queue = deque([source])
    while queue:
        i, j = queue.popleft()
        if (i, j) == target:
            return True
        for ni, nj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if 0 <= ni < nx and 0 <= nj < ny and free[ni, nj] and not visited[ni, nj]:
                visited[ni, nj] = True
                queue.append((ni, nj))
    return False


def sample_scenario(
    level: CurriculumLevel,
    rng: np.random.Generator,
    sim: SimConfig = None,
    scenario_id: str = "",
    seed: int = 0,
) -> Scenario:
    """
    按关卡随机生成障碍物、起点和终点

    Args:
        level: 课程关卡
        rng: 随机数流 (同种子同关卡 -> 同场景)
        sim: 仿真参数 (场地大小、机器人半径)

    Returns:
        Scenario，保证起终点净空 >= R + 0.2 且终点可达
    """
    sim = sim or SimConfig()
    bounds = arena_bounds(sim)
    xmin, ymin, xmax, ymax = bounds
    margin = sim.robot_radius + START_GOAL_MARGIN

    for attempt in range(1, MAX_SAMPLING_ATTEMPTS + 1):
        n_obstacles = int(rng.integers(level.obstacle_count[0], level.obstacle_count[1] + 1))
        distance = rng.uniform(level.distance[0], level.distance[1])

        sx = rng.uniform(xmin + margin, xmax - margin)
        sy = rng.uniform(ymin + margin, ymax - margin)
        heading = rng.uniform(-math.pi, math.pi)
        gx = sx + distance * math.cos(heading)
        gy = sy + distance * math.sin(heading)
        theta = rng.uniform(-math.pi, math.pi)
        obstacles = [_sample_obstacle(rng, bounds) for _ in range(n_obstacles)]

        if not (xmin + margin <= gx <= xmax - margin and ymin + margin <= gy <= ymax - margin):
            continue

        world = World(bounds=bounds, obstacles=tuple(obstacles), robot_radius=sim.robot_radius)
        if world.clearance(sx, sy) < margin or world.clearance(gx, gy) < margin:
            continue
        if not goal_reachable(world, (sx, sy), (gx, gy)):
            continue

        if attempt > 1000:
            logger.warning(f"Level {level.index} scenario needed {attempt} sampling attempts")
        return Scenario(
            world=world,
            start=Pose(sx, sy, theta),
            goal=(gx, gy),
            level=level.index,
            seed=seed,
            scenario_id=scenario_id,
        )

    raise ScenarioSamplingError(
        f"level {level.index} rejected {MAX_SAMPLING_ATTEMPTS} scenarios; the level is over-constrained"
    )


def level_by_index(index: int, config: Optional[CurriculumConfig] = None) -> CurriculumLevel:
    levels = build_levels(config)
    if not 0 <= index < len(levels):
        raise ValueError(f"curriculum level must be in [0, {len(levels) - 1}], got {index}")
    return levels[index]
