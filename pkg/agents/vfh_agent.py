"""
VFH 基线 Agent
Classic vector-field-histogram steering on the same scan + local goal interface as the DQN policy
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from config_loader import VFHConfig
from environment.nav_env import ACTION_TABLE, ActionTable, EnvParams, Observation
from tools.simulator import LaserScan

from .base_agent import PolicyAgent


@dataclass(frozen=True, eq=False)
class PolarHistogram:
    """扇区障碍物密度 (扇区 0 从 angle_min 开始)"""
    densities: np.ndarray
    angle_min: float
    sector_width: float

    @property
    def num_sectors(self) -> int:
        return int(self.densities.shape[0])

    def sector_edges(self, start: int, end: int) -> Tuple[float, float]:
        return self.angle_min + start * self.sector_width, self.angle_min + (end + 1) * self.sector_width


def build_histogram(scan: LaserScan, config: VFHConfig = None) -> PolarHistogram:
    """
    构建极坐标直方图

    每条命中光束 (range < max_range) 向所在扇区贡献 c * (max_range - range)^2。
    恰好落在扇区边界上的光束平分给两侧扇区，保证左右镜像对称。
    """
    config = config or VFHConfig()
    n = config.num_sectors
    ranges = np.asarray(scan.ranges, dtype=np.float64)
    hits = ranges < scan.max_range
    weights = np.where(hits, config.density_coeff * (scan.max_range - ranges) ** 2, 0.0)

    # 光束 i 在扇区坐标中的位置
    position = np.arange(scan.num_beams) * n / (scan.num_beams - 1)
    nearest = np.round(position)
    on_edge = (np.abs(position - nearest) < 1e-9) & (nearest > 0) & (nearest < n)
    sector = np.minimum(np.floor(position + 1e-9).astype(np.int64), n - 1)

    densities = np.zeros(n, dtype=np.float64)
    inner = ~on_edge
    np.add.at(densities, sector[inner], weights[inner])
    edge_right = nearest[on_edge].astype(np.int64)
    np.add.at(densities, edge_right, 0.5 * weights[on_edge])
    np.add.at(densities, edge_right - 1, 0.5 * weights[on_edge])

    return PolarHistogram(densities, scan.angle_min, scan.fov / n)


def free_sectors(hist: PolarHistogram, threshold: float) -> np.ndarray:
    return hist.densities <= threshold


def find_valleys(free: np.ndarray) -> List[Tuple[int, int]]:
    """连续空闲扇区的最大区间 [start, end]"""
    valleys = []
    start = None
    for i, is_free in enumerate(free):
        if is_free and start is None:
            start = i
        elif not is_free and start is not None:
            valleys.append((start, i - 1))
            start = None
    if start is not None:
        valleys.append((start, len(free) - 1))
    return valleys


def valley_heading(hist: PolarHistogram, valley: Tuple[int, int], goal_bearing: float,
                   config: VFHConfig) -> float:
    """宽谷: 目标方向夹在收缩了 margin 的区间内; 窄谷: 谷中心"""
    start, end = valley
    lo, hi = hist.sector_edges(start, end)
    if end - start + 1 > config.wide_valley_sectors:
        margin = config.margin_sectors * hist.sector_width
        return min(max(goal_bearing, lo + margin), hi - margin)
    return 0.5 * (lo + hi)


def _nearest(values, target: float, prefer) -> float:
    best = None
    for value in values:
        gap = abs(value - target)
        if best is None or gap < best[0] - 1e-12 or (abs(gap - best[0]) <= 1e-12 and prefer(value, best[1])):
            best = (gap, value)
    return best[1]


def vfh_steer(
    hist: PolarHistogram,
    goal: Tuple[float, float],
    config: VFHConfig = None,
    action_table: ActionTable = ACTION_TABLE,
) -> int:
    """
    直方图 + 机器人坐标系目标 -> 动作索引

    Args:
        hist: 极坐标直方图
        goal: 局部目标 (米)
        config: VFH 参数
        action_table: 动作表

    Returns:
        动作索引; 全部扇区被阻挡时原地左转 (v=0, w=+0.9)
    """
    config = config or VFHConfig()
    valleys = find_valleys(free_sectors(hist, config.threshold))
    if not valleys:
        return action_table.index_of(0.0, action_table.w_max)

    gx, gy = float(goal[0]), float(goal[1])
    goal_bearing = math.atan2(gy, gx)
    goal_distance = math.hypot(gx, gy)
    goal_side = 1.0 if goal_bearing >= 0 else -1.0

    best = None
    for valley in valleys:
        heading = valley_heading(hist, valley, goal_bearing, config)
        cost = abs(heading - goal_bearing)
        if best is None or cost < best[0] - 1e-12:
            best = (cost, heading, valley)
        elif abs(cost - best[0]) <= 1e-12 and heading * goal_side > best[1] * goal_side:
            best = (cost, heading, valley)
    _, heading, (start, end) = best

    w_required = heading / config.steer_horizon
    w = _nearest(action_table.w_values, w_required, prefer=lambda a, b: abs(a) < abs(b))

    width_scale = min(1.0, (end - start + 1) / config.wide_valley_sectors)
    distance_scale = min(1.0, goal_distance / config.slowdown_distance)
    v_required = action_table.v_max * width_scale * distance_scale
    forward = [v for v in action_table.v_values if v > 0]
    v = _nearest(forward, v_required, prefer=lambda a, b: a < b)

    return action_table.index_of(v, w)


class VFHAgent(PolicyAgent):
    """经典 VFH 策略 (无 VFH+ 前瞻)"""

    def __init__(self, config: VFHConfig = None, env_params: EnvParams = None,
                 name: str = "VFH_Agent", logger: logging.Logger = None):
        super().__init__(name, env_params, logger)
        self.config = config or VFHConfig()

    def select_action(self, observation: Observation) -> int:
        if observation.scan is None:
            raise ValueError("VFH needs the raw laser scan in the observation")
        hist = build_histogram(observation.scan, self.config)
        return vfh_steer(hist, (observation.goal[0], observation.goal[1]), self.config)
