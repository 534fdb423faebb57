"""
仿真工具 - 二维差速机器人世界模型
Obstacle geometry, exact-arc unicycle kinematics, 2D laser raycasting and collision tests
"""

import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from config_loader import SimConfig


def wrap_angle(theta: float) -> float:
    """将角度归一化到 (-pi, pi]"""
    wrapped = theta - 2.0 * math.pi * math.ceil((theta - math.pi) / (2.0 * math.pi))
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Pose:
    """机器人位姿 (米, 米, 弧度)"""
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'theta', wrap_angle(float(self.theta)))

    def distance_to(self, point: Tuple[float, float]) -> float:
        return math.hypot(self.x - point[0], self.y - point[1])

    def to_robot_frame(self, point: Tuple[float, float]) -> Tuple[float, float]:
        """世界坐标点 -> 机器人坐标系 (+x 向前, +y 向左)"""
        dx = point[0] - self.x
        dy = point[1] - self.y
        c, s = math.cos(self.theta), math.sin(self.theta)
        return c * dx + s * dy, -s * dx + c * dy


@dataclass(frozen=True)
class Twist:
    """速度指令 v (m/s), w (rad/s)，不允许后退"""
    v: float
    w: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"backward motion is not allowed (v={self.v})")


@dataclass(frozen=True)
class CircleObstacle:
    """圆形障碍物"""
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    def signed_distance(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return np.hypot(xs - self.cx, ys - self.cy) - self.radius

    def ray_distance(self, ox: float, oy: float, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        fx = ox - self.cx
        fy = oy - self.cy
        c = fx * fx + fy * fy - self.radius * self.radius
        if c <= 0.0:
            return np.zeros_like(dx)
        b = fx * dx + fy * dy
        disc = b * b - c
        t = np.full_like(dx, np.inf)
        hit = disc >= 0.0
        root = -b[hit] - np.sqrt(disc[hit])
        t[hit] = np.where(root >= 0.0, root, np.inf)
        return t

    def intersects_rect(self, xmin: float, ymin: float, xmax: float, ymax: float) -> bool:
        nx = min(max(self.cx, xmin), xmax)
        ny = min(max(self.cy, ymin), ymax)
        return math.hypot(self.cx - nx, self.cy - ny) <= self.radius


@dataclass(frozen=True)
class RectObstacle:
    """轴对齐矩形障碍物"""
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"rectangle min corner must be below max corner: {self}")

    def signed_distance(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        ex = np.maximum(np.maximum(self.xmin - xs, xs - self.xmax), 0.0)
        ey = np.maximum(np.maximum(self.ymin - ys, ys - self.ymax), 0.0)
        outside = np.hypot(ex, ey)
        inside = np.minimum(
            np.minimum(xs - self.xmin, self.xmax - xs),
            np.minimum(ys - self.ymin, self.ymax - ys),
        )
        return np.where((ex > 0.0) | (ey > 0.0), outside, -inside)

    def ray_distance(self, ox: float, oy: float, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        if self.xmin <= ox <= self.xmax and self.ymin <= oy <= self.ymax:
            return np.zeros_like(dx)
        t_lo_x, t_hi_x = _slab(ox, dx, self.xmin, self.xmax)
        t_lo_y, t_hi_y = _slab(oy, dy, self.ymin, self.ymax)
        t_lo = np.maximum(t_lo_x, t_lo_y)
        t_hi = np.minimum(t_hi_x, t_hi_y)
        hit = (t_hi >= t_lo) & (t_lo >= 0.0)
        return np.where(hit, t_lo, np.inf)

    def intersects_rect(self, xmin: float, ymin: float, xmax: float, ymax: float) -> bool:
        return self.xmin <= xmax and self.xmax >= xmin and self.ymin <= ymax and self.ymax >= ymin


Obstacle = Union[CircleObstacle, RectObstacle]


def _slab(origin: float, direction: np.ndarray, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """射线与一个坐标轴平板的进入/离开参数"""
    parallel = np.abs(direction) < 1e-15
    safe = np.where(parallel, 1.0, direction)
    t1 = (lo - origin) / safe
    t2 = (hi - origin) / safe
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    inside = lo <= origin <= hi
    t_lo = np.where(parallel, -np.inf if inside else np.inf, t_lo)
    t_hi = np.where(parallel, np.inf if inside else -np.inf, t_hi)
    return t_lo, t_hi


@dataclass(frozen=True)
class World:
    """场地边界 + 障碍物 + 机器人半径"""
    bounds: Tuple[float, float, float, float]
    obstacles: Tuple[Obstacle, ...] = field(default_factory=tuple)
    robot_radius: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, 'bounds', tuple(float(b) for b in self.bounds))
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"invalid world bounds {self.bounds}")
        if self.robot_radius <= 0:
            raise ValueError(f"robot radius must be positive, got {self.robot_radius}")
        for obstacle in self.obstacles:
            if not obstacle.intersects_rect(*self.bounds):
                raise ValueError(f"obstacle {obstacle} lies outside the world bounds")

    def clearance(self, xs, ys) -> np.ndarray:
        """点到最近障碍物表面或边界的距离 (在障碍物内部为负)"""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        xmin, ymin, xmax, ymax = self.bounds
        dist = np.minimum(np.minimum(xs - xmin, xmax - xs), np.minimum(ys - ymin, ymax - ys))
        for obstacle in self.obstacles:
            dist = np.minimum(dist, obstacle.signed_distance(xs, ys))
        return dist


@dataclass(frozen=True, eq=False)
class LaserScan:
    """二维激光扫描 (机器人坐标系)"""
    ranges: np.ndarray
    angle_min: float
    angle_max: float
    max_range: float

    @property
    def num_beams(self) -> int:
        return int(self.ranges.shape[0])

    @property
    def angle_increment(self) -> float:
        return (self.angle_max - self.angle_min) / (self.num_beams - 1)

    @property
    def fov(self) -> float:
        return self.angle_max - self.angle_min

    @property
    def angles(self) -> np.ndarray:
        return self.angle_min + np.arange(self.num_beams) * self.angle_increment

    def hits(self) -> np.ndarray:
        """有效命中的布尔掩码 (range < max_range)"""
        return self.ranges < self.max_range


def scan_angles(config: SimConfig) -> Tuple[float, float, np.ndarray]:
    half = math.radians(config.fov_deg) / 2.0
    offsets = np.linspace(-half, half, config.num_beams)
    return -half, half, offsets


def step_kinematics(pose: Pose, twist: Twist, dt: float) -> Pose:
    """
    差速机器人精确圆弧积分

    Args:
        pose: 当前位姿
        twist: 速度指令
        dt: 控制周期 (秒)

    Returns:
        新位姿
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v, w = twist.v, twist.w
    if abs(w) < 1e-9:
        return Pose(
            pose.x + v * dt * math.cos(pose.theta),
            pose.y + v * dt * math.sin(pose.theta),
            pose.theta,
        )
    theta_next = pose.theta + w * dt
    radius = v / w
    return Pose(
        pose.x + radius * (math.sin(theta_next) - math.sin(pose.theta)),
        pose.y + radius * (math.cos(pose.theta) - math.cos(theta_next)),
        theta_next,
    )


def ray_distances(world: World, x: float, y: float, angles: np.ndarray) -> np.ndarray:
    """沿给定世界角度发射射线，返回到最近表面的距离 (未截断)"""
    angles = np.asarray(angles, dtype=np.float64)
    dx = np.cos(angles)
    dy = np.sin(angles)

    xmin, ymin, xmax, ymax = world.bounds
    with np.errstate(divide='ignore'):
        tx = np.where(dx > 0, (xmax - x) / dx, np.where(dx < 0, (xmin - x) / dx, np.inf))
        ty = np.where(dy > 0, (ymax - y) / dy, np.where(dy < 0, (ymin - y) / dy, np.inf))
    t = np.maximum(np.minimum(tx, ty), 0.0)

    for obstacle in world.obstacles:
        t = np.minimum(t, obstacle.ray_distance(x, y, dx, dy))
    return t


def raycast(
    world: World,
    pose: Pose,
    config: SimConfig,
    noise_sigma: float = 0.0,
    rng: np.random.Generator = None,
) -> LaserScan:
    """
    模拟 180 度激光扫描，叠加高斯噪声

    Args:
        world: 世界
        pose: 机器人位姿
        config: 激光参数 (光束数、视场、最大量程)
        noise_sigma: 每束噪声标准差 (米)
        rng: 确定性随机数流

    Returns:
        LaserScan
    """
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    angle_min, angle_max, offsets = scan_angles(config)
    ranges = np.minimum(ray_distances(world, pose.x, pose.y, pose.theta + offsets), config.max_range)

    if noise_sigma > 0.0:
        if rng is None:
            raise ValueError("a seeded rng is required when noise_sigma > 0")
        ranges = np.clip(ranges + rng.normal(0.0, noise_sigma, ranges.shape), 0.0, config.max_range)

    return LaserScan(ranges=ranges, angle_min=angle_min, angle_max=angle_max, max_range=config.max_range)


def check_collision(world: World, pose: Pose) -> bool:
    """机器人中心到任一障碍物表面或边界距离小于 R 即为碰撞"""
    return bool(world.clearance(pose.x, pose.y) < world.robot_radius)
