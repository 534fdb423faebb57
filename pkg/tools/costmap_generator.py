"""
代价地图生成工具
Egocentric layered costmap (obstacle / inflation / footprint) from a laser scan,
temporal map stack and portable-greymap export
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Tuple

import numpy as np

from config_loader import CostmapParams
from tools.simulator import LaserScan


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Costmap:
    """机器人为中心、朝向向上的 60x60 灰度代价地图"""
    grid: np.ndarray
    resolution: float = 0.1

    @property
    def size(self) -> int:
        return int(self.grid.shape[0])

    @property
    def center(self) -> int:
        return self.size // 2

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        """机器人坐标 (x 前, y 左) -> (行, 列)"""
        return _cell_index(np.asarray(x), np.asarray(y), self.size, self.resolution)

    def equals(self, other: 'Costmap') -> bool:
        return np.array_equal(self.grid, other.grid)


@dataclass(frozen=True, eq=False)
class MapStack:
    """时间序列地图栈，从旧到新排列"""
    frames: Tuple[Costmap, ...]

    @classmethod
    def reset(cls, first: Costmap, num_frames: int = 3) -> 'MapStack':
        return cls(frames=tuple([first] * num_frames))

    def as_array(self, dtype=np.float32) -> np.ndarray:
        return np.stack([frame.grid for frame in self.frames]).astype(dtype, copy=False)

    def __len__(self) -> int:
        return len(self.frames)


def push_frame(stack: MapStack, costmap: Costmap) -> MapStack:
    """整体左移一帧，最新帧放在末尾"""
    return MapStack(frames=stack.frames[1:] + (costmap,))


def _cell_index(x: np.ndarray, y: np.ndarray, size: int, resolution: float):
    center = size // 2
    rows = center - np.floor(x / resolution + 0.5).astype(np.int64)
    cols = center - np.floor(y / resolution + 0.5).astype(np.int64)
    return rows, cols


@lru_cache(maxsize=16)
def _footprint_layer(size: int, resolution: float, robot_radius: float, value: float) -> np.ndarray:
    center = size // 2
    idx = np.arange(size)
    xs = (center - idx)[:, None] * resolution
    ys = (center - idx)[None, :] * resolution
    layer = np.where(np.hypot(xs, ys) <= robot_radius + 1e-9, value, 0.0)
    layer.setflags(write=False)
    return layer


@lru_cache(maxsize=16)
def _inflation_kernel(resolution: float, inflation_radius: float) -> Tuple[Tuple[int, int, float], ...]:
    reach = int(np.floor(inflation_radius / resolution + 1e-9))
    kernel = []
    for di in range(-reach, reach + 1):
        for dj in range(-reach, reach + 1):
            d = resolution * float(np.hypot(di, dj))
            if d < inflation_radius:
                kernel.append((di, dj, 1.0 - d / inflation_radius))
    return tuple(kernel)


def footprint_costmap(params: CostmapParams, robot_radius: float) -> Costmap:
    """只含机器人轮廓的代价地图"""
    layer = _footprint_layer(params.size_cells, params.resolution, robot_radius, params.footprint_value)
    return Costmap(grid=layer.copy(), resolution=params.resolution)


def scan_to_costmap(scan: LaserScan, params: CostmapParams, robot_radius: float = 0.3) -> Costmap:
    """
    激光扫描 -> 分层代价地图

    Args:
        scan: 激光扫描 (range == max_range 视为未命中)
        params: 代价地图参数
        robot_radius: 机器人半径，用于绘制轮廓层

    Returns:
        Costmap，所有单元格取值在 [0, 1]
    """
    size = params.size_cells
    hits = scan.hits()
    ranges = scan.ranges[hits]
    angles = scan.angles[hits]
    rows, cols = _cell_index(ranges * np.cos(angles), ranges * np.sin(angles), size, params.resolution)
    inside = (rows >= 0) & (rows < size) & (cols >= 0) & (cols < size)

    # 障碍物层
    occupied = np.zeros((size, size), dtype=np.float64)
    occupied[rows[inside], cols[inside]] = 1.0

    # 膨胀层
    grid = occupied * params.occupied_value
    if params.inflation_radius > 0.0 and inside.any():
        reach = int(np.floor(params.inflation_radius / params.resolution + 1e-9))
        padded = np.pad(occupied, reach)
        for di, dj, weight in _inflation_kernel(params.resolution, params.inflation_radius):
            shifted = padded[reach + di:reach + di + size, reach + dj:reach + dj + size]
            np.maximum(grid, shifted * (weight * params.occupied_value), out=grid)

    # 轮廓层
    footprint = _footprint_layer(size, params.resolution, robot_radius, params.footprint_value)
    np.maximum(grid, footprint, out=grid)

    return Costmap(grid=np.clip(grid, 0.0, 1.0), resolution=params.resolution)


def costmap_to_pgm(costmap: Costmap) -> bytes:
    """8 位 PGM (P5) 编码，像素 = round(value * 255)"""
    pixels = np.round(np.clip(costmap.grid, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode('ascii')
    return header + pixels.tobytes()


def dump_costmap(costmap: Costmap, path: str) -> Path:
    """保存代价地图为 PGM 文件"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(costmap_to_pgm(costmap))
    logger.info(f"Costmap written to {out}")
    return out
