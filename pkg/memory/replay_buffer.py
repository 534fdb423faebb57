"""
优先经验回放
Sum-tree keyed by priority, proportional stratified sampling and importance-sampling weights
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config_loader import PERConfig
from environment.nav_env import Observation


logger = logging.getLogger(__name__)


class ReplayBufferError(RuntimeError):
    """采样不足或索引越界"""


class SumTree:
    """完全二叉树: 叶子存优先级，内部节点存子树和 (1 为根)"""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        tree_capacity = 1
        while tree_capacity < capacity:
            tree_capacity *= 2
        self.tree_capacity = tree_capacity
        self.depth = tree_capacity.bit_length() - 1
        self.nodes = np.zeros(2 * tree_capacity, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    @property
    def leaves(self) -> np.ndarray:
        return self.nodes[self.tree_capacity:self.tree_capacity + self.capacity]

    def get(self, index: int) -> float:
        return float(self.nodes[self.tree_capacity + index])

    def update(self, indices, priorities):
        """设置叶子优先级并逐层重算祖先"""
        indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        priorities = np.atleast_1d(np.asarray(priorities, dtype=np.float64))
        nodes = indices + self.tree_capacity
        # 重复索引时保留最后一次写入
        self.nodes[nodes] = priorities
        parents = np.unique(nodes // 2)
        while parents.size and parents[0] >= 1:
            self.nodes[parents] = self.nodes[2 * parents] + self.nodes[2 * parents + 1]
            if parents[0] == 1:
                break
            parents = np.unique(parents // 2)

    def find_prefixsum_idx(self, values) -> np.ndarray:
        """前缀和下降: 返回满足 sum(leaves[:i]) <= value < sum(leaves[:i+1]) 的叶子 i"""
        values = np.array(values, dtype=np.float64, ndmin=1)
        idx = np.ones(values.shape, dtype=np.int64)
        for _ in range(self.depth):
            left = 2 * idx
            left_sum = self.nodes[left]
            go_left = left_sum > values
            values = np.where(go_left, values, values - left_sum)
            idx = np.where(go_left, left, left + 1)
        return idx - self.tree_capacity

    def rebuilt_total(self) -> float:
        """从叶子重新求和 (用于一致性检查)"""
        level = self.nodes[self.tree_capacity:].copy()
        while level.size > 1:
            level = level[0::2] + level[1::2]
        return float(level[0])

    def check_consistency(self) -> bool:
        internal = np.arange(1, self.tree_capacity)
        return bool(np.all(self.nodes[internal] == self.nodes[2 * internal] + self.nodes[2 * internal + 1]))


@dataclass
class Transition:
    """(s, a, r, s', done)"""
    observation: Observation
    action: int
    reward: float
    next_observation: Observation
    done: bool


@dataclass
class TransitionBatch:
    maps: np.ndarray
    vec: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_maps: np.ndarray
    next_vec: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])


def _quantize(maps: np.ndarray) -> np.ndarray:
    return np.round(np.clip(maps, 0.0, 1.0) * 255.0).astype(np.uint8)


class PrioritizedReplayBuffer:
    """
    比例优先级回放缓冲区 (环形写入)

    地图栈以 8 位灰度保存；s' 的前两帧就是 s 的后两帧，只额外保存最新一帧。
    """

    def __init__(self, capacity: int, config: PERConfig = None):
        self.capacity = capacity
        self.config = config or PERConfig()
        self.tree = SumTree(capacity)
        self.max_priority = 1.0
        self.size = 0
        self.head = 0
        self._maps: Optional[np.ndarray] = None
        self._next_frame: Optional[np.ndarray] = None
        self._vec = np.zeros((capacity, 4), dtype=np.float32)
        self._next_vec = np.zeros((capacity, 4), dtype=np.float32)
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity, dtype=np.float64)
        self._dones = np.zeros(capacity, dtype=bool)

    def __len__(self) -> int:
        return self.size

    def _allocate(self, map_shape: Tuple[int, ...]):
        frames, height, width = map_shape
        self._maps = np.zeros((self.capacity, frames, height, width), dtype=np.uint8)
        self._next_frame = np.zeros((self.capacity, height, width), dtype=np.uint8)
        logger.info(
            f"Replay storage allocated: capacity={self.capacity}, "
            f"{(self._maps.nbytes + self._next_frame.nbytes) / 2 ** 30:.2f} GiB of map frames"
        )

    def push(self, transition: Transition):
        """以当前最大优先级写入，保证新样本至少被采样一次"""
        maps = _quantize(transition.observation.map_array(np.float64))
        next_maps = _quantize(transition.next_observation.map_array(np.float64))
        if not np.array_equal(maps[1:], next_maps[:-1]):
            raise ReplayBufferError("next observation map stack is not a one-frame shift of the observation stack")
        if self._maps is None:
            self._allocate(maps.shape)

        i = self.head
        self._maps[i] = maps
        self._next_frame[i] = next_maps[-1]
        self._vec[i] = transition.observation.vector()
        self._next_vec[i] = transition.next_observation.vector()
        self._actions[i] = transition.action
        self._rewards[i] = transition.reward
        self._dones[i] = transition.done
        self.tree.update(i, self.max_priority)

        self.head = (self.head + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def gather(self, indices: np.ndarray) -> TransitionBatch:
        maps = self._maps[indices]
        next_maps = np.concatenate([maps[:, 1:], self._next_frame[indices][:, None]], axis=1)
        scale = np.float32(1.0 / 255.0)
        return TransitionBatch(
            maps=maps.astype(np.float32) * scale,
            vec=self._vec[indices].copy(),
            actions=self._actions[indices].copy(),
            rewards=self._rewards[indices].copy(),
            next_maps=next_maps.astype(np.float32) * scale,
            next_vec=self._next_vec[indices].copy(),
            dones=self._dones[indices].copy(),
        )

    def sample(self, batch_size: int, beta: float, rng: np.random.Generator):
        """
        分层比例采样

        Args:
            batch_size: 批大小
            beta: 重要性采样指数
            rng: 随机数流

        Returns:
            (TransitionBatch, leaf indices, is_weights)，权重按批内最大值归一化
        """
        if self.size < batch_size:
            raise ReplayBufferError(f"cannot sample {batch_size} transitions from a buffer holding {self.size}")
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {beta}")

        indices = self.sample_indices(batch_size, rng)
        total = self.tree.total
        probs = self.tree.nodes[self.tree.tree_capacity + indices] / total
        weights = (self.size * probs) ** (-beta)
        weights = weights / weights.max()
        return self.gather(indices), indices, weights

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        segment = self.tree.total / batch_size
        values = (np.arange(batch_size) + rng.random(batch_size)) * segment
        indices = self.tree.find_prefixsum_idx(values)
        return np.minimum(indices, self.size - 1)

    def update_priorities(self, indices, td_errors):
        """priority = (|td| + floor) ** alpha"""
        indices = np.asarray(indices, dtype=np.int64)
        td_errors = np.asarray(td_errors, dtype=np.float64)
        if indices.shape != td_errors.shape:
            raise ValueError("indices and td_errors must have the same shape")
        if indices.size and (indices.min() < 0 or indices.max() >= self.size):
            raise ReplayBufferError(f"leaf index out of range [0, {self.size})")

        priorities = (np.abs(td_errors) + self.config.priority_floor) ** self.config.alpha
        self.tree.update(indices, priorities)
        if priorities.size:
            self.max_priority = max(self.max_priority, float(priorities.max()))

    def beta(self, progress: float) -> float:
        """beta 从 beta_start 线性退火到 beta_end"""
        progress = min(max(progress, 0.0), 1.0)
        return self.config.beta_start + (self.config.beta_end - self.config.beta_start) * progress
