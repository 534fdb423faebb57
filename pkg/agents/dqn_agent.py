"""
DQN 策略 Agent
Greedy / epsilon-greedy action selection, double-DQN targets and the exploration schedule
"""

import logging
from typing import Optional

import numpy as np

from config_loader import TrainConfig
from environment.nav_env import EnvParams, Observation
from memory.replay_buffer import TransitionBatch
from network.checkpoint import load_checkpoint
from network.qnetwork import NetworkParams, forward

from .base_agent import PolicyAgent


def greedy_actions(params: NetworkParams, maps: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """argmax_a Q(s, a); np.argmax 取第一个最大值，即平局时选最小索引"""
    return np.argmax(forward(params, maps, vec), axis=1)


def compute_targets(
    batch: TransitionBatch,
    online: NetworkParams,
    target: NetworkParams,
    gamma: float,
) -> np.ndarray:
    """
    Double DQN 目标

    终止转移: y = r
    非终止: a* = argmax_a Q(s', a; online), y = r + gamma * Q(s', a*; target)

    Returns:
        y (batch,) float64
    """
    best = greedy_actions(online, batch.next_maps, batch.next_vec)
    q_target = forward(target, batch.next_maps, batch.next_vec)
    bootstrap = q_target[np.arange(len(batch)), best].astype(np.float64)
    rewards = np.asarray(batch.rewards, dtype=np.float64)
    return np.where(batch.dones, rewards, rewards + gamma * bootstrap)


def epsilon_schedule(step: int, config: TrainConfig) -> float:
    """从 eps_initial 线性衰减到 eps_final，之后保持不变"""
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    if config.eps_decay_steps <= 0 or step >= config.eps_decay_steps:
        return config.eps_final
    fraction = step / config.eps_decay_steps
    return config.eps_initial + fraction * (config.eps_final - config.eps_initial)


class DQNAgent(PolicyAgent):
    """基于 Q 网络的策略"""

    def __init__(
        self,
        params: NetworkParams,
        env_params: EnvParams = None,
        name: str = "DQN_Agent",
        logger: logging.Logger = None,
    ):
        super().__init__(name, env_params, logger)
        self.params = params

    @classmethod
    def from_checkpoint(cls, path: str, env_params: EnvParams = None, name: Optional[str] = None,
                        logger: logging.Logger = None) -> 'DQNAgent':
        params, _, metadata = load_checkpoint(path)
        agent = cls(params, env_params, name or f"DQN[{path}]", logger)
        agent.logger.info(f"Loaded policy from {path} (step {metadata.get('step', 0)})")
        return agent

    def q_values(self, observation: Observation) -> np.ndarray:
        maps = observation.map_array(self.params.dtype)[None]
        vec = observation.vector(self.params.dtype)[None]
        return forward(self.params, maps, vec)[0]

    def select_action(self, observation: Observation) -> int:
        return int(np.argmax(self.q_values(observation)))

    def act(self, observation: Observation, epsilon: float, rng: np.random.Generator) -> int:
        """epsilon-greedy; 每步固定消耗一次 rng.random()，保持随机流对齐"""
        if rng.random() < epsilon:
            return int(rng.integers(self.params.num_actions))
        return self.select_action(observation)
