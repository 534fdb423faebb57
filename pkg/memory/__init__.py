"""
记忆模块
提供优先经验回放、训练日志和运行清单
"""

from .replay_buffer import PrioritizedReplayBuffer, SumTree, Transition
from .train_log import TrainLog
from .run_manifest import RunManifest

__all__ = ['PrioritizedReplayBuffer', 'SumTree', 'Transition', 'TrainLog', 'RunManifest']
