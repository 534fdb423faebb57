"""
导航策略 Agent
Policies (DQN, VFH) behind one episode-runner interface, plus the evaluation coordinator
"""

from .base_agent import BaseAgent, EpisodeResult, PolicyAgent
from .coordinator_agent import EvaluationCoordinator, PolicySpec
from .dqn_agent import DQNAgent, compute_targets, epsilon_schedule
from .vfh_agent import VFHAgent, build_histogram, vfh_steer

__all__ = [
    'BaseAgent', 'EpisodeResult', 'PolicyAgent',
    'EvaluationCoordinator', 'PolicySpec',
    'DQNAgent', 'compute_targets', 'epsilon_schedule',
    'VFHAgent', 'build_histogram', 'vfh_steer',
]
