"""
导航环境模块
MDP step/reset, reward, action table and the training curriculum
"""

from .nav_env import ACTION_TABLE, EnvParams, NavigationEnv, Observation, Outcome
from .curriculum import Scenario, curriculum_schedule, sample_scenario

__all__ = [
    'ACTION_TABLE', 'EnvParams', 'NavigationEnv', 'Observation', 'Outcome',
    'Scenario', 'curriculum_schedule', 'sample_scenario',
]
