"""
Base Agent Class
所有 agent 的基类: 任务执行与日志，以及策略 agent 的回合运行器
"""

import asyncio
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List

import numpy as np

from environment.curriculum import Scenario
from environment.nav_env import EnvParams, NavigationEnv, Observation, Outcome
from tools.metric_calculator import EpisodeRow, TrajectoryStep


class BaseAgent(ABC):
    """所有agent的基类"""

    def __init__(self, name: str, logger: logging.Logger = None):
        self.name = name
        self.logger = logger or logging.getLogger(name)
        self.created_at = datetime.now()
        self.execution_count = 0

    @abstractmethod
    async def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """
        执行agent的主要任务

        Args:
            task: 任务参数字典

        Returns:
            执行结果字典
        """

    def log_execution(self, task: Dict[str, Any], result: Dict[str, Any], duration: float):
        """记录执行日志"""
        self.execution_count += 1
        self.logger.info(
            f"Agent: {self.name} | "
            f"Execution #{self.execution_count} | "
            f"Duration: {duration:.2f}s | "
            f"Task: {task.get('type', 'unknown')} | "
            f"Status: {result.get('status', 'unknown')}"
        )

    async def run(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """执行任务并记录日志，异常转为 error 状态"""
        start_time = datetime.now()
        self.logger.debug(f"Starting task: {task.get('type', 'unknown')}")

        try:
            result = await self.execute(task)
            duration = (datetime.now() - start_time).total_seconds()
            self.log_execution(task, result, duration)
            return result
        except Exception as e:
            self.logger.error(f"Error in {self.name}: {str(e)}", exc_info=True)
            return {
                'status': 'error',
                'error': str(e),
                'error_type': type(e).__name__,
                'agent': self.name
            }


@dataclass
class EpisodeResult:
    """一个回合的结果"""
    scenario_id: str
    seed: int
    noise_sigma: float
    outcome: str
    episode_return: float
    steps: int
    sum_dw: float
    trajectory: List[TrajectoryStep] = field(default_factory=list)

    @property
    def mean_dw(self) -> float:
        samples = self.steps - 1
        return self.sum_dw / samples if samples > 0 else 0.0

    def to_row(self, trajectory_path: str = "") -> EpisodeRow:
        return EpisodeRow(
            scenario_id=self.scenario_id,
            seed=self.seed,
            noise_sigma=self.noise_sigma,
            outcome=self.outcome,
            episode_return=self.episode_return,
            steps=self.steps,
            sum_dw=self.sum_dw,
            trajectory=trajectory_path,
        )


class PolicyAgent(BaseAgent):
    """
    策略 agent: 观测 -> 动作索引

    run_episode 不在 self 上保存回合状态，同一个 agent 可以被多个线程同时使用。
    """

    def __init__(self, name: str, env_params: EnvParams = None, logger: logging.Logger = None):
        super().__init__(name, logger)
        self.env_params = env_params or EnvParams()

    @abstractmethod
    def select_action(self, observation: Observation) -> int:
        """贪心动作"""

    def run_episode(
        self,
        scenario: Scenario,
        noise_sigma: float = 0.0,
        seed: int = 0,
        record_trajectory: bool = False,
    ) -> EpisodeResult:
        """
        在一个场景上运行完整回合

        Args:
            scenario: 初始条件
            noise_sigma: 激光噪声
            seed: 环境随机种子 (噪声)
            record_trajectory: 是否记录逐步轨迹

        Returns:
            EpisodeResult
        """
        env = NavigationEnv(self.env_params, noise_sigma=noise_sigma)
        observation = env.reset(scenario, np.random.default_rng(seed))
        state = env.state

        trajectory: List[TrajectoryStep] = []
        if record_trajectory:
            trajectory.append(TrajectoryStep(
                0, state.pose.x, state.pose.y, state.pose.theta, 0.0, 0.0, 0.0, Outcome.RUNNING.value
            ))

        sum_dw = 0.0
        prev_w = None
        done = False
        while not done:
            action = self.select_action(observation)
            observation, reward, done, outcome = env.step(action)
            # |w_t - w_{t-1}| 从第二步开始累计
            if prev_w is not None:
                sum_dw += abs(state.velocity.w - prev_w)
            prev_w = state.velocity.w
            if record_trajectory:
                trajectory.append(TrajectoryStep(
                    state.step_count, state.pose.x, state.pose.y, state.pose.theta,
                    state.velocity.v, state.velocity.w, reward, outcome.value,
                ))

        return EpisodeResult(
            scenario_id=scenario.scenario_id,
            seed=seed,
            noise_sigma=noise_sigma,
            outcome=state.outcome.value,
            episode_return=state.episode_return,
            steps=state.step_count,
            sum_dw=sum_dw,
            trajectory=trajectory,
        )

    async def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """
        Args:
            task: {
                'type': 'episode',
                'scenario': Scenario,
                'seed': int,
                'noise_sigma': float,
                'record_trajectory': bool
            }
        """
        result = await asyncio.to_thread(
            self.run_episode,
            task['scenario'],
            task.get('noise_sigma', 0.0),
            task.get('seed', 0),
            task.get('record_trajectory', False),
        )
        return {'status': 'success', 'episode': result, 'agent': self.name}


def episode_task(scenario: Scenario, seed: int, noise_sigma: float,
                 record_trajectory: bool = False) -> Dict[str, Any]:
    return {
        'type': 'episode',
        'scenario': scenario,
        'seed': seed,
        'noise_sigma': noise_sigma,
        'record_trajectory': record_trajectory,
    }
