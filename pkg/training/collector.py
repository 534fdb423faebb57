"""
并行经验收集
Episode worker threads acting on parameter snapshots, feeding one trainer through a bounded queue
"""

import logging
import queue
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from config_loader import AppConfig
from environment.curriculum import CurriculumLevel, sample_scenario
from environment.nav_env import EnvParams, NavigationEnv
from memory.replay_buffer import Transition
from network.qnetwork import NetworkParams
from agents.dqn_agent import DQNAgent


@dataclass
class EpisodeSummary:
    """一个收集回合结束时发给训练器的汇总"""
    worker_id: int
    level: int
    episode_return: float
    outcome: str
    steps: int
    sum_dw: float


class ParameterBroadcast:
    """在线网络参数快照; 训练器发布，收集线程读取"""

    def __init__(self, params: NetworkParams):
        self._lock = threading.Lock()
        self._params = params.copy()
        self._version = 0

    def publish(self, params: NetworkParams):
        snapshot = params.copy()
        with self._lock:
            self._params = snapshot
            self._version += 1

    def snapshot(self) -> Tuple[int, NetworkParams]:
        # 快照发布后不再修改，读取方可以直接持有引用
        with self._lock:
            return self._version, self._params


class CollectionWorker(threading.Thread):
    """收集线程: 按当前课程关卡和 epsilon 跑回合，把转移放进队列"""

    def __init__(
        self,
        worker_id: int,
        config: AppConfig,
        env_params: EnvParams,
        broadcast: ParameterBroadcast,
        out_queue: "queue.Queue",
        stop_event: threading.Event,
        level_fn: Callable[[], CurriculumLevel],
        epsilon_fn: Callable[[], float],
        seed_sequence: np.random.SeedSequence,
        logger: Optional[logging.Logger] = None,
    ):
        super().__init__(name=f"collector-{worker_id}", daemon=True)
        self.worker_id = worker_id
        self.config = config
        self.env_params = env_params
        self.broadcast = broadcast
        self.out_queue = out_queue
        self.stop_event = stop_event
        self.level_fn = level_fn
        self.epsilon_fn = epsilon_fn
        env_seq, explore_seq = seed_sequence.spawn(2)
        self.env_rng = np.random.default_rng(env_seq)
        self.explore_rng = np.random.default_rng(explore_seq)
        self.logger = logger or logging.getLogger(__name__)
        self.error: Optional[BaseException] = None
        self.episodes = 0

    def _put(self, item) -> bool:
        while not self.stop_event.is_set():
            try:
                self.out_queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def run(self):
        try:
            while not self.stop_event.is_set():
                self.run_one_episode()
        except Exception as e:
            self.error = e
            self.logger.error(f"Collector {self.worker_id} failed: {str(e)}", exc_info=True)
            self.stop_event.set()

    def run_one_episode(self):
        level = self.level_fn()
        scenario = sample_scenario(
            level, self.env_rng, self.config.sim,
            scenario_id=f"w{self.worker_id}_ep{self.episodes}",
        )
        env = NavigationEnv(self.env_params, noise_sigma=self.config.train.noise_sigma)
        observation = env.reset(scenario, self.env_rng)
        _, params = self.broadcast.snapshot()
        agent = DQNAgent(params, self.env_params, logger=self.logger)

        sum_dw = 0.0
        prev_w = None
        done = False
        while not done and not self.stop_event.is_set():
            action = agent.act(observation, self.epsilon_fn(), self.explore_rng)
            next_observation, reward, done, outcome = env.step(action)
            if prev_w is not None:
                sum_dw += abs(env.state.velocity.w - prev_w)
            prev_w = env.state.velocity.w
            if not self._put(Transition(observation, action, reward, next_observation, done)):
                return
            observation = next_observation

        self.episodes += 1
        if done:
            self._put(EpisodeSummary(
                worker_id=self.worker_id,
                level=level.index,
                episode_return=env.state.episode_return,
                outcome=env.state.outcome.value,
                steps=env.state.step_count,
                sum_dw=sum_dw,
            ))
