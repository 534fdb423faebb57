"""
训练器
Double-DQN training loop with prioritized replay, curriculum progression, checkpoints and run logs
"""

import logging
import queue
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from agents.base_agent import PolicyAgent
from agents.dqn_agent import DQNAgent, compute_targets, epsilon_schedule
from config_loader import AppConfig, config_to_dict
from environment.curriculum import CurriculumLevel, level_for_progress, sample_scenario
from environment.nav_env import EnvParams, NavigationEnv
from logger_config import MetricsCollector
from memory.replay_buffer import PrioritizedReplayBuffer, Transition
from memory.run_manifest import RunManifest
from memory.train_log import EpisodeRecord, TrainLog, UpdateRecord
from network.adam import AdamState, adam_update
from network.checkpoint import save_checkpoint
from network.qnetwork import NetworkParams, NonFiniteLossError, loss_and_gradients
from tools.metric_calculator import append_table_row, compute_metrics
from tools.scenario_io import load_suite
from training.collector import CollectionWorker, EpisodeSummary, ParameterBroadcast


EVAL_CURVE_COLUMNS = ['env_step', 'level', 'E_r', 'success_rate', 'reach_step', 'mean_dw']

# 并行模式下每隔多少次梯度更新向收集线程发布一次参数
PARAM_PUBLISH_INTERVAL = 50
QUEUE_SIZE = 1024


@dataclass
class TrainResult:
    checkpoint: Path
    log: TrainLog
    env_steps: int
    updates: int
    status: str = 'completed'


class Trainer:
    """Double DQN 训练器 (单线程确定性模式 / 并行收集模式)"""

    def __init__(self, config: AppConfig, logger: logging.Logger = None, metrics: MetricsCollector = None):
        self.config = config
        self.train_config = config.train
        self.logger = logger or logging.getLogger(__name__)
        self.metrics = metrics or MetricsCollector()

        init_seq, env_seq, explore_seq, replay_seq = np.random.SeedSequence(self.train_config.seed).spawn(4)
        self.init_rng = np.random.default_rng(init_seq)
        self.env_rng = np.random.default_rng(env_seq)
        self.explore_rng = np.random.default_rng(explore_seq)
        self.replay_rng = np.random.default_rng(replay_seq)
        self._collector_seq = env_seq.spawn(1)[0]

        self.online = NetworkParams.initialize(self.init_rng)
        self.target = self.online.copy()
        self.adam = AdamState.zeros_like(self.online)
        self.buffer = PrioritizedReplayBuffer(self.train_config.buffer_size, config.per)
        self.env_params = EnvParams(
            sim=config.sim,
            costmap=config.costmap,
            reward=config.reward,
            episode_length=self.train_config.episode_length,
        )
        self.agent = DQNAgent(self.online, self.env_params, logger=self.logger)

        self.run_dir = Path(self.train_config.run_dir)
        self.log = TrainLog(str(self.run_dir))
        self.manifest: Optional[RunManifest] = None
        self.env_step = 0
        self.updates = 0
        self.episode = 0
        self.current_level: Optional[int] = None
        self.last_checkpoint: Optional[Path] = None
        self.eval_suite = load_suite(self.train_config.eval_suite) \
            if self.train_config.eval_interval > 0 and self.train_config.eval_suite else None

    # ------------------------------------------------------------------
    # schedules

    @property
    def progress(self) -> float:
        return self.env_step / self.train_config.total_steps

    def epsilon(self) -> float:
        return epsilon_schedule(self.env_step, self.train_config)

    def level(self) -> CurriculumLevel:
        level = level_for_progress(self.progress, self.config.curriculum)
        if level.index != self.current_level:
            if self.current_level is not None:
                self.logger.info(f"Curriculum level {self.current_level} -> {level.index} at env step {self.env_step}")
            self.current_level = level.index
        return level

    @property
    def warmup_size(self) -> int:
        return max(self.train_config.warmup, self.train_config.minibatch)

    # ------------------------------------------------------------------
    # learning

    def learn(self) -> Optional[UpdateRecord]:
        """
        一次梯度更新: 采样、double DQN 目标、加权损失、Adam、更新优先级

        Returns:
            UpdateRecord，预热阶段返回 None
        """
        if len(self.buffer) < self.warmup_size:
            return None

        beta = self.buffer.beta(self.progress)
        batch, indices, weights = self.buffer.sample(self.train_config.minibatch, beta, self.replay_rng)
        targets = compute_targets(batch, self.online, self.target, self.train_config.gamma)
        loss, grads, td_errors = loss_and_gradients(
            self.online, batch.maps, batch.vec, batch.actions, targets, weights
        )
        adam_update(self.online, grads, self.adam, self.train_config.lr)
        self.buffer.update_priorities(indices, td_errors)
        self.updates += 1

        if self.updates % self.train_config.target_sync_interval == 0:
            self.target.copy_from(self.online)

        record = UpdateRecord(
            update=self.updates,
            env_step=self.env_step,
            loss=loss,
            mean_abs_td=float(np.mean(np.abs(td_errors))),
            epsilon=self.epsilon(),
        )
        self.log.add_update(record)
        self.metrics.record_update(loss)
        if self.updates % self.train_config.log_interval == 0:
            self.logger.info(
                f"Update {self.updates} | env step {self.env_step} | loss {loss:.4f} | "
                f"mean |td| {record.mean_abs_td:.4f} | eps {record.epsilon:.3f} | beta {beta:.3f}"
            )
        return record

    def _after_env_step(self):
        cfg = self.train_config
        if cfg.checkpoint_interval > 0 and self.env_step % cfg.checkpoint_interval == 0:
            self.save(f"checkpoint_{self.env_step}.bin")
        if self.eval_suite is not None and self.env_step % cfg.eval_interval == 0:
            self.evaluate_online()

    def _record_episode(self, level: int, episode_return: float, outcome: str, steps: int, sum_dw: float):
        self.episode += 1
        record = EpisodeRecord(
            episode=self.episode,
            env_step=self.env_step,
            level=level,
            episode_return=episode_return,
            outcome=outcome,
            steps=steps,
            mean_dw=sum_dw / (steps - 1) if steps > 1 else 0.0,
        )
        self.log.add_episode(record)
        self.metrics.record_episode(outcome, episode_return, steps, level)
        self.logger.debug(
            f"Episode {self.episode} | level {level} | {outcome} in {steps} steps | return {episode_return:.1f}"
        )

    # ------------------------------------------------------------------
    # bookkeeping

    def save(self, name: str) -> Path:
        metadata = {
            'step': self.env_step,
            'updates': self.updates,
            'episode': self.episode,
            'level': self.current_level,
            'seed': self.train_config.seed,
        }
        path = save_checkpoint(str(self.run_dir / name), self.online, self.adam, metadata)
        self.last_checkpoint = path
        self.log.save()
        if self.manifest is not None:
            self.manifest.add_checkpoint(str(path), self.env_step)
            self.manifest.update_state({'env_step': self.env_step, 'updates': self.updates, 'episode': self.episode})
        return path

    def evaluate_online(self):
        """当前在线网络在固定评估集上的贪心指标，追加到 eval_curve.csv"""
        agent: PolicyAgent = DQNAgent(self.online.copy(), self.env_params, logger=self.logger)
        scenarios = self.eval_suite.load_scenarios()
        rows = [
            agent.run_episode(scenario, entry.noise_sigma, entry.seed).to_row()
            for scenario, entry in zip(scenarios, self.eval_suite.entries)
        ]
        metrics = compute_metrics(rows)
        row = {'env_step': self.env_step, 'level': self.current_level}
        row.update(metrics.as_row())
        append_table_row(row, str(self.run_dir / "eval_curve.csv"), EVAL_CURVE_COLUMNS)
        self.logger.info(
            f"Eval @ {self.env_step}: success {metrics.success_rate:.3f} | E_r {metrics.E_r:.1f}"
        )

    # ------------------------------------------------------------------
    # loops

    def train(self) -> TrainResult:
        """
        训练直到 total_steps 个环境步

        Returns:
            TrainResult (最终检查点与训练日志)

        Raises:
            NonFiniteLossError: 损失出现 NaN/inf，保留上一个检查点
        """
        self.run_dir.mkdir(parents=True, exist_ok=True)
        eval_curve = self.run_dir / "eval_curve.csv"
        if eval_curve.exists():
            eval_curve.unlink()
        self.manifest = RunManifest(str(self.run_dir))
        self.manifest.create(config_to_dict(self.config), self.train_config.seed)
        self.logger.info(
            f"Training for {self.train_config.total_steps} env steps "
            f"(workers={self.train_config.num_workers}, seed={self.train_config.seed}) -> {self.run_dir}"
        )

        try:
            if self.train_config.num_workers > 1:
                self._train_parallel()
            else:
                self._train_single()
        except NonFiniteLossError as e:
            self.logger.error(
                f"Training aborted at env step {self.env_step}: {str(e)}; last good checkpoint: {self.last_checkpoint}"
            )
            self.log.save()
            self.manifest.set_status('failed', error=str(e))
            raise

        final = self.save("checkpoint_final.bin")
        self.manifest.set_status('completed')
        self.logger.info(self.metrics.get_summary())
        return TrainResult(final, self.log, self.env_step, self.updates)

    def _train_single(self):
        total = self.train_config.total_steps
        env = NavigationEnv(self.env_params, noise_sigma=self.train_config.noise_sigma)

        while self.env_step < total:
            level = self.level()
            scenario = sample_scenario(level, self.env_rng, self.config.sim, scenario_id=f"train_{self.episode}")
            observation = env.reset(scenario, self.env_rng)
            sum_dw = 0.0
            prev_w = None

            done = False
            while not done and self.env_step < total:
                action = self.agent.act(observation, self.epsilon(), self.explore_rng)
                next_observation, reward, done, _ = env.step(action)
                self.env_step += 1
                if prev_w is not None:
                    sum_dw += abs(env.state.velocity.w - prev_w)
                prev_w = env.state.velocity.w

                # 超时同样是回合结束: y = r
                self.buffer.push(Transition(observation, action, reward, next_observation, done))
                self.learn()
                self._after_env_step()
                observation = next_observation

            self._record_episode(level.index, env.state.episode_return, env.state.outcome.value,
                                 env.state.step_count, sum_dw)

    def _train_parallel(self):
        total = self.train_config.total_steps
        broadcast = ParameterBroadcast(self.online)
        transitions: "queue.Queue" = queue.Queue(maxsize=QUEUE_SIZE)
        stop_event = threading.Event()
        worker_seqs = self._collector_seq.spawn(self.train_config.num_workers)
        workers = [
            CollectionWorker(
                worker_id=i,
                config=self.config,
                env_params=self.env_params,
                broadcast=broadcast,
                out_queue=transitions,
                stop_event=stop_event,
                level_fn=self.level,
                epsilon_fn=self.epsilon,
                seed_sequence=seq,
                logger=self.logger,
            )
            for i, seq in enumerate(worker_seqs)
        ]
        for worker in workers:
            worker.start()

        try:
            while self.env_step < total:
                try:
                    item = transitions.get(timeout=1.0)
                except queue.Empty:
                    failed = [w for w in workers if w.error is not None]
                    if failed:
                        raise RuntimeError(f"collector {failed[0].worker_id} failed") from failed[0].error
                    continue

                if isinstance(item, EpisodeSummary):
                    self._record_episode(item.level, item.episode_return, item.outcome, item.steps, item.sum_dw)
                    continue

                self.buffer.push(item)
                self.env_step += 1
                if self.learn() is not None and self.updates % PARAM_PUBLISH_INTERVAL == 0:
                    broadcast.publish(self.online)
                self._after_env_step()
        finally:
            stop_event.set()
            while True:
                try:
                    transitions.get_nowait()
                except queue.Empty:
                    break
            for worker in workers:
                worker.join(timeout=5.0)
