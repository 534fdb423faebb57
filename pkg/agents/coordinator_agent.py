"""
协调 Agent
在固定评估集上运行多个策略 (并行或顺序)，汇总指标，做对比与噪声扫描
"""

import asyncio
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config_loader import AppConfig
from environment.nav_env import EnvParams
from tools.metric_calculator import (
    compute_metrics,
    return_statistics,
    write_episode_csv,
    write_table,
    write_trajectory,
)
from tools.scenario_io import EvalSuite

from .base_agent import BaseAgent, PolicyAgent, episode_task
from .dqn_agent import DQNAgent
from .vfh_agent import VFHAgent


METRIC_COLUMNS = ['E_r', 'success_rate', 'reach_step', 'mean_dw', 'episodes']


@dataclass(frozen=True)
class PolicySpec:
    """待评估策略: 'vfh' 或一个检查点文件"""
    name: str
    kind: str = 'dqn'
    checkpoint: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> 'PolicySpec':
        """'vfh' | 'name=path/to/checkpoint.bin' | 'path/to/checkpoint.bin'"""
        if text == 'vfh':
            return cls('vfh', 'vfh')
        if '=' in text:
            name, path = text.split('=', 1)
            if path == 'vfh':
                return cls(name, 'vfh')
            return cls(name, 'dqn', path)
        return cls(Path(text).stem, 'dqn', text)


def env_params_from_config(config: AppConfig) -> EnvParams:
    return EnvParams(
        sim=config.sim,
        costmap=config.costmap,
        reward=config.reward,
        episode_length=config.train.episode_length,
    )


class EvaluationCoordinator(BaseAgent):
    """协调Agent - 管理多个策略在同一评估集上的运行"""

    def __init__(self, config: AppConfig = None, logger=None):
        super().__init__("Evaluation_Coordinator", logger)
        self.config = config or AppConfig()
        self.env_params = env_params_from_config(self.config)

    def build_agent(self, spec: PolicySpec) -> PolicyAgent:
        if spec.kind == 'vfh':
            return VFHAgent(self.config.vfh, self.env_params, name=spec.name, logger=self.logger)
        if not spec.checkpoint:
            raise ValueError(f"policy '{spec.name}' needs a checkpoint path")
        return DQNAgent.from_checkpoint(spec.checkpoint, self.env_params, name=spec.name, logger=self.logger)

    async def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """
        评估一个策略

        Args:
            task: {
                'type': 'evaluate',
                'policy': PolicySpec,
                'suite': EvalSuite,
                'parallel': bool,
                'output_csv': str | None,
                'trajectory_dir': str | None
            }

        Returns:
            {
                'status': str,
                'policy': str,
                'metrics': Metrics,
                'rows': List[EpisodeRow],
                'statistics': Dict,
                'episode_csv': str | None
            }
        """
        spec: PolicySpec = task['policy']
        suite: EvalSuite = task['suite']
        parallel = task.get('parallel', self.config.eval.parallel)
        trajectory_dir = task.get('trajectory_dir')
        if len(suite) == 0:
            raise ValueError("evaluation suite is empty")

        # 检查点或场景无法读取时整个运行失败，而不是逐回合失败
        agent = self.build_agent(spec)
        scenarios = suite.load_scenarios()

        self.logger.info(
            f"Evaluating {spec.name} on {suite.name} ({len(suite)} episodes, parallel={parallel})"
        )

        episode_tasks = [
            episode_task(scenario, entry.seed, entry.noise_sigma, record_trajectory=trajectory_dir is not None)
            for scenario, entry in zip(scenarios, suite.entries)
        ]

        if parallel:
            limit = asyncio.Semaphore(max(1, self.config.eval.max_workers))

            async def bounded(t):
                async with limit:
                    return await agent.run(t)

            results = await asyncio.gather(*[bounded(t) for t in episode_tasks])
        else:
            results = []
            for t in episode_tasks:
                results.append(await agent.run(t))

        failed = [r for r in results if r.get('status') != 'success']
        if failed:
            raise RuntimeError(f"{len(failed)} episodes failed for {spec.name}: {failed[0].get('error')}")

        rows = []
        for result in results:
            episode = result['episode']
            trajectory_path = ""
            if trajectory_dir is not None:
                trajectory_path = str(write_trajectory(
                    episode.trajectory,
                    Path(trajectory_dir) / spec.name / f"{episode.scenario_id}_s{episode.seed}.csv",
                ))
            rows.append(episode.to_row(trajectory_path))

        metrics = compute_metrics(rows)
        episode_csv = None
        if task.get('output_csv'):
            episode_csv = str(write_episode_csv(rows, task['output_csv']))

        self.logger.info(
            f"{spec.name}: E_r={metrics.E_r:.2f} success={metrics.success_rate:.3f} "
            f"reach_step={metrics.reach_step} mean_dw={metrics.mean_dw:.4f}"
        )
        return {
            'status': 'success',
            'policy': spec.name,
            'metrics': metrics,
            'rows': rows,
            'statistics': return_statistics(rows),
            'episode_csv': episode_csv,
        }

    async def evaluate(self, spec: PolicySpec, suite: EvalSuite, output_csv: Optional[str] = None,
                       trajectory_dir: Optional[str] = None, parallel: Optional[bool] = None) -> Dict[str, Any]:
        task = {
            'type': 'evaluate',
            'policy': spec,
            'suite': suite,
            'output_csv': output_csv,
            'trajectory_dir': trajectory_dir,
        }
        if parallel is not None:
            task['parallel'] = parallel
        result = await self.run(task)
        result.setdefault('policy', spec.name)
        return result

    async def compare(self, specs: Sequence[PolicySpec], suite: EvalSuite,
                      output_dir: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        所有策略使用同一评估集 (相同场景与种子)

        Returns:
            每个策略一个结果，外加写出的 compare.csv
        """
        results = []
        for spec in specs:
            out_csv = str(Path(output_dir) / f"episodes_{spec.name}.csv") if output_dir else None
            results.append(await self.evaluate(spec, suite, output_csv=out_csv))

        if output_dir:
            write_table(self.summary_rows(results), str(Path(output_dir) / "compare.csv"),
                        ['policy', 'status'] + METRIC_COLUMNS)
        return results

    async def noise_sweep(self, specs: Sequence[PolicySpec], sigmas: Sequence[float], suite: EvalSuite,
                          output_dir: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        每个 sigma 在同一评估集上重跑所有策略

        Returns:
            长表行 {policy, sigma, 四项指标}
        """
        sigmas = [float(s) for s in sigmas]
        if not sigmas:
            raise ValueError("noise sweep needs at least one sigma")
        if sigmas != sorted(sigmas):
            raise ValueError(f"sigmas must be sorted ascending, got {sigmas}")

        rows = []
        for sigma in sigmas:
            noisy = suite.with_noise(sigma)
            for spec in specs:
                result = await self.evaluate(spec, noisy)
                row = {'policy': spec.name, 'sigma': sigma, 'status': result.get('status')}
                if result.get('status') == 'success':
                    row.update(result['metrics'].as_row())
                else:
                    row['error'] = result.get('error')
                    row['error_type'] = result.get('error_type')
                rows.append(row)
                self.logger.info(f"sigma={sigma} {spec.name}: success_rate={row.get('success_rate')}")

        if output_dir:
            out = Path(output_dir)
            write_table(rows, str(out / "noise_sweep.csv"), ['policy', 'sigma', 'status'] + METRIC_COLUMNS)
            write_table(self.pivot(rows), str(out / "noise_sweep_success.csv"),
                        ['sigma'] + [s.name for s in specs])
        return rows

    @staticmethod
    def pivot(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """长表 -> 每个 sigma 一行、每个策略一列 success_rate"""
        table: Dict[float, Dict[str, Any]] = {}
        for row in rows:
            table.setdefault(row['sigma'], {'sigma': row['sigma']})[row['policy']] = row.get('success_rate')
        return [table[sigma] for sigma in sorted(table)]

    @staticmethod
    def summary_rows(results: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        rows = []
        for result in results:
            row = {'policy': result.get('policy'), 'status': result.get('status')}
            if result.get('status') == 'success':
                row.update(result['metrics'].as_row())
            rows.append(row)
        return rows
