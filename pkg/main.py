"""
桌面级机器人导航系统 - 主入口
Train, evaluate and compare navigation policies from the command line
"""

import argparse
import asyncio
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from agents.coordinator_agent import EvaluationCoordinator, PolicySpec
from config_loader import AppConfig, ConfigError, is_config_key, load_config
from environment.curriculum import ScenarioSamplingError
from environment.nav_env import EpisodeFinishedError
from logger_config import MetricsCollector, setup_logger
from memory.replay_buffer import ReplayBufferError
from network.checkpoint import CheckpointError
from network.qnetwork import NonFiniteLossError
from tools.costmap_generator import dump_costmap, scan_to_costmap
from tools.metric_calculator import write_trajectory
from tools.scenario_io import ScenarioFormatError, generate_suite, load_scenario, load_suite
from tools.simulator import Pose, raycast
from training.trainer import Trainer


EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING_FILE = 4
EXIT_CHECKPOINT = 5
EXIT_SCENARIO = 6

ERROR_EXIT_CODES = {
    'ConfigError': EXIT_CONFIG,
    'FileNotFoundError': EXIT_MISSING_FILE,
    'CheckpointError': EXIT_CHECKPOINT,
    'ScenarioFormatError': EXIT_SCENARIO,
}


class UsageError(Exception):
    """未知参数或参数组合不合法"""


class NavigationStack:
    """桌面级导航系统: 训练、评估、对比、噪声扫描与导出"""

    def __init__(self, config: AppConfig = None):
        self.config = config or AppConfig()

        self.logger = setup_logger(
            name="desk_nav",
            log_dir=self.config.logging.log_dir,
            log_level=self.config.logging.log_level,
            console_output=self.config.logging.console_output,
        )
        self.metrics = MetricsCollector()
        self.coordinator = EvaluationCoordinator(self.config, self.logger)
        self.logger.info("Navigation stack initialized")

    # ------------------------------------------------------------------

    def train(self):
        trainer = Trainer(self.config, self.logger, self.metrics)
        result = trainer.train()
        print(f"\n✅ 训练完成 | Training finished: {result.env_steps} env steps, {result.updates} updates")
        print(f"   最终检查点: {result.checkpoint}")
        return result

    def evaluate(self, spec: PolicySpec, suite_path: str, output: Optional[str] = None,
                 trajectory_dir: Optional[str] = None, parallel: Optional[bool] = None) -> Dict[str, Any]:
        suite = load_suite(suite_path)
        if output is None:
            output = str(Path(self.config.eval.output_dir) / f"episodes_{spec.name}.csv")
        return asyncio.run(self.coordinator.evaluate(spec, suite, output, trajectory_dir, parallel))

    def compare(self, specs: Sequence[PolicySpec], suite_path: str,
                output_dir: Optional[str] = None) -> List[Dict[str, Any]]:
        suite = load_suite(suite_path)
        return asyncio.run(self.coordinator.compare(specs, suite, output_dir or self.config.eval.output_dir))

    def sweep_noise(self, specs: Sequence[PolicySpec], sigmas: Sequence[float], suite_path: str,
                    output_dir: Optional[str] = None) -> List[Dict[str, Any]]:
        suite = load_suite(suite_path)
        return asyncio.run(self.coordinator.noise_sweep(
            specs, sigmas, suite, output_dir or self.config.eval.output_dir
        ))

    def rollout(self, spec: PolicySpec, scenario_path: str, output: str,
                seed: int = 0, noise_sigma: float = 0.0):
        """单个场景 -> 逐步轨迹 CSV"""
        scenario = load_scenario(scenario_path)
        agent = self.coordinator.build_agent(spec)
        result = agent.run_episode(scenario, noise_sigma, seed, record_trajectory=True)
        path = write_trajectory(result.trajectory, output)
        self.logger.info(f"Rollout {spec.name} on {scenario.scenario_id}: {result.outcome} in {result.steps} steps")
        print(f"\n🤖 {spec.name} | {scenario.scenario_id}: {result.outcome}, {result.steps} steps, "
              f"return {result.episode_return:.1f}")
        print(f"   轨迹文件: {path}")
        return result

    def dump_costmap(self, scenario_path: str, output: str, pose: Optional[Tuple[float, float, float]] = None,
                     noise_sigma: float = 0.0, seed: int = 0) -> Path:
        scenario = load_scenario(scenario_path)
        robot_pose = Pose(*pose) if pose is not None else scenario.start
        scan = raycast(scenario.world, robot_pose, self.config.sim, noise_sigma, np.random.default_rng(seed))
        costmap = scan_to_costmap(scan, self.config.costmap, scenario.world.robot_radius)
        return dump_costmap(costmap, output)

    def gen_suite(self, level: int, count: int, seed: int, output_dir: str) -> Path:
        path = generate_suite(level, count, seed, output_dir, self.config.sim, self.config.curriculum)
        print(f"\n📁 评估集已生成 | Suite written: {path} ({count} scenarios, level {level})")
        return path

    # ------------------------------------------------------------------

    def display_results(self, results: List[Dict[str, Any]]):
        """显示评估结果"""
        print("\n" + "=" * 80)
        print("评估结果 | EVALUATION RESULTS")
        print("=" * 80)
        print(f"\n{'policy':<20}{'E_r':>12}{'success':>10}{'reach_step':>12}{'mean_dw':>10}{'episodes':>10}")

        for result in results:
            name = result.get('policy', 'N/A')
            if result.get('status') != 'success':
                print(f"{name:<20} ❌ 评估失败: {result.get('error', 'Unknown error')}")
                continue
            m = result['metrics']
            reach = f"{m.reach_step:.2f}" if m.reach_step is not None else "-"
            print(f"{name:<20}{m.E_r:>12.2f}{m.success_rate:>10.3f}{reach:>12}{m.mean_dw:>10.4f}{m.episodes:>10}")

        print("\n" + "=" * 80 + "\n")

    def display_sweep(self, rows: List[Dict[str, Any]]):
        print("\n" + "=" * 80)
        print("噪声扫描 | NOISE SWEEP (success rate)")
        print("=" * 80)
        table = EvaluationCoordinator.pivot(rows)
        names = sorted({r['policy'] for r in rows})
        print(f"\n{'sigma':<10}" + "".join(f"{n:>16}" for n in names))
        for row in table:
            cells = "".join(
                f"{row[n]:>16.3f}" if isinstance(row.get(n), float) else f"{'-':>16}" for n in names
            )
            print(f"{row['sigma']:<10}{cells}")
        print("\n" + "=" * 80 + "\n")

    def show_metrics(self):
        """显示训练指标"""
        print(self.metrics.get_summary())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desk_nav",
        description="Desk-scale DQN robot navigation: train, evaluate, compare. "
                    "Any config value can be overridden with --section.key VALUE.",
    )
    parser.add_argument('--config', default=None, help="YAML config file (defaults when omitted)")
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('train', help="train a DQN policy")

    p = sub.add_parser('eval', help="evaluate one policy on a suite")
    p.add_argument('--policy', required=True, help="'vfh', a checkpoint path, or name=checkpoint")
    p.add_argument('--suite', required=True)
    p.add_argument('--output', default=None, help="per-episode CSV")
    p.add_argument('--trajectory-dir', default=None)
    p.add_argument('--sequential', action='store_true')

    p = sub.add_parser('compare', help="evaluate several policies on the same suite")
    p.add_argument('--policy', action='append', required=True)
    p.add_argument('--suite', required=True)
    p.add_argument('--output-dir', default=None)

    p = sub.add_parser('sweep-noise', help="success rate per policy and laser noise sigma")
    p.add_argument('--policy', action='append', required=True)
    p.add_argument('--suite', required=True)
    p.add_argument('--sigmas', type=float, nargs='+', default=None)
    p.add_argument('--output-dir', default=None)

    p = sub.add_parser('rollout', help="run one scenario and write its trajectory")
    p.add_argument('--policy', required=True)
    p.add_argument('--scenario', required=True)
    p.add_argument('--output', required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--noise-sigma', type=float, default=0.0)

    p = sub.add_parser('dump-costmap', help="write the costmap seen from a pose as PGM")
    p.add_argument('--scenario', required=True)
    p.add_argument('--output', required=True)
    p.add_argument('--pose', type=float, nargs=3, metavar=('X', 'Y', 'THETA'), default=None)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--noise-sigma', type=float, default=0.0)

    p = sub.add_parser('gen-suite', help="sample a fixed evaluation suite")
    p.add_argument('--level', type=int, required=True)
    p.add_argument('--count', type=int, required=True)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--output-dir', required=True)

    return parser


def split_overrides(extra: Sequence[str]) -> List[str]:
    """
    把剩余参数解析为 'section.key=value' 覆盖

    支持 --section.key=value 与 --section.key value 两种写法
    """
    overrides = []
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith('--'):
            raise UsageError(f"unexpected argument '{token}'")
        name = token[2:]
        if '=' in name:
            dotted, value = name.split('=', 1)
        else:
            dotted = name
            if i + 1 >= len(extra):
                raise UsageError(f"flag '{token}' needs a value")
            value = extra[i + 1]
            i += 1
        if not is_config_key(dotted):
            raise UsageError(f"unknown flag '--{dotted}'")
        overrides.append(f"{dotted}={value}")
        i += 1
    return overrides


def _run_command(stack: NavigationStack, args: argparse.Namespace) -> int:
    if args.command == 'train':
        stack.train()
        stack.show_metrics()
        return EXIT_OK

    if args.command == 'gen-suite':
        stack.gen_suite(args.level, args.count, args.seed, args.output_dir)
        return EXIT_OK

    if args.command == 'dump-costmap':
        path = stack.dump_costmap(args.scenario, args.output, args.pose, args.noise_sigma, args.seed)
        print(f"\n🗺️  代价地图 | Costmap written: {path}")
        return EXIT_OK

    if args.command == 'rollout':
        stack.rollout(PolicySpec.parse(args.policy), args.scenario, args.output, args.seed, args.noise_sigma)
        return EXIT_OK

    if args.command == 'eval':
        result = stack.evaluate(
            PolicySpec.parse(args.policy), args.suite, args.output, args.trajectory_dir,
            parallel=False if args.sequential else None,
        )
        results = [result]
    elif args.command == 'compare':
        results = stack.compare([PolicySpec.parse(p) for p in args.policy], args.suite, args.output_dir)
    else:
        sigmas = args.sigmas if args.sigmas is not None else stack.config.eval.sweep_sigmas
        rows = stack.sweep_noise([PolicySpec.parse(p) for p in args.policy], sigmas, args.suite, args.output_dir)
        stack.display_sweep(rows)
        results = [{'status': r['status'], 'error': r.get('error'), 'error_type': r.get('error_type')} for r in rows]

    if args.command != 'sweep-noise':
        stack.display_results(results)
    failed = [r for r in results if r.get('status') != 'success']
    if failed:
        return ERROR_EXIT_CODES.get(failed[0].get('error_type'), EXIT_RUNTIME)
    return EXIT_OK


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行入口

    Args:
        argv: 参数列表 (默认 sys.argv[1:])

    Returns:
        退出码: 0 成功, 2 用法错误, 3 配置错误, 4 文件缺失, 5 检查点错误, 6 场景文件错误, 1 其他
    """
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        overrides = split_overrides(extra)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        config = load_config(args.config, overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return EXIT_MISSING_FILE

    try:
        stack = NavigationStack(config)
        return _run_command(stack, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except CheckpointError as e:
        print(f"checkpoint error: {e}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except ScenarioFormatError as e:
        print(f"scenario file error: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    except (NonFiniteLossError, ScenarioSamplingError, ReplayBufferError, EpisodeFinishedError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(cli())
