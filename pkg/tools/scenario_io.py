"""
场景与评估集文件
YAML scenario files, evaluation suites and deterministic suite generation
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from config_loader import CurriculumConfig, SimConfig
from environment.curriculum import Scenario, level_by_index, sample_scenario
from tools.simulator import CircleObstacle, Pose, RectObstacle, World


logger = logging.getLogger(__name__)


class ScenarioFormatError(ValueError):
    """场景或评估集文件无法解析"""


def _floats(value: Any, length: int, what: str) -> List[float]:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ScenarioFormatError(f"{what} must be a list of {length} numbers, got {value!r}")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError) as e:
        raise ScenarioFormatError(f"{what} must contain numbers: {e}") from e


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    obstacles = []
    for obstacle in scenario.world.obstacles:
        if isinstance(obstacle, CircleObstacle):
            obstacles.append({
                'type': 'circle',
                'center': [float(obstacle.cx), float(obstacle.cy)],
                'radius': float(obstacle.radius),
            })
        else:
            obstacles.append({
                'type': 'rectangle',
                'min': [float(obstacle.xmin), float(obstacle.ymin)],
                'max': [float(obstacle.xmax), float(obstacle.ymax)],
            })
    return {
        'bounds': [float(b) for b in scenario.world.bounds],
        'robot_radius': float(scenario.world.robot_radius),
        'obstacles': obstacles,
        'start': [float(scenario.start.x), float(scenario.start.y), float(scenario.start.theta)],
        'goal': [float(scenario.goal[0]), float(scenario.goal[1])],
        'level': int(scenario.level),
        'seed': int(scenario.seed),
    }


def scenario_from_dict(data: Dict[str, Any], scenario_id: str = "") -> Scenario:
    """字典 -> Scenario，字段缺失或非法时抛出 ScenarioFormatError"""
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario file must contain a mapping")
    for key in ('bounds', 'start', 'goal'):
        if key not in data:
            raise ScenarioFormatError(f"scenario is missing '{key}'")

    obstacles = []
    for i, item in enumerate(data.get('obstacles') or []):
        if not isinstance(item, dict):
            raise ScenarioFormatError(f"obstacle {i} must be a mapping")
        kind = item.get('type')
        if kind == 'circle':
            cx, cy = _floats(item.get('center'), 2, f"obstacle {i} center")
            try:
                obstacles.append(CircleObstacle(cx, cy, float(item.get('radius'))))
            except (TypeError, ValueError) as e:
                raise ScenarioFormatError(f"obstacle {i}: {e}") from e
        elif kind == 'rectangle':
            xmin, ymin = _floats(item.get('min'), 2, f"obstacle {i} min")
            xmax, ymax = _floats(item.get('max'), 2, f"obstacle {i} max")
            try:
                obstacles.append(RectObstacle(xmin, ymin, xmax, ymax))
            except ValueError as e:
                raise ScenarioFormatError(f"obstacle {i}: {e}") from e
        else:
            raise ScenarioFormatError(f"obstacle {i} has unknown type {kind!r}")

    try:
        world = World(
            bounds=tuple(_floats(data['bounds'], 4, 'bounds')),
            obstacles=tuple(obstacles),
            robot_radius=float(data.get('robot_radius', 0.3)),
        )
        start = Pose(*_floats(data['start'], 3, 'start'))
        goal = tuple(_floats(data['goal'], 2, 'goal'))
        return Scenario(
            world=world,
            start=start,
            goal=goal,
            level=int(data.get('level', -1)),
            seed=int(data.get('seed', 0)),
            scenario_id=scenario_id,
        )
    except ScenarioFormatError:
        raise
    except (TypeError, ValueError) as e:
        raise ScenarioFormatError(str(e)) from e


def save_scenario(scenario: Scenario, path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, 'w', encoding='utf-8') as f:
        yaml.safe_dump(scenario_to_dict(scenario), f, sort_keys=False, default_flow_style=None)
    return out


def load_scenario(path: str, scenario_id: Optional[str] = None) -> Scenario:
    """
    读取场景文件

    Args:
        path: YAML 场景文件
        scenario_id: 场景编号，默认取文件名

    Returns:
        Scenario
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"scenario file not found: {path}")
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ScenarioFormatError(f"{path}: malformed YAML: {e}") from e
    try:
        return scenario_from_dict(data, scenario_id if scenario_id is not None else file_path.stem)
    except ScenarioFormatError as e:
        raise ScenarioFormatError(f"{path}: {e}") from e


@dataclass(frozen=True)
class SuiteEntry:
    """评估集中的一个回合: 场景文件 + 环境种子 + 激光噪声"""
    scenario_path: str
    seed: int
    noise_sigma: float = 0.0

    @property
    def scenario_id(self) -> str:
        return Path(self.scenario_path).stem


@dataclass(frozen=True)
class EvalSuite:
    """固定评估集，所有对比策略共享同一组场景与种子"""
    entries: tuple
    name: str = "suite"

    def __len__(self) -> int:
        return len(self.entries)

    def with_noise(self, sigma: float) -> 'EvalSuite':
        return EvalSuite(tuple(replace(e, noise_sigma=float(sigma)) for e in self.entries), self.name)

    def load_scenarios(self) -> List[Scenario]:
        return [load_scenario(e.scenario_path, e.scenario_id) for e in self.entries]


def load_suite(path: str) -> EvalSuite:
    """读取评估集文件，场景路径相对于评估集所在目录"""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"suite file not found: {path}")
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ScenarioFormatError(f"{path}: malformed YAML: {e}") from e
    if not isinstance(data, dict) or not isinstance(data.get('episodes'), list):
        raise ScenarioFormatError(f"{path}: suite must contain an 'episodes' list")

    default_sigma = data.get('noise_sigma', 0.0)
    entries = []
    for i, item in enumerate(data['episodes']):
        if not isinstance(item, dict) or 'scenario' not in item:
            raise ScenarioFormatError(f"{path}: episode {i} needs a 'scenario' entry")
        try:
            entries.append(SuiteEntry(
                scenario_path=str(file_path.parent / item['scenario']),
                seed=int(item.get('seed', 0)),
                noise_sigma=float(item.get('noise_sigma', default_sigma)),
            ))
        except (TypeError, ValueError) as e:
            raise ScenarioFormatError(f"{path}: episode {i}: {e}") from e
    if not entries:
        raise ScenarioFormatError(f"{path}: suite has no episodes")
    return EvalSuite(tuple(entries), data.get('name', file_path.stem))


def save_suite(suite: EvalSuite, path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    base = out.parent.resolve()
    episodes = []
    for entry in suite.entries:
        scenario_path = Path(entry.scenario_path).resolve()
        try:
            relative = scenario_path.relative_to(base).as_posix()
        except ValueError:
            relative = scenario_path.as_posix()
        episodes.append({'scenario': relative, 'seed': int(entry.seed), 'noise_sigma': float(entry.noise_sigma)})
    with open(out, 'w', encoding='utf-8') as f:
        yaml.safe_dump({'name': suite.name, 'episodes': episodes}, f, sort_keys=False)
    return out


def generate_suite(
    level: int,
    count: int,
    seed: int,
    out_dir: str,
    sim: SimConfig = None,
    curriculum: CurriculumConfig = None,
    noise_sigma: float = 0.0,
) -> Path:
    """
    生成固定评估集 (同参数两次生成的文件逐字节相同)

    Args:
        level: 课程关卡
        count: 场景数量
        seed: 总种子
        out_dir: 输出目录
        sim: 仿真参数
        curriculum: 课程配置
        noise_sigma: 评估集默认激光噪声

    Returns:
        suite.yaml 路径
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    sim = sim or SimConfig()
    curriculum_level = level_by_index(level, curriculum)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # 每个回合两个种子: 场景采样种子与环境(噪声)种子
    seeds = np.random.SeedSequence(seed).generate_state(2 * count, dtype=np.uint32)
    entries = []
    for i in range(count):
        scenario_seed = int(seeds[2 * i])
        scenario_id = f"level{level}_{i:03d}"
        scenario = sample_scenario(
            curriculum_level,
            np.random.default_rng(scenario_seed),
            sim,
            scenario_id=scenario_id,
            seed=scenario_seed,
        )
        path = save_scenario(scenario, out / f"{scenario_id}.yaml")
        entries.append(SuiteEntry(str(path), int(seeds[2 * i + 1]), float(noise_sigma)))

    suite_path = save_suite(EvalSuite(tuple(entries), f"level{level}_seed{seed}"), out / "suite.yaml")
    logger.info(f"Generated suite {suite_path} with {count} level-{level} scenarios")
    return suite_path
