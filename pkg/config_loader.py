"""
配置加载模块
Typed configuration sections, YAML loading and dotted-name overrides
"""

import copy
import logging
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, get_type_hints, get_origin

import yaml


logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """配置文件或覆盖参数不合法"""


@dataclass
class SimConfig:
    """仿真器参数 (控制周期、激光、机器人半径、场地)"""
    dt: float = 0.2
    num_beams: int = 181
    fov_deg: float = 180.0
    max_range: float = 6.0
    robot_radius: float = 0.3
    arena_size: float = 12.0


@dataclass
class CostmapParams:
    """局部代价地图参数"""
    size_cells: int = 60
    resolution: float = 0.1
    inflation_radius: float = 0.3
    occupied_value: float = 1.0
    footprint_value: float = 0.5
    stack_frames: int = 3

    def __post_init__(self):
        if self.inflation_radius < 0:
            raise ConfigError(f"costmap.inflation_radius must be >= 0, got {self.inflation_radius}")
        if not 0.0 < self.footprint_value < 1.0:
            raise ConfigError(f"costmap.footprint_value must be in (0, 1), got {self.footprint_value}")


@dataclass
class RewardParams:
    """奖励函数常数"""
    r_arr: float = 500.0
    epsilon_progress: float = 10.0
    r_col: float = -500.0
    r_step: float = -5.0
    goal_radius: float = 0.2


@dataclass
class PERConfig:
    """优先经验回放参数"""
    alpha: float = 0.6
    beta_start: float = 0.4
    beta_end: float = 1.0
    priority_floor: float = 1e-6

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"per.alpha must be >= 0, got {self.alpha}")
        for name in ('beta_start', 'beta_end'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"per.{name} must be in [0, 1], got {value}")


@dataclass
class TrainConfig:
    """训练参数"""
    lr: float = 5e-4
    gamma: float = 0.99
    buffer_size: int = 200_000
    minibatch: int = 1024
    episode_length: int = 300
    eps_initial: float = 1.0
    eps_final: float = 0.1
    eps_decay_steps: int = 120_000
    target_sync_interval: int = 2000
    total_steps: int = 300_000
    warmup: int = 5000
    seed: int = 0
    noise_sigma: float = 0.0
    checkpoint_interval: int = 50_000
    log_interval: int = 1000
    eval_interval: int = 0
    eval_suite: str = ""
    num_workers: int = 1
    run_dir: str = "runs/default"

    def __post_init__(self):
        if self.total_steps <= 0 or self.minibatch <= 0 or self.buffer_size <= 0:
            raise ConfigError("train.total_steps, train.minibatch and train.buffer_size must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"train.gamma must be in [0, 1], got {self.gamma}")
        if self.noise_sigma < 0:
            raise ConfigError(f"train.noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.num_workers < 1:
            raise ConfigError(f"train.num_workers must be >= 1, got {self.num_workers}")


@dataclass
class CurriculumConfig:
    """课程学习: 进度阈值、障碍物数量范围、起终点距离范围"""
    enabled: bool = True
    max_level: int = 4
    thresholds: List[float] = field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8])
    obstacle_counts: List[List[int]] = field(
        default_factory=lambda: [[0, 2], [2, 4], [4, 6], [6, 8], [8, 10]]
    )
    distances: List[List[float]] = field(
        default_factory=lambda: [[1.0, 2.0], [1.5, 3.0], [2.0, 4.0], [2.5, 5.0], [3.0, 6.0]]
    )

    def __post_init__(self):
        n = len(self.thresholds)
        if n == 0 or len(self.obstacle_counts) != n or len(self.distances) != n:
            raise ConfigError("curriculum.thresholds, obstacle_counts and distances must have equal non-zero length")
        if not 0 <= self.max_level < n:
            raise ConfigError(f"curriculum.max_level must be in [0, {n - 1}], got {self.max_level}")


@dataclass
class VFHConfig:
    """VFH 基线参数"""
    num_sectors: int = 36
    density_coeff: float = 1.0 / 36.0
    threshold: float = 2.5
    wide_valley_sectors: int = 5
    margin_sectors: int = 2
    steer_horizon: float = 1.0
    slowdown_distance: float = 1.0


@dataclass
class EvalConfig:
    """评估参数"""
    parallel: bool = True
    max_workers: int = 4
    sweep_sigmas: List[float] = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2])
    output_dir: str = "results"


@dataclass
class LoggingConfig:
    """日志参数"""
    log_dir: str = "logs"
    log_level: str = "INFO"
    console_output: bool = True


@dataclass
class AppConfig:
    """全部配置"""
    sim: SimConfig = field(default_factory=SimConfig)
    costmap: CostmapParams = field(default_factory=CostmapParams)
    reward: RewardParams = field(default_factory=RewardParams)
    per: PERConfig = field(default_factory=PERConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    vfh: VFHConfig = field(default_factory=VFHConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


SECTIONS: Dict[str, type] = {f.name: f.type for f in fields(AppConfig)}


def _coerce(dotted: str, value: Any, expected: Any) -> Any:
    """按 dataclass 字段类型检查并转换数值"""
    origin = get_origin(expected)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"{dotted}: expected a list, got {value!r}")
        return copy.deepcopy(value)
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{dotted}: expected true/false, got {value!r}")
        return value
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{dotted}: expected an integer, got {value!r}")
        return value
    if expected is float:
        # yaml 1.1 把 1e-4 这种没有小数点的写法读成字符串
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"{dotted}: expected a number, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{dotted}: expected a number, got {value!r}")
        return float(value)
    if expected is str:
        if value is None:
            return ""
        if not isinstance(value, str):
            raise ConfigError(f"{dotted}: expected a string, got {value!r}")
        return value
    return value


def _build_section(name: str, raw: Optional[Dict[str, Any]]) -> Any:
    section_cls = SECTIONS[name]
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{name}' must be a mapping")

    hints = get_type_hints(section_cls)
    kwargs = {}
    for key, value in raw.items():
        if key not in hints:
            raise ConfigError(f"unknown config key '{name}.{key}'")
        kwargs[key] = _coerce(f"{name}.{key}", value, hints[key])
    try:
        return section_cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"section '{name}': {e}") from e


def config_from_dict(data: Optional[Dict[str, Any]]) -> AppConfig:
    """从字典构建 AppConfig，未知段或键抛出 ConfigError"""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for name in data:
        if name not in SECTIONS:
            raise ConfigError(f"unknown config section '{name}'")
    return AppConfig(**{name: _build_section(name, data.get(name)) for name in SECTIONS})


def config_to_dict(config: AppConfig) -> Dict[str, Any]:
    return asdict(config)


def parse_override(item: str) -> tuple:
    """解析 'section.key=value' 形式的覆盖参数"""
    if '=' not in item:
        raise ConfigError(f"override '{item}' must look like section.key=value")
    dotted, raw_value = item.split('=', 1)
    return dotted.strip(), raw_value


def is_config_key(dotted: str) -> bool:
    """判断点分名称是否为已知配置项"""
    if dotted.count('.') != 1:
        return False
    section, key = dotted.split('.')
    return section in SECTIONS and key in get_type_hints(SECTIONS[section])


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    将覆盖参数合并进原始配置字典

    Args:
        data: yaml 解析得到的原始字典
        overrides: ['train.lr=1e-4', ...]

    Returns:
        合并后的新字典
    """
    merged = copy.deepcopy(data or {})
    for item in overrides:
        dotted, raw_value = parse_override(item)
        if not is_config_key(dotted):
            raise ConfigError(f"unknown config key '{dotted}'")
        section, key = dotted.split('.')
        try:
            value = yaml.safe_load(raw_value)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse value for '{dotted}': {e}") from e
        merged.setdefault(section, {})
        if merged[section] is None:
            merged[section] = {}
        merged[section][key] = value
    return merged


def load_config(config_path: Optional[str] = None, overrides: Sequence[str] = ()) -> AppConfig:
    """
    加载配置文件

    Args:
        config_path: yaml 文件路径，None 时使用默认值
        overrides: 点分覆盖参数列表

    Returns:
        AppConfig
    """
    data: Dict[str, Any] = {}
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {config_path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed config file {config_path}: {e}") from e
        logger.info(f"Loaded config from {config_path}")

    return config_from_dict(apply_overrides(data, overrides))
