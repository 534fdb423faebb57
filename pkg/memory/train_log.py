"""
训练日志
Append-only per-episode and per-update records, written as CSV
"""

import csv
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional


@dataclass
class EpisodeRecord:
    episode: int
    env_step: int
    level: int
    episode_return: float
    outcome: str
    steps: int
    mean_dw: float


@dataclass
class UpdateRecord:
    update: int
    env_step: int
    loss: float
    mean_abs_td: float
    epsilon: float


def _format(value: Any) -> str:
    # repr 保证浮点数可以无损读回
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(record_cls, row: Dict[str, str]):
    kwargs = {}
    for f in fields(record_cls):
        raw = row[f.name]
        if f.type in (int, 'int'):
            kwargs[f.name] = int(raw)
        elif f.type in (float, 'float'):
            kwargs[f.name] = float(raw)
        else:
            kwargs[f.name] = raw
    return record_cls(**kwargs)


class TrainLog:
    """训练日志 - 只追加，步数计数单调不减"""

    EPISODES_FILE = "episodes.csv"
    UPDATES_FILE = "updates.csv"

    def __init__(self, run_dir: Optional[str] = None):
        self.run_dir = Path(run_dir) if run_dir else None
        self.episodes: List[EpisodeRecord] = []
        self.updates: List[UpdateRecord] = []
        self.logger = logging.getLogger(__name__)

    def add_episode(self, record: EpisodeRecord) -> int:
        """
        添加回合记录

        Args:
            record: 回合记录

        Returns:
            回合序号
        """
        if self.episodes and record.env_step < self.episodes[-1].env_step:
            raise ValueError(
                f"episode env_step {record.env_step} goes backwards (last {self.episodes[-1].env_step})"
            )
        self.episodes.append(record)
        return record.episode

    def add_update(self, record: UpdateRecord) -> int:
        if self.updates and (record.update <= self.updates[-1].update or record.env_step < self.updates[-1].env_step):
            raise ValueError(f"update record {record.update} is not newer than {self.updates[-1].update}")
        self.updates.append(record)
        return record.update

    def get_history(self, limit: int = 10, level: Optional[int] = None) -> List[EpisodeRecord]:
        """最近的回合记录 (按 env_step 倒序)"""
        history = self.episodes
        if level is not None:
            history = [e for e in history if e.level == level]
        return list(reversed(history))[:limit]

    def get_statistics(self, last: Optional[int] = None) -> Dict[str, Any]:
        """
        统计信息

        Args:
            last: 只统计最近 N 个回合

        Returns:
            回合数、成功/碰撞/超时、平均回报、各关卡分布
        """
        history = self.episodes[-last:] if last else self.episodes
        if not history:
            return {
                'total_episodes': 0,
                'arrived': 0,
                'collided': 0,
                'timeouts': 0,
                'average_return': 0.0,
                'level_distribution': {},
            }

        level_counts: Dict[int, int] = {}
        for record in history:
            level_counts[record.level] = level_counts.get(record.level, 0) + 1

        return {
            'total_episodes': len(history),
            'arrived': sum(1 for e in history if e.outcome == 'arrived'),
            'collided': sum(1 for e in history if e.outcome == 'collided'),
            'timeouts': sum(1 for e in history if e.outcome == 'running'),
            'average_return': sum(e.episode_return for e in history) / len(history),
            'level_distribution': level_counts,
        }

    def _write(self, path: Path, record_cls, records):
        names = [f.name for f in fields(record_cls)]
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(names)
            for record in records:
                row = asdict(record)
                writer.writerow([_format(row[name]) for name in names])

    def save(self, run_dir: Optional[str] = None):
        """写出 episodes.csv 与 updates.csv"""
        target = Path(run_dir) if run_dir else self.run_dir
        if target is None:
            raise ValueError("TrainLog.save needs a run directory")
        target.mkdir(parents=True, exist_ok=True)
        self._write(target / self.EPISODES_FILE, EpisodeRecord, self.episodes)
        self._write(target / self.UPDATES_FILE, UpdateRecord, self.updates)

    @classmethod
    def load(cls, run_dir: str) -> 'TrainLog':
        log = cls(run_dir)
        for name, record_cls, target in (
            (cls.EPISODES_FILE, EpisodeRecord, log.episodes),
            (cls.UPDATES_FILE, UpdateRecord, log.updates),
        ):
            path = Path(run_dir) / name
            if not path.exists():
                continue
            with open(path, 'r', encoding='utf-8', newline='') as f:
                target.extend(_parse(record_cls, row) for row in csv.DictReader(f))
        log.logger.info(f"Loaded {len(log.episodes)} episodes and {len(log.updates)} updates from {run_dir}")
        return log

    def identical_to(self, other: 'TrainLog') -> bool:
        return self.episodes == other.episodes and self.updates == other.updates
