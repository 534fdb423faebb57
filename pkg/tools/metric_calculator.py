"""
评估指标工具
Episode rows -> E_r, success rate, reach step and mean |dw|; episode, trajectory and table CSV helpers
"""

import csv
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence


logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ['t', 'x', 'y', 'theta', 'v', 'w', 'reward', 'outcome']


@dataclass
class EpisodeRow:
    """单个评估回合"""
    scenario_id: str
    seed: int
    noise_sigma: float
    outcome: str
    episode_return: float
    steps: int
    sum_dw: float
    trajectory: str = ""

    @property
    def dw_samples(self) -> int:
        """Δw 样本数: 第一步之前没有上一个角速度"""
        return max(self.steps - 1, 0)


@dataclass
class Metrics:
    """四项指标; reach_step 在没有成功回合时为 None"""
    E_r: float
    success_rate: float
    reach_step: Optional[float]
    mean_dw: float
    episodes: int

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row['reach_step'] = '' if self.reach_step is None else self.reach_step
        return row


@dataclass
class TrajectoryStep:
    t: int
    x: float
    y: float
    theta: float
    v: float
    w: float
    reward: float
    outcome: str


def _ordered(rows: Iterable[EpisodeRow]) -> List[EpisodeRow]:
    # 聚合与完成顺序无关
    return sorted(rows, key=lambda r: (r.scenario_id, r.seed, r.noise_sigma))


def compute_metrics(rows: Sequence[EpisodeRow]) -> Metrics:
    """
    计算评估指标

    Args:
        rows: 评估回合列表 (非空)

    Returns:
        Metrics
    """
    if not rows:
        raise ValueError("cannot compute metrics over an empty set of episodes")
    ordered = _ordered(rows)
    count = len(ordered)
    successes = [r for r in ordered if r.outcome == 'arrived']
    dw_samples = sum(r.dw_samples for r in ordered)

    return Metrics(
        E_r=sum(r.episode_return for r in ordered) / count,
        success_rate=len(successes) / count,
        reach_step=sum(r.steps for r in successes) / len(successes) if successes else None,
        mean_dw=sum(r.sum_dw for r in ordered) / dw_samples if dw_samples else 0.0,
        episodes=count,
    )


def return_statistics(rows: Sequence[EpisodeRow]) -> Dict[str, Any]:
    """回报分布: 数量、最小、最大、平均、中位数，以及各结果的计数"""
    returns = sorted(r.episode_return for r in rows)
    if not returns:
        return {'count': 0, 'min': 0.0, 'max': 0.0, 'average': 0.0, 'median': 0.0, 'by_outcome': {}}

    count = len(returns)
    median = returns[count // 2] if count % 2 == 1 else (returns[count // 2 - 1] + returns[count // 2]) / 2
    by_outcome: Dict[str, int] = {}
    for row in rows:
        by_outcome[row.outcome] = by_outcome.get(row.outcome, 0) + 1

    return {
        'count': count,
        'min': returns[0],
        'max': returns[-1],
        'average': sum(returns) / count,
        'median': median,
        'by_outcome': by_outcome,
    }


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ''
    return str(value)


def write_episode_csv(rows: Sequence[EpisodeRow], path: str) -> Path:
    """写出逐回合 CSV (浮点数用 repr，可精确复算指标)"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    names = [f.name for f in fields(EpisodeRow)]
    with open(out, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(names)
        for row in _ordered(rows):
            data = asdict(row)
            writer.writerow([_cell(data[name]) for name in names])
    return out


def read_episode_csv(path: str) -> List[EpisodeRow]:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"episode CSV not found: {path}")
    rows = []
    with open(file_path, 'r', encoding='utf-8', newline='') as f:
        for item in csv.DictReader(f):
            rows.append(EpisodeRow(
                scenario_id=item['scenario_id'],
                seed=int(item['seed']),
                noise_sigma=float(item['noise_sigma']),
                outcome=item['outcome'],
                episode_return=float(item['episode_return']),
                steps=int(item['steps']),
                sum_dw=float(item['sum_dw']),
                trajectory=item.get('trajectory', ''),
            ))
    return rows


def metrics_from_csv(path: str) -> Metrics:
    return compute_metrics(read_episode_csv(path))


def write_trajectory(steps: Sequence[TrajectoryStep], path: str) -> Path:
    """逐步轨迹 CSV: t,x,y,theta,v,w,reward,outcome"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(TRAJECTORY_HEADER)
        for step in steps:
            data = asdict(step)
            writer.writerow([_cell(data[name]) for name in TRAJECTORY_HEADER])
    return out


def write_table(rows: Sequence[Dict[str, Any]], path: str, columns: Optional[Sequence[str]] = None) -> Path:
    """通用表格 CSV (对比结果、噪声扫描、训练评估曲线)"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(out, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in columns])
    logger.info(f"Wrote {len(rows)} rows to {out}")
    return out


def append_table_row(row: Dict[str, Any], path: str, columns: Sequence[str]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    new_file = not out.exists()
    with open(out, 'a', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        if new_file:
            writer.writerow(list(columns))
        writer.writerow([_cell(row.get(name)) for name in columns])
    return out
