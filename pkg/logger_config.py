"""
日志配置模块
提供统一的日志配置和训练/评估指标收集
"""

import logging
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Union


def setup_logger(
    name: str = "desk_nav",
    log_dir: str = "logs",
    log_level: Union[int, str] = logging.INFO,
    console_output: bool = True
) -> logging.Logger:
    """
    设置日志记录器

    Args:
        name: 日志记录器名称
        log_dir: 日志目录
        log_level: 日志级别 (整数或 'INFO' 这样的名称)
        console_output: 是否输出到控制台

    Returns:
        配置好的日志记录器
    """
    if isinstance(log_level, str):
        level = logging.getLevelName(log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"unknown log level '{log_level}'")
        log_level = level

    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # 重复调用时替换旧的 handlers
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    formatter = logging.Formatter(
        fmt='%(asctime)s | %(name)-25s | %(levelname)-8s | %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # 文件handler - 所有日志
    log_file = log_path / f"app_{datetime.now().strftime('%Y%m%d')}.log"
    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    # 错误日志单独记录
    error_log_file = log_path / f"error_{datetime.now().strftime('%Y%m%d')}.log"
    error_handler = RotatingFileHandler(
        error_log_file,
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding='utf-8'
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)
    logger.addHandler(error_handler)

    if console_output:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(logging.Formatter(
            fmt='%(levelname)-8s | %(name)-20s | %(message)s'
        ))
        logger.addHandler(console_handler)

    logger.propagate = False
    return logger


class MetricsCollector:
    """指标收集器 - 训练过程中的回合与更新计数"""

    def __init__(self):
        self.metrics = {
            'episodes_total': 0,
            'arrived': 0,
            'collided': 0,
            'timeouts': 0,
            'env_steps': 0,
            'updates': 0,
            'average_return': 0.0,
            'average_loss': 0.0,
            'episodes_by_level': {},
            'returns': [],
            'losses': [],
        }

    def record_episode(self, outcome: str, episode_return: float, steps: int, level: int):
        """记录回合指标"""
        self.metrics['episodes_total'] += 1
        if outcome == 'arrived':
            self.metrics['arrived'] += 1
        elif outcome == 'collided':
            self.metrics['collided'] += 1
        else:
            self.metrics['timeouts'] += 1

        self.metrics['env_steps'] += steps
        by_level = self.metrics['episodes_by_level']
        by_level[level] = by_level.get(level, 0) + 1

        self.metrics['returns'].append(episode_return)
        self.metrics['average_return'] = sum(self.metrics['returns']) / len(self.metrics['returns'])

    def record_update(self, loss: float):
        self.metrics['updates'] += 1
        self.metrics['losses'].append(loss)
        # 只保留最近的损失用于平均
        if len(self.metrics['losses']) > 1000:
            del self.metrics['losses'][:-1000]
        self.metrics['average_loss'] = sum(self.metrics['losses']) / len(self.metrics['losses'])

    def success_rate(self) -> float:
        total = self.metrics['episodes_total']
        return self.metrics['arrived'] / total if total else 0.0

    def get_metrics(self) -> dict:
        """获取所有指标"""
        return self.metrics.copy()

    def get_summary(self) -> str:
        """获取指标摘要"""
        total = self.metrics['episodes_total']
        success_rate = self.metrics['arrived'] / total * 100 if total > 0 else 0
        levels = ", ".join(
            f"L{level}: {count}" for level, count in sorted(self.metrics['episodes_by_level'].items())
        ) or "-"

        return f"""
        Metrics Summary:
        ================
        Episodes: {total}
        Arrived: {self.metrics['arrived']} ({success_rate:.1f}%)
        Collided: {self.metrics['collided']}
        Timeouts: {self.metrics['timeouts']}
        Env Steps: {self.metrics['env_steps']}
        Updates: {self.metrics['updates']}
        Avg Return: {self.metrics['average_return']:.2f}
        Avg Loss (last 1000): {self.metrics['average_loss']:.4f}

        Episodes per level: {levels}
        """
