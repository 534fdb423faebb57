"""
训练模块
"""

from .trainer import Trainer, TrainResult

__all__ = ['Trainer', 'TrainResult']
