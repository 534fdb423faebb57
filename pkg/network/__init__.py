"""
Q 网络模块
NumPy dueling Q-network with manual backprop, Adam and the binary checkpoint format
"""

from .qnetwork import NetworkParams, forward, loss_and_gradients
from .adam import AdamState, adam_update
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    'NetworkParams', 'forward', 'loss_and_gradients',
    'AdamState', 'adam_update', 'load_checkpoint', 'save_checkpoint',
]
