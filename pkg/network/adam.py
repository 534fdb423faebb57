"""
Adam 优化器
Bias-corrected Adam over a name -> array parameter mapping (in-place, single writer)
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np


@dataclass
class AdamState:
    """一阶/二阶矩与步数"""
    m: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    v: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray], **kwargs) -> 'AdamState':
        return cls(
            m=OrderedDict((k, np.zeros_like(p)) for k, p in params.items()),
            v=OrderedDict((k, np.zeros_like(p)) for k, p in params.items()),
            **kwargs,
        )


def adam_update(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> Tuple[Mapping[str, np.ndarray], AdamState]:
    """
    一步 Adam 更新，参数数组原地修改

    Args:
        params: 参数 (NetworkParams 或 dict)
        grads: 同名梯度
        state: Adam 状态
        lr: 学习率

    Returns:
        (params, state)
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t

    for name, param in params.items():
        grad = grads[name]
        if grad.shape != param.shape:
            raise ValueError(f"gradient for {name} has shape {grad.shape}, expected {param.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(param.dtype, copy=False)

    return params, state
