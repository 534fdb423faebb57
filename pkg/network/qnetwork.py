"""
Dueling Q 网络
Conv trunk over three stacked local maps, tiled goal/velocity features,
dueling value/advantage heads, squared TD loss with analytic gradients
"""

import logging
from collections import OrderedDict
from collections.abc import Mapping
from typing import Dict, Iterator, List, Tuple

import numpy as np

from network.layers import (
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    relu,
    relu_backward,
)


logger = logging.getLogger(__name__)

MAP_CHANNELS = 3
MAP_SIZE = 60
VECTOR_DIM = 4
NUM_ACTIONS = 28

# (name, stride) of every conv layer in forward order
CONV_STRIDES = OrderedDict([
    ('conv1', 4), ('conv2', 2), ('conv3', 1),
    ('conv4', 1), ('conv5', 1), ('conv6', 1),
])


class NonFiniteLossError(FloatingPointError):
    """前向输出或损失出现 NaN / inf"""


def layer_shapes(num_actions: int = NUM_ACTIONS, in_channels: int = MAP_CHANNELS) -> "OrderedDict[str, Tuple[int, ...]]":
    """参数清单: 名称 -> 形状 (权重后接偏置)"""
    spec = [
        ('conv1', (32, in_channels, 8, 8)),
        ('conv2', (64, 32, 4, 4)),
        ('conv3', (64, 64, 3, 3)),
        ('fc_vec', (VECTOR_DIM, 64)),
        ('conv4', (64, 64, 3, 3)),
        ('conv5', (64, 64, 3, 3)),
        ('conv6', (64, 64, 3, 3)),
        ('fc1', (4096, 512)),
        ('fc2', (512, 512)),
        ('value', (512, 1)),
        ('advantage', (512, num_actions)),
    ]
    shapes = OrderedDict()
    for name, w_shape in spec:
        shapes[f'{name}.w'] = w_shape
        shapes[f'{name}.b'] = (w_shape[0],) if name.startswith('conv') else (w_shape[1],)
    return shapes


class NetworkParams(Mapping):
    """网络全部参数，按清单顺序保存"""

    def __init__(self, tensors: Dict[str, np.ndarray], num_actions: int = NUM_ACTIONS, in_channels: int = MAP_CHANNELS):
        expected = layer_shapes(num_actions, in_channels)
        if list(tensors.keys()) != list(expected.keys()):
            missing = [k for k in expected if k not in tensors]
            raise ValueError(f"parameter set does not match the network manifest (missing: {missing})")
        for name, shape in expected.items():
            if tuple(tensors[name].shape) != shape:
                raise ValueError(f"parameter {name} has shape {tensors[name].shape}, expected {shape}")
        self.tensors: "OrderedDict[str, np.ndarray]" = OrderedDict(tensors)
        self.num_actions = num_actions
        self.in_channels = in_channels

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def dtype(self) -> np.dtype:
        return self.tensors['conv1.w'].dtype

    def manifest(self) -> List[Tuple[str, Tuple[int, ...]]]:
        return [(name, tuple(t.shape)) for name, t in self.tensors.items()]

    def copy(self) -> 'NetworkParams':
        return NetworkParams(
            OrderedDict((k, v.copy()) for k, v in self.tensors.items()),
            self.num_actions,
            self.in_channels,
        )

    def astype(self, dtype) -> 'NetworkParams':
        return NetworkParams(
            OrderedDict((k, v.astype(dtype)) for k, v in self.tensors.items()),
            self.num_actions,
            self.in_channels,
        )

    def copy_from(self, other: 'NetworkParams'):
        """原地复制参数值 (目标网络同步)"""
        for name, tensor in self.tensors.items():
            np.copyto(tensor, other.tensors[name])

    def identical_to(self, other: 'NetworkParams') -> bool:
        return all(np.array_equal(t, other.tensors[k]) for k, t in self.tensors.items())

    @classmethod
    def initialize(cls, rng: np.random.Generator, dtype=np.float32, num_actions: int = NUM_ACTIONS,
                   in_channels: int = MAP_CHANNELS) -> 'NetworkParams':
        """He-uniform 权重，零偏置"""
        tensors = OrderedDict()
        for name, shape in layer_shapes(num_actions, in_channels).items():
            if name.endswith('.b'):
                tensors[name] = np.zeros(shape, dtype=dtype)
                continue
            fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
            limit = np.sqrt(6.0 / fan_in)
            tensors[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
        return cls(tensors, num_actions, in_channels)

    @classmethod
    def zeros(cls, dtype=np.float32, num_actions: int = NUM_ACTIONS, in_channels: int = MAP_CHANNELS) -> 'NetworkParams':
        tensors = OrderedDict(
            (name, np.zeros(shape, dtype=dtype))
            for name, shape in layer_shapes(num_actions, in_channels).items()
        )
        return cls(tensors, num_actions, in_channels)


def dueling_combine(value: np.ndarray, advantage: np.ndarray) -> np.ndarray:
    """Q = V + A - mean(A)"""
    return value + advantage - advantage.mean(axis=1, keepdims=True)


def _check_inputs(params: NetworkParams, maps: np.ndarray, vec: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    maps = np.asarray(maps)
    vec = np.asarray(vec)
    if maps.ndim != 4 or maps.shape[1:] != (params.in_channels, MAP_SIZE, MAP_SIZE):
        raise ValueError(
            f"maps must have shape (batch, {params.in_channels}, {MAP_SIZE}, {MAP_SIZE}), got {maps.shape}"
        )
    if vec.ndim != 2 or vec.shape != (maps.shape[0], VECTOR_DIM):
        raise ValueError(f"vec must have shape ({maps.shape[0]}, {VECTOR_DIM}), got {vec.shape}")
    if maps.shape[0] < 1:
        raise ValueError("batch must contain at least one sample")
    return maps.astype(params.dtype, copy=False), vec.astype(params.dtype, copy=False)


def forward(params: NetworkParams, maps: np.ndarray, vec: np.ndarray, return_cache: bool = False):
    """
    前向传播

    Args:
        params: 网络参数
        maps: (batch, 3, 60, 60)
        vec: (batch, 4)
        return_cache: 是否返回反向传播缓存

    Returns:
        Q (batch, num_actions)，或 (Q, cache)
    """
    maps, vec = _check_inputs(params, maps, vec)
    cache = {}
    activations = {}

    h = maps
    for name in ('conv1', 'conv2', 'conv3'):
        z, cache[name] = conv2d_forward(h, params[f'{name}.w'], params[f'{name}.b'], CONV_STRIDES[name])
        h = activations[name] = relu(z)

    zu, cache['fc_vec'] = dense_forward(vec, params['fc_vec.w'], params['fc_vec.b'])
    u = activations['fc_vec'] = relu(zu)

    # tiling: 64 维向量逐点加到 8x8 响应图上
    h = h + u[:, :, None, None]

    for name in ('conv4', 'conv5', 'conv6'):
        z, cache[name] = conv2d_forward(h, params[f'{name}.w'], params[f'{name}.b'], CONV_STRIDES[name])
        h = activations[name] = relu(z)

    conv_shape = h.shape
    flat = h.reshape(h.shape[0], -1)
    if flat.shape[1] != params['fc1.w'].shape[0]:
        raise ValueError(f"flatten width {flat.shape[1]} does not match fc1 input {params['fc1.w'].shape[0]}")

    z, cache['fc1'] = dense_forward(flat, params['fc1.w'], params['fc1.b'])
    h = activations['fc1'] = relu(z)
    z, cache['fc2'] = dense_forward(h, params['fc2.w'], params['fc2.b'])
    h = activations['fc2'] = relu(z)

    value, cache['value'] = dense_forward(h, params['value.w'], params['value.b'])
    advantage, cache['advantage'] = dense_forward(h, params['advantage.w'], params['advantage.b'])
    q = dueling_combine(value, advantage)

    if not return_cache:
        return q
    cache['activations'] = activations
    cache['conv_shape'] = conv_shape
    return q, cache


def backward(dq: np.ndarray, cache) -> "OrderedDict[str, np.ndarray]":
    """dL/dQ -> 每个参数的梯度"""
    acts = cache['activations']
    grads = {}

    d_value = dq.sum(axis=1, keepdims=True)
    d_adv = dq - dq.mean(axis=1, keepdims=True)
    dh_v, grads['value.w'], grads['value.b'] = dense_backward(d_value, cache['value'])
    dh_a, grads['advantage.w'], grads['advantage.b'] = dense_backward(d_adv, cache['advantage'])
    dh = relu_backward(dh_v + dh_a, acts['fc2'])

    dh, grads['fc2.w'], grads['fc2.b'] = dense_backward(dh, cache['fc2'])
    dh = relu_backward(dh, acts['fc1'])
    dh, grads['fc1.w'], grads['fc1.b'] = dense_backward(dh, cache['fc1'])
    dh = dh.reshape(cache['conv_shape'])

    for name in ('conv6', 'conv5', 'conv4'):
        dh = relu_backward(dh, acts[name])
        dh, grads[f'{name}.w'], grads[f'{name}.b'] = conv2d_backward(dh, cache[name])

    # tiling 加法的两个分支都接收梯度
    du = relu_backward(dh.sum(axis=(2, 3)), acts['fc_vec'])
    _, grads['fc_vec.w'], grads['fc_vec.b'] = dense_backward(du, cache['fc_vec'], need_dx=False)

    for name in ('conv3', 'conv2', 'conv1'):
        dh = relu_backward(dh, acts[name])
        dh, grads[f'{name}.w'], grads[f'{name}.b'] = conv2d_backward(dh, cache[name], need_dx=name != 'conv1')

    return grads


def loss_and_gradients(
    params: NetworkParams,
    maps: np.ndarray,
    vec: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    is_weights: np.ndarray,
) -> Tuple[float, "OrderedDict[str, np.ndarray]", np.ndarray]:
    """
    加权平方 TD 损失及其解析梯度

    Args:
        params: 在线网络参数
        maps, vec: 观测批次
        actions: 执行的动作 (batch,)
        targets: TD 目标 y (batch,)
        is_weights: 重要性采样权重 (batch,)

    Returns:
        (loss, grads, td_errors)，td_error = y - Q(s, a)
    """
    q, cache = forward(params, maps, vec, return_cache=True)
    if not np.all(np.isfinite(q)):
        raise NonFiniteLossError("non-finite Q values in forward pass")

    batch = q.shape[0]
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=q.dtype)
    weights = np.asarray(is_weights, dtype=q.dtype)
    if actions.shape != (batch,) or targets.shape != (batch,) or weights.shape != (batch,):
        raise ValueError("actions, targets and is_weights must all have shape (batch,)")

    rows = np.arange(batch)
    td_errors = targets - q[rows, actions]
    loss = float(np.mean(weights * td_errors ** 2))
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"non-finite loss {loss}")

    dq = np.zeros_like(q)
    dq[rows, actions] = -2.0 * weights * td_errors / batch
    grads = backward(dq, cache)
    ordered = OrderedDict((name, grads[name]) for name in params)
    return loss, ordered, td_errors
