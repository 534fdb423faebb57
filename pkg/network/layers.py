"""
网络层原语
Same-padded strided convolution (im2col) and dense layers with analytic backward passes
"""

import math
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def same_padding(size: int, kernel: int, stride: int) -> Tuple[int, int, int]:
    """
    'same' 填充: out = ceil(size / stride)

    Returns:
        (out_size, pad_before, pad_after)
    """
    out = int(math.ceil(size / stride))
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return out, before, total - before


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    """
    x: (B, C, H, W), w: (O, C, k, k), b: (O,)

    Returns:
        (out (B, O, Ho, Wo), cache)
    """
    batch, channels, height, width = x.shape
    out_channels, in_channels, kernel, _ = w.shape
    if channels != in_channels:
        raise ValueError(f"conv expects {in_channels} input channels, got {channels}")

    out_h, pad_t, pad_b = same_padding(height, kernel, stride)
    out_w, pad_l, pad_r = same_padding(width, kernel, stride)
    padded = np.pad(x, ((0, 0), (0, 0), (pad_t, pad_b), (pad_l, pad_r)))

    windows = sliding_window_view(padded, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(batch * out_h * out_w, channels * kernel * kernel)
    out = cols @ w.reshape(out_channels, -1).T + b
    out = np.ascontiguousarray(out.reshape(batch, out_h, out_w, out_channels).transpose(0, 3, 1, 2))

    cache = (x.shape, padded.shape, (pad_t, pad_l), cols, w, stride)
    return out, cache


def conv2d_backward(dout: np.ndarray, cache, need_dx: bool = True):
    """
    Returns:
        (dx or None, dw, db)
    """
    x_shape, padded_shape, (pad_t, pad_l), cols, w, stride = cache
    batch, out_channels, out_h, out_w = dout.shape
    _, channels, kernel, _ = w.shape

    dout_flat = dout.transpose(0, 2, 3, 1).reshape(-1, out_channels)
    dw = (dout_flat.T @ cols).reshape(w.shape)
    db = dout_flat.sum(axis=0)
    if not need_dx:
        return None, dw, db

    dcols = (dout_flat @ w.reshape(out_channels, -1)).reshape(batch, out_h, out_w, channels, kernel, kernel)
    dpadded = np.zeros(padded_shape, dtype=dout.dtype)
    h_span = stride * (out_h - 1) + 1
    w_span = stride * (out_w - 1) + 1
    for i in range(kernel):
        for j in range(kernel):
            dpadded[:, :, i:i + h_span:stride, j:j + w_span:stride] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)

    height, width = x_shape[2], x_shape[3]
    return dpadded[:, :, pad_t:pad_t + height, pad_l:pad_l + width], dw, db


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (B, in), w: (in, out)"""
    return x @ w + b, (x, w)


def dense_backward(dout: np.ndarray, cache, need_dx: bool = True):
    x, w = cache
    dw = x.T @ dout
    db = dout.sum(axis=0)
    dx = dout @ w.T if need_dx else None
    return dx, dw, db


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dout: np.ndarray, activated: np.ndarray) -> np.ndarray:
    return dout * (activated > 0)
