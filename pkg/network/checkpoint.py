"""
检查点读写
Little-endian binary: header {magic, version, step, layer manifest, metadata},
then float32 parameters in manifest order, then optional Adam moments
"""

import json
import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from network.adam import AdamState
from network.qnetwork import MAP_CHANNELS, NUM_ACTIONS, NetworkParams, layer_shapes


logger = logging.getLogger(__name__)

MAGIC = b'NDQN'
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """检查点无法读取或与网络清单不符"""


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.offset = 0
        self.path = path

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint (header ends early)")
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def raw(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def floats(self, shape: Tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        if self.offset + 4 * count > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint while reading {what}")
        array = np.frombuffer(self.data, dtype='<f4', count=count, offset=self.offset)
        self.offset += 4 * count
        return array.reshape(shape).astype(np.float32)


def save_checkpoint(
    path: str,
    params: NetworkParams,
    adam: Optional[AdamState] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    保存检查点

    Args:
        path: 输出文件
        params: 网络参数
        adam: Adam 状态 (可选)
        metadata: 训练步数等元数据，需可 JSON 序列化

    Returns:
        写入的路径
    """
    metadata = dict(metadata or {})
    step = int(metadata.get('step', 0))
    meta_bytes = json.dumps(metadata, sort_keys=True).encode('utf-8')

    chunks: List[bytes] = [struct.pack('<4sIQI', MAGIC, FORMAT_VERSION, step, len(params))]
    for name, shape in params.manifest():
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(encoded)) + encoded)
        chunks.append(struct.pack('<B', len(shape)) + struct.pack(f'<{len(shape)}I', *shape))
    chunks.append(struct.pack('<I', len(meta_bytes)) + meta_bytes)
    chunks.append(struct.pack('<BQ', 1 if adam is not None else 0, adam.t if adam is not None else 0))

    for tensor in params.values():
        chunks.append(np.ascontiguousarray(tensor, dtype='<f4').tobytes())
    if adam is not None:
        for moments in (adam.m, adam.v):
            for name in params:
                chunks.append(np.ascontiguousarray(moments[name], dtype='<f4').tobytes())

    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_suffix(out.suffix + '.tmp')
    tmp.write_bytes(b''.join(chunks))
    tmp.replace(out)
    logger.info(f"Checkpoint saved: {out} (step {step})")
    return out


def load_checkpoint(
    path: str,
    num_actions: int = NUM_ACTIONS,
    in_channels: int = MAP_CHANNELS,
) -> Tuple[NetworkParams, Optional[AdamState], Dict[str, Any]]:
    """
    读取检查点并按期望的网络清单校验

    Returns:
        (params, adam or None, metadata)
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    reader = _Reader(file_path.read_bytes(), str(path))

    magic, version, step, n_layers = reader.unpack('<4sIQI')
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")

    manifest = []
    for _ in range(n_layers):
        (name_len,) = reader.unpack('<H')
        name = reader.raw(name_len).decode('utf-8')
        (ndim,) = reader.unpack('<B')
        shape = reader.unpack(f'<{ndim}I')
        manifest.append((name, tuple(shape)))

    expected = layer_shapes(num_actions, in_channels)
    for name, shape in manifest:
        if name not in expected:
            raise CheckpointError(f"{path}: unexpected layer '{name}' in manifest")
        if shape != expected[name]:
            raise CheckpointError(
                f"{path}: layer '{name}' has shape {shape}, network expects {expected[name]}"
            )
    missing = [name for name in expected if name not in dict(manifest)]
    if missing:
        raise CheckpointError(f"{path}: layer '{missing[0]}' missing from manifest")

    (meta_len,) = reader.unpack('<I')
    try:
        metadata = json.loads(reader.raw(meta_len).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt metadata block: {e}") from e
    has_adam, adam_t = reader.unpack('<BQ')

    tensors = OrderedDict()
    for name, shape in manifest:
        tensors[name] = reader.floats(shape, name)
    params = NetworkParams(OrderedDict((name, tensors[name]) for name in expected), num_actions, in_channels)

    adam = None
    if has_adam:
        m = OrderedDict((name, reader.floats(shape, f'{name} (adam m)')) for name, shape in manifest)
        v = OrderedDict((name, reader.floats(shape, f'{name} (adam v)')) for name, shape in manifest)
        adam = AdamState(
            m=OrderedDict((name, m[name]) for name in expected),
            v=OrderedDict((name, v[name]) for name in expected),
            t=int(adam_t),
        )

    if reader.offset != len(reader.data):
        raise CheckpointError(f"{path}: {len(reader.data) - reader.offset} trailing bytes after checkpoint data")

    metadata.setdefault('step', int(step))
    logger.info(f"Checkpoint loaded: {path} (step {step})")
    return params, adam, metadata
