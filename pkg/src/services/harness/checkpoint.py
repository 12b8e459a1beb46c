"""
二进制检查点

布局（整数均为小端）:
    magic(8) | version u32 | payload_len u64 | payload
    payload = config_len u32 | config json(键排序) | tensor_count u32 | tensor*
    tensor  = name_len u16 | name utf-8 | rank u8 | dims u32*rank | float32 数据
张量按名字排序写入，同一个检查点保存多次得到完全相同的字节
"""
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from src.models.config import EncoderConfig, HeadSpec
from src.utils.exceptions import CheckpointVersionError, IntegrityError, ShapeValidationError
from src.utils.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"VSBERT\x00\x01"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQ")


class CheckpointKind(str, Enum):
    PRETRAINED = "pretrained"
    CLASSIFIER = "classifier"


@dataclass
class Checkpoint:
    """预训练编码器或微调后的分类器"""
    kind: CheckpointKind
    encoder_config: EncoderConfig
    tensors: Dict[str, np.ndarray]
    tokenizer_hash: str
    seed: int
    step_count: int = 0
    head: Optional[HeadSpec] = None
    frozen_encoder: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def config_blob(self) -> bytes:
        blob = {
            "kind": self.kind.value,
            "encoder": self.encoder_config.model_dump(mode="json"),
            "head": self.head.model_dump(mode="json") if self.head is not None else None,
            "frozen_encoder": self.frozen_encoder,
            "tokenizer_hash": self.tokenizer_hash,
            "seed": self.seed,
            "step_count": self.step_count,
            "metadata": self.metadata,
        }
        return json.dumps(blob, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")

    def encoder_tensors(self) -> Dict[str, np.ndarray]:
        return {name: values for name, values in self.tensors.items() if not name.startswith(("mlm.", "head.", "view."))}


def expected_shapes(checkpoint: Checkpoint) -> Dict[str, Tuple[int, ...]]:
    """按检查点配置推出每个张量应有的形状"""
    from src.services.encoder.params import encoder_param_shapes, mlm_param_shapes
    from src.services.heads.registry import head_param_shapes

    config = checkpoint.encoder_config
    shapes = dict(encoder_param_shapes(config))
    if checkpoint.kind is CheckpointKind.PRETRAINED:
        shapes.update(mlm_param_shapes(config))
    elif checkpoint.head is not None:
        shapes.update(head_param_shapes(checkpoint.head, config))
    return shapes


def validate_shapes(checkpoint: Checkpoint) -> None:
    """按名字顺序检查，报告第一个不一致的张量"""
    expected = expected_shapes(checkpoint)
    for name in sorted(set(expected) | set(checkpoint.tensors)):
        found = checkpoint.tensors[name].shape if name in checkpoint.tensors else None
        want = expected.get(name)
        if found is None or want is None or tuple(found) != tuple(want):
            raise ShapeValidationError(name, found, want)


def checkpoint_to_bytes(checkpoint: Checkpoint) -> bytes:
    config = checkpoint.config_blob()
    parts = [struct.pack("<I", len(config)), config, struct.pack("<I", len(checkpoint.tensors))]
    for name in sorted(checkpoint.tensors):
        values = np.ascontiguousarray(checkpoint.tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", values.ndim))
        parts.append(struct.pack(f"<{values.ndim}I", *values.shape))
        parts.append(values.tobytes())
    payload = b"".join(parts)
    return _HEADER.pack(MAGIC, checkpoint.version, len(payload)) + payload


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise IntegrityError(f"检查点内容不完整: 需要读取 {size} 字节，位置 {self.offset}/{len(self.payload)}")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))


def checkpoint_from_bytes(raw: bytes, validate: bool = True) -> Checkpoint:
    if len(raw) < _HEADER.size:
        raise IntegrityError(f"检查点文件过短: {len(raw)} 字节")
    magic, version, payload_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise IntegrityError("不是检查点文件（magic 不匹配）")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(version, FORMAT_VERSION)
    payload = raw[_HEADER.size:]
    if len(payload) != payload_len:
        raise IntegrityError(f"检查点长度不符: 头部记录 {payload_len} 字节，实际 {len(payload)} 字节")

    reader = _Reader(payload)
    (config_len,) = reader.unpack("<I")
    try:
        blob = json.loads(reader.take(config_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IntegrityError(f"检查点配置无法解析: {e}")

    (count,) = reader.unpack("<I")
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (rank,) = reader.unpack("<B")
        dims = reader.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        tensors[name] = np.frombuffer(reader.take(4 * size), dtype="<f4").reshape(dims).copy()
    if reader.offset != len(payload):
        raise IntegrityError(f"检查点末尾有 {len(payload) - reader.offset} 字节多余数据")

    try:
        checkpoint = Checkpoint(
            kind=CheckpointKind(blob["kind"]),
            encoder_config=EncoderConfig(**blob["encoder"]),
            tensors=tensors,
            tokenizer_hash=blob["tokenizer_hash"],
            seed=blob["seed"],
            step_count=blob["step_count"],
            head=HeadSpec(**blob["head"]) if blob.get("head") is not None else None,
            frozen_encoder=blob.get("frozen_encoder", False),
            metadata=blob.get("metadata", {}),
            version=version,
        )
    except (ValidationError, KeyError, TypeError, ValueError) as e:
        raise IntegrityError(f"检查点配置无效: {e}")
    if validate:
        validate_shapes(checkpoint)
    return checkpoint


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = checkpoint_to_bytes(checkpoint)
    path.write_bytes(raw)
    logger.info(f"检查点已保存: {path} ({checkpoint.kind.value}, {len(checkpoint.tensors)} 个张量, {len(raw)} 字节)")


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    checkpoint = checkpoint_from_bytes(Path(path).read_bytes())
    logger.info(f"检查点已加载: {path} ({checkpoint.kind.value}, step={checkpoint.step_count})")
    return checkpoint
