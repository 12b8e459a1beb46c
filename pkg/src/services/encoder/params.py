"""
编码器参数的形状与初始化
"""
from collections import OrderedDict
from typing import Dict, Mapping, Tuple

import numpy as np

from src.config.settings import settings
from src.models.config import EncoderConfig
from src.services.tensor import Tensor

Shape = Tuple[int, ...]

MLM_PREFIX = "mlm."


def encoder_param_shapes(config: EncoderConfig) -> "OrderedDict[str, Shape]":
    """嵌入层 + L 个编码块的参数名与形状（无段嵌入）"""
    h, f = config.h, config.f
    shapes: "OrderedDict[str, Shape]" = OrderedDict()
    shapes["embeddings.token"] = (config.vocab_size, h)
    shapes["embeddings.position"] = (config.seq_len, h)
    shapes["embeddings.norm.gain"] = (h,)
    shapes["embeddings.norm.bias"] = (h,)
    for i in range(config.L):
        prefix = f"layers.{i}"
        for proj in ("query", "key", "value", "output"):
            shapes[f"{prefix}.attention.{proj}.weight"] = (h, h)
            shapes[f"{prefix}.attention.{proj}.bias"] = (h,)
        shapes[f"{prefix}.attention_norm.gain"] = (h,)
        shapes[f"{prefix}.attention_norm.bias"] = (h,)
        shapes[f"{prefix}.ffn.inner.weight"] = (h, f)
        shapes[f"{prefix}.ffn.inner.bias"] = (f,)
        shapes[f"{prefix}.ffn.outer.weight"] = (f, h)
        shapes[f"{prefix}.ffn.outer.bias"] = (h,)
        shapes[f"{prefix}.ffn_norm.gain"] = (h,)
        shapes[f"{prefix}.ffn_norm.bias"] = (h,)
    return shapes


def mlm_param_shapes(config: EncoderConfig) -> "OrderedDict[str, Shape]":
    """掩码语言模型输出头；输出投影与词嵌入共享权重"""
    h = config.h
    return OrderedDict([
        (f"{MLM_PREFIX}transform.weight", (h, h)),
        (f"{MLM_PREFIX}transform.bias", (h,)),
        (f"{MLM_PREFIX}norm.gain", (h,)),
        (f"{MLM_PREFIX}norm.bias", (h,)),
        (f"{MLM_PREFIX}output_bias", (config.vocab_size,)),
    ])


def truncated_normal(rng: np.random.Generator, shape: Shape, std: float) -> np.ndarray:
    """截断正态：超出两倍标准差的样本重新采样"""
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > 2 * std
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > 2 * std
    return values


def _init_from_shapes(shapes: Mapping[str, Shape], rng: np.random.Generator, std: float) -> Dict[str, Tensor]:
    params: Dict[str, Tensor] = OrderedDict()
    for name, shape in shapes.items():
        if name.endswith(".gain"):
            values = np.ones(shape)
        elif name.endswith(".bias") or name.endswith("output_bias"):
            values = np.zeros(shape)
        else:
            values = truncated_normal(rng, shape, std)
        params[name] = Tensor(values, requires_grad=True, name=name)
    return params


def init_encoder_params(config: EncoderConfig, rng: np.random.Generator, std: float = None) -> Dict[str, Tensor]:
    return _init_from_shapes(encoder_param_shapes(config), rng, settings.INIT_STD if std is None else std)


def init_mlm_params(config: EncoderConfig, rng: np.random.Generator, std: float = None) -> Dict[str, Tensor]:
    return _init_from_shapes(mlm_param_shapes(config), rng, settings.INIT_STD if std is None else std)


def encoder_only(params: Mapping[str, Tensor]) -> Dict[str, Tensor]:
    """去掉 MLM 输出头，只保留编码器参数"""
    return OrderedDict((name, p) for name, p in params.items() if not name.startswith(MLM_PREFIX))
