"""
迷你 BERT 编码器
嵌入 + L 个双向 Transformer 编码块，返回全部 L+1 层隐藏状态
"""
import math
from dataclasses import dataclass, field
from typing import List, Mapping, Optional

import numpy as np

from src.models.config import EncoderConfig
from src.services.tensor import Tensor, concat, dropout, gather_rows, gelu, layer_norm, softmax_rows
from src.services.tokenizer import EncodedSequence
from src.utils.exceptions import InputValidationError, NumericError

LAYER_NORM_EPS = 1e-12


@dataclass
class HiddenStack:
    """编码器各层输出：layers[0] 为嵌入输出，layers[i] 为第 i 个编码块输出"""
    layers: List[Tensor]
    attention_mask: np.ndarray
    attentions: List[np.ndarray] = field(default_factory=list)

    @property
    def num_blocks(self) -> int:
        return len(self.layers) - 1

    @property
    def real_length(self) -> int:
        return int(self.attention_mask.sum())

    def truncated(self) -> "HiddenStack":
        """只保留真实位置的行，分类头结果不变，用于冻结编码器时缓存特征"""
        n = self.real_length
        layers = [Tensor(layer.data[:n].copy(), dtype=layer.dtype) for layer in self.layers]
        return HiddenStack(layers=layers, attention_mask=np.ones(n, dtype=np.int64))


def _check_ids(seq: EncodedSequence, config: EncoderConfig) -> None:
    if len(seq) > config.seq_len:
        raise InputValidationError(f"序列长度 {len(seq)} 超过配置的 SEQ_LEN={config.seq_len}")
    bad = [i for i in seq.ids if not 0 <= i < config.vocab_size]
    if bad:
        raise InputValidationError(f"token id 超出词表大小 {config.vocab_size}: {bad[:5]}")


def embed(
    seq: EncodedSequence,
    params: Mapping[str, Tensor],
    config: EncoderConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """词嵌入 + 可学习位置嵌入，再做层归一化和 dropout"""
    _check_ids(seq, config)
    tokens = gather_rows(params["embeddings.token"], seq.ids)
    positions = params["embeddings.position"][:len(seq)]
    x = layer_norm(tokens + positions, params["embeddings.norm.gain"], params["embeddings.norm.bias"], LAYER_NORM_EPS)
    return dropout(x, config.dropout_rate, rng, training)


def _linear(x: Tensor, params: Mapping[str, Tensor], prefix: str) -> Tensor:
    return x @ params[f"{prefix}.weight"] + params[f"{prefix}.bias"]


def _self_attention(
    x: Tensor,
    keep: np.ndarray,
    params: Mapping[str, Tensor],
    prefix: str,
    config: EncoderConfig,
    attentions: Optional[List[np.ndarray]],
) -> Tensor:
    q = _linear(x, params, f"{prefix}.attention.query")
    k = _linear(x, params, f"{prefix}.attention.key")
    v = _linear(x, params, f"{prefix}.attention.value")
    dk = config.head_dim
    scale = 1.0 / math.sqrt(dk)

    contexts, probs_per_head = [], []
    for a in range(config.A):
        cols = slice(a * dk, (a + 1) * dk)
        scores = (q[:, cols] @ k[:, cols].T) * scale
        probs = softmax_rows(scores, keep)
        probs_per_head.append(probs.data)
        contexts.append(probs @ v[:, cols])
    if attentions is not None:
        attentions.append(np.stack(probs_per_head))
    return _linear(concat(contexts, axis=1), params, f"{prefix}.attention.output")


def encoder_block(
    x: Tensor,
    keep: np.ndarray,
    params: Mapping[str, Tensor],
    index: int,
    config: EncoderConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
    attentions: Optional[List[np.ndarray]] = None,
) -> Tensor:
    """自注意力 → 残差+归一化 → GELU 前馈 → 残差+归一化（后归一化顺序）"""
    prefix = f"layers.{index}"
    attended = dropout(_self_attention(x, keep, params, prefix, config, attentions), config.dropout_rate, rng, training)
    x = layer_norm(x + attended, params[f"{prefix}.attention_norm.gain"], params[f"{prefix}.attention_norm.bias"], LAYER_NORM_EPS)

    inner = gelu(_linear(x, params, f"{prefix}.ffn.inner"))
    outer = dropout(_linear(inner, params, f"{prefix}.ffn.outer"), config.dropout_rate, rng, training)
    return layer_norm(x + outer, params[f"{prefix}.ffn_norm.gain"], params[f"{prefix}.ffn_norm.bias"], LAYER_NORM_EPS)


def encode_sequence(
    seq: EncodedSequence,
    params: Mapping[str, Tensor],
    config: EncoderConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
    return_attention: bool = False,
) -> HiddenStack:
    """前向计算全部层；注意力对 [PAD] 列的权重恰好为0"""
    keep = np.asarray(seq.attention_mask, dtype=bool)
    attentions: Optional[List[np.ndarray]] = [] if return_attention else None

    x = embed(seq, params, config, training, rng)
    layers = [x]
    for i in range(config.L):
        x = encoder_block(x, keep, params, i, config, training, rng, attentions)
        if not np.all(np.isfinite(x.data)):
            raise NumericError(f"第 {i} 个编码块输出出现非有限值")
        layers.append(x)
    return HiddenStack(layers=layers, attention_mask=keep.astype(np.int64), attentions=attentions or [])
