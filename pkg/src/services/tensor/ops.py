"""
张量算子
每个算子返回前向结果，并登记一个把上游梯度映射为各输入梯度的反向规则
"""
import math
from typing import Optional, Sequence

import numpy as np

from src.utils.exceptions import (
    ContractError, DegenerateInputError, DegenerateMaskError, InputValidationError, ShapeError
)
from .tensor import Tensor, as_tensor

_GELU_C = math.sqrt(2.0 / math.pi)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """把广播后的梯度按原形状求和还原"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------- #
# 逐元素运算
# ---------------------------------------------------------------------- #

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(out, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(out, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return Tensor.from_op(out, (a, b), backward)


def exp(t: Tensor) -> Tensor:
    out = np.exp(t.data)
    return Tensor.from_op(out, (t,), lambda g: (g * out,))


def log(t: Tensor) -> Tensor:
    return Tensor.from_op(np.log(t.data), (t,), lambda g: (g / t.data,))


def tanh(t: Tensor) -> Tensor:
    out = np.tanh(t.data)
    return Tensor.from_op(out, (t,), lambda g: (g * (1.0 - out * out),))


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    ex = np.exp(x[~positive])
    out[~positive] = ex / (1.0 + ex)
    return out


def sigmoid(t: Tensor) -> Tensor:
    out = _stable_sigmoid(t.data)
    return Tensor.from_op(out, (t,), lambda g: (g * out * (1.0 - out),))


def relu(t: Tensor) -> Tensor:
    active = t.data > 0
    return Tensor.from_op(np.where(active, t.data, 0).astype(t.dtype), (t,), lambda g: (g * active,))


def gelu(t: Tensor) -> Tensor:
    """GELU 的 tanh 近似"""
    x = t.data
    inner = _GELU_C * (x + 0.044715 * x ** 3)
    th = np.tanh(inner)
    out = 0.5 * x * (1.0 + th)

    def backward(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * d_inner),)

    return Tensor.from_op(out, (t,), backward)


# ---------------------------------------------------------------------- #
# 形状与索引
# ---------------------------------------------------------------------- #

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """二维矩阵乘法"""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul 只接受二维张量: {a.shape} x {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul 内维不一致: {a.shape} x {b.shape}")
    out = a.data @ b.data

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor.from_op(out, (a, b), backward)


def transpose(t: Tensor) -> Tensor:
    if t.ndim != 2:
        raise ShapeError(f"transpose 只接受二维张量，实际 {t.shape}")
    return Tensor.from_op(t.data.T, (t,), lambda g: (g.T,))


def reshape(t: Tensor, shape) -> Tensor:
    original = t.shape
    return Tensor.from_op(t.data.reshape(shape), (t,), lambda g: (g.reshape(original),))


def index(t: Tensor, key) -> Tensor:
    """切片/高级索引，反向时按位置散加"""
    out = t.data[key]

    def backward(g):
        full = np.zeros_like(t.data)
        np.add.at(full, key, g)
        return (full,)

    return Tensor.from_op(np.array(out), (t,), backward)


def gather_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """按行号取嵌入表的行（梯度散加，重复 id 正确累积）"""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise InputValidationError(f"行号越界: 取值范围 [{ids.min()}, {ids.max()}]，表大小 {table.shape[0]}")
    return index(table, ids)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor.from_op(out, tensors, backward)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


# ---------------------------------------------------------------------- #
# 归约
# ---------------------------------------------------------------------- #

def sum(t: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    out = t.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, t.shape).copy(),)

    return Tensor.from_op(np.asarray(out), (t,), backward)


def mean(t: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = t.size if axis is None else t.shape[axis]
    return div(sum(t, axis=axis, keepdims=keepdims), float(count))


def max_rows(t: Tensor) -> Tensor:
    """按列取各行最大值（沿位置维的最大池化），梯度流向第一个最大位置"""
    if t.ndim != 2 or t.shape[0] == 0:
        raise ShapeError(f"max_rows 需要非空二维张量，实际 {t.shape}")
    winners = np.argmax(t.data, axis=0)
    columns = np.arange(t.shape[1])
    out = t.data[winners, columns][None, :]

    def backward(g):
        full = np.zeros_like(t.data)
        full[winners, columns] = g[0]
        return (full,)

    return Tensor.from_op(out, (t,), backward)


def unfold_rows(t: Tensor, width: int) -> Tensor:
    """把 (n, d) 展开为所有长度 width 的窗口 (n-width+1, width*d)，用于一维卷积"""
    n, d = t.shape
    if width < 1 or width > n:
        raise ShapeError(f"窗口宽度 {width} 不适用于长度 {n}")
    starts = np.arange(n - width + 1)
    rows = starts[:, None] + np.arange(width)[None, :]
    out = t.data[rows].reshape(len(starts), width * d)

    def backward(g):
        full = np.zeros_like(t.data)
        np.add.at(full, rows, g.reshape(len(starts), width, d))
        return (full,)

    return Tensor.from_op(out, (t,), backward)


# ---------------------------------------------------------------------- #
# 归一化与损失
# ---------------------------------------------------------------------- #

def softmax_rows(t: Tensor, mask: Optional[Sequence[bool]] = None) -> Tensor:
    """
    按行 softmax。mask 每列一个标志，True 表示保留；被屏蔽的列权重恰好为0。
    先减去行最大值保证数值稳定。
    """
    x = t.data
    if x.ndim != 2:
        raise ShapeError(f"softmax_rows 需要二维张量，实际 {t.shape}")
    if mask is None:
        keep = np.ones(x.shape[1], dtype=bool)
    else:
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != (x.shape[1],):
            raise ShapeError(f"掩码长度 {keep.shape} 与列数 {x.shape[1]} 不一致")
    if not keep.any():
        raise DegenerateMaskError("掩码屏蔽了全部列，softmax 无定义")

    shifted = np.where(keep, x, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    e = np.where(keep, np.exp(shifted), 0.0)
    out = (e / e.sum(axis=1, keepdims=True)).astype(x.dtype)

    def backward(g):
        return (out * (g - (g * out).sum(axis=1, keepdims=True)),)

    return Tensor.from_op(out, (t,), backward)


def layer_norm(t: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-12) -> Tensor:
    """沿最后一维做层归一化"""
    x = t.data
    d = x.shape[-1]
    if d < 2:
        raise DegenerateInputError(f"层归一化要求最后一维至少为2，实际 {d}")
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(f"增益/偏置形状 {gain.shape}/{bias.shape} 与最后一维 {d} 不匹配")

    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = centered * rstd
    out = xhat * gain.data + bias.data

    def backward(g):
        dxhat = g * gain.data
        dx = rstd * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        reduce_axes = tuple(range(x.ndim - 1))
        return dx, (g * xhat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)

    return Tensor.from_op(out, (t, gain, bias), backward)


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z)))


def logistic_loss(logit: Tensor, label: int) -> Tensor:
    """
    二分类对数损失 -[y ln σ(z) + (1-y) ln(1-σ(z))]，在对数空间计算，
    写作 softplus(z) - y·z，梯度为 σ(z) - y
    """
    if label not in (0, 1):
        raise InputValidationError(f"标签必须是 0 或 1，实际 {label!r}")
    logit = as_tensor(logit)
    if logit.size != 1:
        raise ShapeError(f"logistic_loss 需要标量 logit，实际形状 {logit.shape}")
    z = logit.data.reshape(())
    out = np.asarray(_softplus(z) - label * z, dtype=logit.dtype)

    def backward(g):
        return ((g * (_stable_sigmoid(np.atleast_1d(z))[0] - label)).reshape(logit.shape),)

    return Tensor.from_op(out, (logit,), backward)


def cross_entropy_rows(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """逐行 softmax 交叉熵的平均值（log-sum-exp 形式）"""
    x = logits.data
    targets = np.asarray(targets, dtype=np.int64)
    if x.ndim != 2 or targets.shape != (x.shape[0],):
        raise ShapeError(f"logits {x.shape} 与目标 {targets.shape} 不匹配")
    if x.shape[0] == 0:
        raise ContractError("交叉熵没有任何目标位置")
    rows = np.arange(x.shape[0])
    shifted = x - x.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    out = np.asarray((log_z - shifted[rows, targets]).mean(), dtype=x.dtype)

    def backward(g):
        probs = np.exp(shifted - log_z[:, None])
        probs[rows, targets] -= 1.0
        return (g * probs / x.shape[0],)

    return Tensor.from_op(out, (logits,), backward)


def dropout(t: Tensor, rate: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """训练期随机置零并按 1/(1-rate) 缩放；推理期为恒等"""
    if not training or rate <= 0.0:
        return t
    if rng is None:
        raise ContractError("训练模式下 dropout 需要随机数生成器")
    keep = (rng.random(t.shape) >= rate).astype(t.dtype) / (1.0 - rate)
    return Tensor.from_op(t.data * keep, (t,), lambda g: (g * keep,))
