"""
张量核心：稠密张量、反向自动微分、Adam 与梯度检查
"""
from .tensor import (
    Tensor, as_tensor, get_default_dtype, get_precision, is_grad_enabled, no_grad,
    precision, set_precision
)
from . import ops
from .ops import (
    add, concat, cross_entropy_rows, dropout, exp, gather_rows, gelu, index, layer_norm, log,
    logistic_loss, matmul, max_rows, mean, mul, relu, reshape, sigmoid, softmax_rows, sub, tanh,
    transpose, unfold_rows
)
from .optim import Adam, AdamState, adam_step
from .gradcheck import GradCheckReport, grad_check, grad_check_report


def backward(loss: Tensor) -> None:
    """函数式入口，等价于 loss.backward()"""
    loss.backward()


__all__ = [
    'Tensor', 'as_tensor', 'get_default_dtype', 'get_precision', 'is_grad_enabled', 'no_grad',
    'precision', 'set_precision', 'ops', 'add', 'concat', 'cross_entropy_rows', 'dropout', 'exp',
    'gather_rows', 'gelu', 'index', 'layer_norm', 'log', 'logistic_loss', 'matmul', 'max_rows',
    'mean', 'mul', 'relu', 'reshape', 'sigmoid', 'softmax_rows', 'sub', 'tanh', 'transpose',
    'unfold_rows', 'Adam', 'AdamState', 'adam_step', 'GradCheckReport', 'grad_check',
    'grad_check_report', 'backward',
]
