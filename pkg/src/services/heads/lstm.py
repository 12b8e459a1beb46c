"""
LSTM 分类头
只在真实位置上循环，取最后一个真实位置的隐藏状态分类
"""
from collections import OrderedDict
from typing import List, Mapping

import numpy as np

from src.models.config import HeadKind
from src.services.tensor import Tensor, ops, sigmoid, tanh
from .base import ClassifierHead, xavier_uniform


def lstm_param_shapes(prefix: str, input_dim: int, size: int) -> "OrderedDict":
    return OrderedDict([
        (f"{prefix}.input_weight", (input_dim, 4 * size)),
        (f"{prefix}.recurrent_weight", (size, 4 * size)),
        (f"{prefix}.bias", (4 * size,)),
    ])


def init_lstm_params(prefix: str, input_dim: int, size: int, rng: np.random.Generator):
    """门顺序 i, f, g, o；遗忘门偏置初始化为1"""
    bias = np.zeros(4 * size)
    bias[size:2 * size] = 1.0
    return OrderedDict([
        (f"{prefix}.input_weight", Tensor(xavier_uniform(rng, (input_dim, 4 * size)), requires_grad=True, name=f"{prefix}.input_weight")),
        (f"{prefix}.recurrent_weight", Tensor(xavier_uniform(rng, (size, 4 * size)), requires_grad=True, name=f"{prefix}.recurrent_weight")),
        (f"{prefix}.bias", Tensor(bias, requires_grad=True, name=f"{prefix}.bias")),
    ])


def run_lstm(rows: Tensor, params: Mapping[str, Tensor], prefix: str, size: int, reverse: bool = False) -> List[Tensor]:
    """按处理顺序返回每一步的隐藏状态 (1, size)"""
    n = rows.shape[0]
    if n == 0:
        return []
    projected = rows @ params[f"{prefix}.input_weight"] + params[f"{prefix}.bias"]
    recurrent = params[f"{prefix}.recurrent_weight"]
    h = ops.zeros((1, size))
    c = ops.zeros((1, size))
    states = []
    steps = range(n - 1, -1, -1) if reverse else range(n)
    for t in steps:
        z = projected[t:t + 1] + h @ recurrent
        i = sigmoid(z[:, 0:size])
        f = sigmoid(z[:, size:2 * size])
        g = tanh(z[:, 2 * size:3 * size])
        o = sigmoid(z[:, 3 * size:4 * size])
        c = f * c + i * g
        h = o * tanh(c)
        states.append(h)
    return states


class LstmHead(ClassifierHead):
    kind = HeadKind.LSTM

    def param_shapes(self, input_dim: int):
        size = self.spec.lstm_size
        shapes = lstm_param_shapes("head.lstm", input_dim, size)
        shapes["head.out.weight"] = (size, 1)
        shapes["head.out.bias"] = (1,)
        return shapes

    def init_params(self, input_dim, rng):
        size = self.spec.lstm_size
        params = init_lstm_params("head.lstm", input_dim, size, rng)
        params["head.out.weight"] = Tensor(xavier_uniform(rng, (size, 1)), requires_grad=True, name="head.out.weight")
        params["head.out.bias"] = Tensor(np.zeros(1), requires_grad=True, name="head.out.bias")
        return params

    def forward(self, features, real_length, params, training=False, rng=None):
        states = run_lstm(features[:real_length], params, "head.lstm", self.spec.lstm_size)
        last = states[-1] if states else ops.zeros((1, self.spec.lstm_size))
        return self._output(last, params, training, rng)
