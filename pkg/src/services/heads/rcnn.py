"""
RCNN 分类头
前向 LSTM 给出左上下文，反向 LSTM 给出右上下文，
每个位置拼接 [左, 特征, 右] 后做 conv1d + ReLU + 最大池化
"""
from collections import OrderedDict

import numpy as np

from src.models.config import HeadKind
from src.services.tensor import Tensor, concat, max_rows, ops, relu, unfold_rows
from .base import ClassifierHead, window_rows, xavier_uniform
from .lstm import init_lstm_params, lstm_param_shapes, run_lstm


class RcnnHead(ClassifierHead):
    kind = HeadKind.RCNN

    def param_shapes(self, input_dim: int):
        size, filters, width = self.spec.rcnn_size, self.spec.rcnn_filters, self.spec.rcnn_width
        shapes = OrderedDict()
        shapes.update(lstm_param_shapes("head.left", input_dim, size))
        shapes.update(lstm_param_shapes("head.right", input_dim, size))
        shapes["head.conv.weight"] = (width * (2 * size + input_dim), filters)
        shapes["head.conv.bias"] = (filters,)
        shapes["head.out.weight"] = (filters, 1)
        shapes["head.out.bias"] = (1,)
        return shapes

    def init_params(self, input_dim, rng):
        size, filters, width = self.spec.rcnn_size, self.spec.rcnn_filters, self.spec.rcnn_width
        params = OrderedDict()
        params.update(init_lstm_params("head.left", input_dim, size, rng))
        params.update(init_lstm_params("head.right", input_dim, size, rng))
        for name, shape in (("head.conv.weight", (width * (2 * size + input_dim), filters)), ("head.out.weight", (filters, 1))):
            params[name] = Tensor(xavier_uniform(rng, shape), requires_grad=True, name=name)
        params["head.conv.bias"] = Tensor(np.zeros(filters), requires_grad=True, name="head.conv.bias")
        params["head.out.bias"] = Tensor(np.zeros(1), requires_grad=True, name="head.out.bias")
        return params

    def token_representation(self, features: Tensor, real_length: int, params) -> Tensor:
        """(n, 2·state_size + d)：左上下文不含当前词，右上下文同理"""
        size = self.spec.rcnn_size
        rows = features[:real_length]
        forward_states = run_lstm(rows, params, "head.left", size)
        backward_states = run_lstm(rows, params, "head.right", size, reverse=True)
        zero = ops.zeros((1, size))
        left = [zero] + forward_states[:-1]
        right_at = list(reversed(backward_states))
        right = right_at[1:] + [zero]
        return concat([concat(left, axis=0), rows, concat(right, axis=0)], axis=1)

    def forward(self, features, real_length, params, training=False, rng=None):
        width = self.spec.rcnn_width
        if real_length == 0:
            pooled = ops.zeros((1, self.spec.rcnn_filters))
        else:
            tokens = self.token_representation(features, real_length, params)
            windows = unfold_rows(window_rows(tokens, width), width)
            pooled = max_rows(relu(windows @ params["head.conv.weight"] + params["head.conv.bias"]))
        return self._output(pooled, params, training, rng)
