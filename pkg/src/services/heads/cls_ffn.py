"""
[CLS] 分类头：取位置0的向量，过一层 tanh 前馈网络，再线性映射为 logit
"""
from collections import OrderedDict

from src.models.config import HeadKind
from src.services.tensor import tanh
from .base import ClassifierHead


class ClsFfnHead(ClassifierHead):
    kind = HeadKind.CLS_FFN

    def param_shapes(self, input_dim: int):
        hidden = self.spec.ffn_hidden
        return OrderedDict([
            ("head.ffn.weight", (input_dim, hidden)),
            ("head.ffn.bias", (hidden,)),
            ("head.out.weight", (hidden, 1)),
            ("head.out.bias", (1,)),
        ])

    def forward(self, features, real_length, params, training=False, rng=None):
        cls_vector = features[0:1]
        hidden = tanh(cls_vector @ params["head.ffn.weight"] + params["head.ffn.bias"])
        return self._output(hidden, params, training, rng)
