"""
分类头抽象基类
所有分类头把 (SEQ_LEN, d) 特征矩阵映射为一个情感 logit；
BERT 特征和静态词向量走同一份实现
"""
from abc import ABC, abstractmethod
from collections import OrderedDict
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from src.models.config import HeadKind, HeadSpec
from src.services.tensor import Tensor, concat, ops

Shape = Tuple[int, ...]


def xavier_uniform(rng: np.random.Generator, shape: Shape) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def window_rows(rows: Tensor, width: int) -> Tensor:
    """
    卷积窗口的输入行。真实长度不足 width 时在尾部补零行，
    使所有至少含一个真实位置的窗口都参与，而且不读取任何 [PAD] 行
    """
    n, d = rows.shape
    if n >= width:
        return rows
    return concat([rows, ops.zeros((width - 1, d))], axis=0)


class ClassifierHead(ABC):
    """分类头接口"""

    kind: HeadKind

    def __init__(self, spec: HeadSpec):
        self.spec = spec

    @abstractmethod
    def param_shapes(self, input_dim: int) -> "OrderedDict[str, Shape]":
        """参数名与形状，名字统一以 head. 开头"""

    @abstractmethod
    def forward(
        self,
        features: Tensor,
        real_length: int,
        params: Mapping[str, Tensor],
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """返回标量 logit"""

    def init_params(self, input_dim: int, rng: np.random.Generator) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = OrderedDict()
        for name, shape in self.param_shapes(input_dim).items():
            values = np.zeros(shape) if name.endswith(".bias") else xavier_uniform(rng, shape)
            params[name] = Tensor(values, requires_grad=True, name=name)
        return params

    def _output(self, pooled: Tensor, params: Mapping[str, Tensor], training: bool, rng) -> Tensor:
        pooled = ops.dropout(pooled, self.spec.dropout_rate, rng, training)
        logit = pooled @ params["head.out.weight"] + params["head.out.bias"]
        return logit.reshape(())
