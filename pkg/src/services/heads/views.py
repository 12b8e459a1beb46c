"""
从编码器各层隐藏状态中取分类头的输入特征
"""
from collections import OrderedDict
from typing import Mapping, Optional

import numpy as np

from src.models.config import FeatureView
from src.services.encoder.model import HiddenStack
from src.services.tensor import Tensor, concat, softmax_rows
from src.utils.exceptions import ConfigError

LAYER_WEIGHTS = "view.layer_weights"


def weighted_layer_count(mode: FeatureView, num_blocks: int) -> int:
    if mode is FeatureView.SUM_LAST_4:
        return 4
    if mode is FeatureView.SUM_ALL:
        return num_blocks + 1
    return 0


def view_param_shapes(mode: FeatureView, num_blocks: int) -> "OrderedDict":
    count = weighted_layer_count(mode, num_blocks)
    return OrderedDict([(LAYER_WEIGHTS, (count,))]) if count else OrderedDict()


def init_view_params(mode: FeatureView, num_blocks: int) -> "OrderedDict[str, Tensor]":
    """层权重初始为0，即各层等权平均"""
    return OrderedDict(
        (name, Tensor(np.zeros(shape), requires_grad=True, name=name))
        for name, shape in view_param_shapes(mode, num_blocks).items()
    )


def feature_view(
    stack: HiddenStack,
    mode: FeatureView,
    params: Optional[Mapping[str, Tensor]] = None,
) -> Tensor:
    L = stack.num_blocks
    if L < mode.min_layers:
        raise ConfigError(f"特征视图 {mode.value} 需要至少 {mode.min_layers} 个编码块，当前只有 {L} 个")

    if mode is FeatureView.LAST_LAYER:
        return stack.layers[L]
    if mode is FeatureView.SECOND_TO_LAST:
        return stack.layers[L - 1]
    if mode is FeatureView.EMBEDDINGS:
        return stack.layers[0]
    if mode is FeatureView.CONCAT_LAST_4:
        return concat(stack.layers[L - 3:], axis=1)

    count = weighted_layer_count(mode, L)
    if params is None or LAYER_WEIGHTS not in params:
        raise ConfigError(f"特征视图 {mode.value} 缺少参数 {LAYER_WEIGHTS}")
    weights = softmax_rows(params[LAYER_WEIGHTS].reshape((1, count)))
    layers = stack.layers[L + 1 - count:]
    mixed = weights[:, 0:1] * layers[0]
    for i in range(1, count):
        mixed = mixed + weights[:, i:i + 1] * layers[i]
    return mixed
