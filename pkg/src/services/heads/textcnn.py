"""
TextCNN 分类头
每个区域大小一组一维卷积 + ReLU，在完全落在真实位置内的窗口上做最大池化
"""
from collections import OrderedDict

from src.models.config import HeadKind
from src.services.tensor import Tensor, concat, max_rows, ops, relu, unfold_rows
from .base import ClassifierHead, window_rows


class TextCnnHead(ClassifierHead):
    kind = HeadKind.TEXTCNN

    def param_shapes(self, input_dim: int):
        filters = self.spec.textcnn_filters
        shapes = OrderedDict()
        for r in self.spec.region_sizes:
            shapes[f"head.conv{r}.weight"] = (r * input_dim, filters)
            shapes[f"head.conv{r}.bias"] = (filters,)
        shapes["head.out.weight"] = (filters * len(self.spec.region_sizes), 1)
        shapes["head.out.bias"] = (1,)
        return shapes

    def pooled_features(self, features: Tensor, real_length: int, params) -> Tensor:
        """各区域池化结果拼接，维度为 len(region_sizes)·F"""
        filters = self.spec.textcnn_filters
        rows = features[:real_length]
        blocks = []
        for r in self.spec.region_sizes:
            if real_length == 0:
                blocks.append(ops.zeros((1, filters)))
                continue
            windows = unfold_rows(window_rows(rows, r), r)
            activations = relu(windows @ params[f"head.conv{r}.weight"] + params[f"head.conv{r}.bias"])
            blocks.append(max_rows(activations))
        return concat(blocks, axis=1)

    def forward(self, features, real_length, params, training=False, rng=None):
        return self._output(self.pooled_features(features, real_length, params), params, training, rng)
