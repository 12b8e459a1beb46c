"""
分类头注册表与统一入口
"""
from collections import OrderedDict
from typing import Dict, Mapping, Optional, Type

import numpy as np

from src.models.base import Prediction, Sentiment
from src.models.config import EncoderConfig, HeadKind, HeadSpec
from src.services.encoder.model import HiddenStack
from src.services.tensor import Tensor
from src.utils.exceptions import ConfigError, ContractError
from .base import ClassifierHead
from .cls_ffn import ClsFfnHead
from .lstm import LstmHead
from .rcnn import RcnnHead
from .textcnn import TextCnnHead
from .views import feature_view, init_view_params, view_param_shapes

HEAD_REGISTRY: Dict[HeadKind, Type[ClassifierHead]] = {
    HeadKind.CLS_FFN: ClsFfnHead,
    HeadKind.LSTM: LstmHead,
    HeadKind.TEXTCNN: TextCnnHead,
    HeadKind.RCNN: RcnnHead,
}


def build_head(spec: HeadSpec) -> ClassifierHead:
    try:
        return HEAD_REGISTRY[spec.kind](spec)
    except KeyError:
        raise ConfigError(f"未知的分类头类型: {spec.kind}")


def head_param_shapes(spec: HeadSpec, config: EncoderConfig) -> "OrderedDict":
    """BERT 分类头的全部参数形状（含特征视图的层权重）"""
    shapes = OrderedDict(view_param_shapes(spec.view, config.L))
    shapes.update(build_head(spec).param_shapes(spec.view.feature_dim(config.h)))
    return shapes


def init_head_params(spec: HeadSpec, config: EncoderConfig, rng: np.random.Generator) -> Dict[str, Tensor]:
    spec.check_against(config)
    params = init_view_params(spec.view, config.L)
    params.update(build_head(spec).init_params(spec.view.feature_dim(config.h), rng))
    return params


def head_logit(
    stack: HiddenStack,
    spec: HeadSpec,
    params: Mapping[str, Tensor],
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    features = feature_view(stack, spec.view, params)
    return build_head(spec).forward(features, stack.real_length, params, training, rng)


def _logit_for(kind: HeadKind):
    def compute(stack, spec, params, training=False, rng=None):
        if spec.kind is not kind:
            raise ContractError(f"分类头类型不符: 需要 {kind.value}，得到 {spec.kind.value}")
        return head_logit(stack, spec, params, training, rng)

    compute.__name__ = f"{kind.value}_head_logit"
    return compute


cls_head_logit = _logit_for(HeadKind.CLS_FFN)
lstm_head_logit = _logit_for(HeadKind.LSTM)
textcnn_head_logit = _logit_for(HeadKind.TEXTCNN)
rcnn_head_logit = _logit_for(HeadKind.RCNN)


def classify(logit, text: str = "") -> Prediction:
    """概率 = σ(logit)；概率 ≥ 0.5 判为正类"""
    z = float(logit.item() if isinstance(logit, Tensor) else logit)
    if z >= 0:
        probability = 1.0 / (1.0 + np.exp(-z))
    else:
        e = np.exp(z)
        probability = e / (1.0 + e)
    label = Sentiment.POSITIVE if probability >= 0.5 else Sentiment.NEGATIVE
    return Prediction(text=text, label=label, probability=float(probability))
