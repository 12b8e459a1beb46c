"""
分类头：[CLS]+FFN、LSTM、TextCNN、RCNN
"""
from .base import ClassifierHead, window_rows, xavier_uniform
from .cls_ffn import ClsFfnHead
from .lstm import LstmHead, run_lstm
from .rcnn import RcnnHead
from .textcnn import TextCnnHead
from .views import LAYER_WEIGHTS, feature_view, init_view_params, view_param_shapes
from .registry import (
    HEAD_REGISTRY, build_head, classify, cls_head_logit, head_logit, head_param_shapes,
    init_head_params, lstm_head_logit, rcnn_head_logit, textcnn_head_logit
)

__all__ = [
    'ClassifierHead', 'window_rows', 'xavier_uniform', 'ClsFfnHead', 'LstmHead', 'run_lstm',
    'RcnnHead', 'TextCnnHead', 'LAYER_WEIGHTS', 'feature_view', 'init_view_params',
    'view_param_shapes', 'HEAD_REGISTRY', 'build_head', 'classify', 'cls_head_logit',
    'head_logit', 'head_param_shapes', 'init_head_params', 'lstm_head_logit',
    'rcnn_head_logit', 'textcnn_head_logit',
]
