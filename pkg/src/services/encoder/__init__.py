"""
编码器服务：迷你 BERT 与掩码语言模型预训练
"""
from .model import HiddenStack, embed, encode_sequence, encoder_block
from .params import (
    encoder_only, encoder_param_shapes, init_encoder_params, init_mlm_params, mlm_param_shapes,
    truncated_normal
)
from .mlm import MlmBatch, make_mlm_batch, mlm_logits, mlm_loss, params_from_checkpoint, pretrain

__all__ = [
    'HiddenStack', 'embed', 'encode_sequence', 'encoder_block', 'encoder_only',
    'encoder_param_shapes', 'init_encoder_params', 'init_mlm_params', 'mlm_param_shapes',
    'truncated_normal', 'MlmBatch', 'make_mlm_batch', 'mlm_logits', 'mlm_loss',
    'params_from_checkpoint', 'pretrain',
]
