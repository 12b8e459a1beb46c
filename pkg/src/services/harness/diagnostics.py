"""
整模型梯度检查：小编码器 + 分类头，对全部参数抽样做中心差分
"""
from typing import Dict, Optional

import numpy as np

from src.models.config import EncoderConfig, FeatureView, HeadKind, HeadSpec
from src.services.encoder import encode_sequence, init_encoder_params
from src.services.heads import head_logit, init_head_params
from src.services.tensor import GradCheckReport, Tensor, get_precision, grad_check_report, logistic_loss, precision
from src.services.tokenizer import EncodedSequence, Vocabulary
from src.services.tokenizer.vocab import SPECIAL_TOKENS

GRADCHECK_ENCODER = {"A": 2, "h": 16, "f": 32, "seq_len": 16}


def toy_vocabulary(size: int = 20) -> Vocabulary:
    return Vocabulary(list(SPECIAL_TOKENS) + [f"w{i}" for i in range(size)])


def model_grad_check(
    kind: HeadKind,
    view: FeatureView = FeatureView.LAST_LAYER,
    layers: int = 2,
    real_length: int = 9,
    seed: int = 0,
    samples_per_param: int = 3,
    eps: float = 1e-6,
    init_std: float = 0.3,
    dtype: Optional[str] = None,
) -> GradCheckReport:
    """
    序列为 [CLS] + 随机词 + [SEP] 再补 [PAD] 到 SEQ_LEN=16；
    dtype 不给时沿用当前全局精度；
    初始化标准差取得较大，避免梯度过小时相对误差失真
    """
    vocab = toy_vocabulary()
    with precision(dtype or get_precision()):
        config = EncoderConfig(L=layers, vocab_size=len(vocab), dropout_rate=0.0, **GRADCHECK_ENCODER)
        spec = HeadSpec(
            kind=kind, view=view, ffn_hidden=8, lstm_size=4, textcnn_filters=3,
            rcnn_size=4, rcnn_filters=3, dropout_rate=0.0,
        )
        rng = np.random.default_rng(seed)
        params: Dict[str, Tensor] = {**init_encoder_params(config, rng, std=init_std), **init_head_params(spec, config, rng)}

        words = rng.integers(len(SPECIAL_TOKENS), len(vocab), size=real_length - 2).tolist()
        ids = [vocab.cls_id] + words + [vocab.sep_id]
        padding = config.seq_len - len(ids)
        seq = EncodedSequence(ids=ids + [vocab.pad_id] * padding, attention_mask=[1] * len(ids) + [0] * padding)
        label = int(rng.integers(0, 2))

        def loss_fn() -> Tensor:
            stack = encode_sequence(seq, params, config)
            return logistic_loss(head_logit(stack, spec, params), label)

        return grad_check_report(loss_fn, params, eps=eps, samples_per_param=samples_per_param, seed=seed)


def run_all_grad_checks(
    layers: int = 2,
    seed: int = 0,
    samples_per_param: int = 3,
    dtype: Optional[str] = None,
) -> Dict[str, Optional[GradCheckReport]]:
    """四种分类头 × (LAST_LAYER, CONCAT_LAST_4)；层数不够的组合记为 None"""
    results: Dict[str, Optional[GradCheckReport]] = {}
    for kind in HeadKind:
        for view in (FeatureView.LAST_LAYER, FeatureView.CONCAT_LAST_4):
            key = f"{kind.value}/{view.value}"
            if layers < view.min_layers:
                results[key] = None
                continue
            results[key] = model_grad_check(
                kind, view, layers=layers, seed=seed, samples_per_param=samples_per_param, dtype=dtype,
            )
    return results
