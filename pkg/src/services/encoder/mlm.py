"""
掩码语言模型目标与桌面级预训练
"""
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from src.models.config import EncoderConfig, PretrainConfig
from src.services.harness.checkpoint import Checkpoint, CheckpointKind
from src.services.tensor import Adam, Tensor, concat, cross_entropy_rows, gelu, layer_norm
from src.services.tokenizer import EncodedSequence, Vocabulary, encode
from src.utils.exceptions import ConfigError, ContractError, InputValidationError
from src.utils.logger import get_logger
from .model import LAYER_NORM_EPS, encode_sequence
from .params import init_encoder_params, init_mlm_params

logger = get_logger(__name__)


@dataclass
class MlmBatch:
    """一批被遮盖的序列；targets 仅在 masked 为真的位置有意义"""
    input_ids: np.ndarray
    attention_mask: np.ndarray
    masked: np.ndarray
    targets: np.ndarray

    @property
    def num_masked(self) -> int:
        return int(self.masked.sum())

    def sequence(self, row: int) -> EncodedSequence:
        return EncodedSequence(ids=self.input_ids[row].tolist(), attention_mask=self.attention_mask[row].tolist())


def make_mlm_batch(
    sequences: Sequence[EncodedSequence],
    vocab: Vocabulary,
    rng: np.random.Generator,
    mask_probability: float = 0.15,
) -> MlmBatch:
    """
    每条序列在真实的非特殊位置中选 max(1, round(p·n)) 个，
    其中 80% 换成 [MASK]、10% 换成随机词、10% 保持不变
    """
    input_ids = np.array([s.ids for s in sequences], dtype=np.int64)
    attention_mask = np.array([s.attention_mask for s in sequences], dtype=np.int64)
    targets = input_ids.copy()
    masked = np.zeros_like(input_ids, dtype=bool)
    special = np.array(sorted(vocab.special_ids))

    for row in range(len(sequences)):
        eligible = np.flatnonzero((attention_mask[row] == 1) & ~np.isin(input_ids[row], special))
        if eligible.size == 0:
            continue
        count = max(1, int(round(mask_probability * eligible.size)))
        chosen = np.sort(rng.choice(eligible, size=count, replace=False))
        for pos in chosen:
            masked[row, pos] = True
            roll = rng.random()
            if roll < 0.8:
                input_ids[row, pos] = vocab.mask_id
            elif roll < 0.9:
                input_ids[row, pos] = rng.integers(len(special), len(vocab))

    if not masked.any():
        raise InputValidationError("整批序列都没有可遮盖的位置")
    return MlmBatch(input_ids=input_ids, attention_mask=attention_mask, masked=masked, targets=targets)


def mlm_logits(hidden_rows: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """变换层 + 与词嵌入共享的输出投影"""
    x = gelu(hidden_rows @ params["mlm.transform.weight"] + params["mlm.transform.bias"])
    x = layer_norm(x, params["mlm.norm.gain"], params["mlm.norm.bias"], LAYER_NORM_EPS)
    return x @ params["embeddings.token"].T + params["mlm.output_bias"]


def mlm_loss(
    batch: MlmBatch,
    params: Mapping[str, Tensor],
    config: EncoderConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """仅在被遮盖位置上求平均交叉熵"""
    if batch.num_masked == 0:
        raise ContractError("批次中没有被遮盖的位置")

    logits, targets = [], []
    for row in range(batch.input_ids.shape[0]):
        positions = np.flatnonzero(batch.masked[row])
        if positions.size == 0:
            continue
        stack = encode_sequence(batch.sequence(row), params, config, training, rng)
        logits.append(mlm_logits(stack.layers[-1][positions], params))
        targets.extend(batch.targets[row, positions].tolist())
    return cross_entropy_rows(concat(logits, axis=0), targets)


def pretrain(
    corpus: Sequence[str],
    vocab: Vocabulary,
    config: EncoderConfig,
    hyper: PretrainConfig,
    seed: int,
) -> Checkpoint:
    """掩码语言模型预训练；给定种子结果确定"""
    if config.vocab_size != len(vocab):
        raise ConfigError(f"编码器 vocab_size={config.vocab_size} 与词表大小 {len(vocab)} 不一致")
    sequences = [encode(text, vocab, config.seq_len) for text in corpus]
    if len(sequences) < hyper.batch_size:
        raise InputValidationError(f"语料只有 {len(sequences)} 条，少于一个批次 {hyper.batch_size}")

    rng = np.random.default_rng(seed)
    params: Dict[str, Tensor] = {**init_encoder_params(config, rng), **init_mlm_params(config, rng)}
    optimizer = Adam(params, learning_rate=hyper.learning_rate)
    history: List[float] = []

    logger.info(
        f"开始预训练: {len(sequences)} 条序列, L={config.L} A={config.A} h={config.h} "
        f"SEQ_LEN={config.seq_len}, batch={hyper.batch_size}, epochs={hyper.epochs}"
    )
    done = False
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(sequences))
        epoch_losses = []
        # 不足一个批次的尾部丢弃
        for start in range(0, len(order) - hyper.batch_size + 1, hyper.batch_size):
            batch = make_mlm_batch([sequences[i] for i in order[start:start + hyper.batch_size]], vocab, rng, hyper.mask_probability)
            optimizer.zero_grad()
            loss = mlm_loss(batch, params, config, training=True, rng=rng)
            loss.backward()
            optimizer.step()
            history.append(loss.item())
            epoch_losses.append(loss.item())
            logger.debug(f"预训练 step {optimizer.state.step_count}: loss={loss.item():.4f}")
            if hyper.max_steps is not None and optimizer.state.step_count >= hyper.max_steps:
                done = True
                break
        logger.info(f"预训练 epoch {epoch + 1}/{hyper.epochs}: 平均 MLM loss={np.mean(epoch_losses):.4f}")
        if done:
            break

    return Checkpoint(
        kind=CheckpointKind.PRETRAINED,
        encoder_config=config,
        tensors={name: p.data for name, p in params.items()},
        tokenizer_hash=vocab.fingerprint(),
        seed=seed,
        step_count=optimizer.state.step_count,
        metadata={"loss_history": [round(v, 6) for v in history]},
    )


def params_from_checkpoint(checkpoint: Checkpoint, requires_grad: bool = True) -> Dict[str, Tensor]:
    """把检查点里的数组复制成当前精度的参数张量（不与检查点共享内存）"""
    return {
        name: Tensor(values.copy(), requires_grad=requires_grad, name=name)
        for name, values in checkpoint.tensors.items()
    }
