"""
微调、评估与预测
BERT 分类头和静态词向量基线共用同一个训练循环
"""
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, List, Mapping, Optional, Sequence

import numpy as np

from src.config.settings import settings
from src.models.base import MetricsReport, Prediction, ReviewRecord
from src.models.config import HeadKind, HeadSpec, RunConfig, TrainConfig
from src.services.baselines import EmbeddingTable, NGramFeaturizer, static_embed_sequence, train_linear_svm
from src.services.encoder import encode_sequence, params_from_checkpoint
from src.services.heads import build_head, head_logit, init_head_params
from src.services.tensor import Adam, Tensor, logistic_loss, no_grad
from src.services.tokenizer import Vocabulary, encode
from src.utils.exceptions import ConfigError, ContractError, InputValidationError
from src.utils.logger import get_logger
from .checkpoint import Checkpoint, CheckpointKind
from .metrics import compute_metrics
from .models import BertSentimentModel, SentimentModel, StaticEmbeddingModel, SvmSentimentModel

logger = get_logger(__name__)

# (样本下标, training, rng) -> 标量 logit
LogitFn = Callable[[int, bool, Optional[np.random.Generator]], Tensor]


@dataclass
class FitSummary:
    loss_history: List[float] = field(default_factory=list)
    train_accuracy: float = 0.0
    epochs_run: int = 0
    step_count: int = 0


def fill_missing_grads(params: Mapping[str, Tensor]) -> None:
    """本批次未参与计算的参数（例如全是单词评论时 RCNN 的上下文 LSTM）梯度记为0"""
    for param in params.values():
        if param.grad is None:
            param.grad = np.zeros_like(param.data)


def _labels(records: Sequence[ReviewRecord]) -> List[int]:
    if not records:
        raise InputValidationError("训练集为空")
    missing = [i for i, r in enumerate(records) if r.label is None]
    if missing:
        raise ContractError(f"训练记录必须带标签，缺少标签的下标: {missing[:5]}")
    return [r.label.as_int for r in records]


def _accuracy(logit_fn: LogitFn, labels: Sequence[int]) -> float:
    with no_grad():
        correct = sum(int((logit_fn(i, False, None).item() >= 0.0) == (y == 1)) for i, y in enumerate(labels))
    return correct / len(labels)


def fit_logits(
    logit_fn: LogitFn,
    labels: Sequence[int],
    params: Mapping[str, Tensor],
    train: TrainConfig,
    rng: np.random.Generator,
    description: str,
) -> FitSummary:
    """批内平均对数损失 + Adam；每个 epoch 重新打乱顺序"""
    optimizer = Adam(params, learning_rate=train.learning_rate)
    n = len(labels)
    summary = FitSummary()
    for epoch in range(train.epochs):
        order = rng.permutation(n)
        total, correct = 0.0, 0
        for start in range(0, n, train.batch_size):
            batch = order[start:start + train.batch_size]
            optimizer.zero_grad()
            losses = []
            for i in batch:
                logit = logit_fn(int(i), True, rng)
                losses.append(logistic_loss(logit, labels[i]))
                correct += int((logit.item() >= 0.0) == (labels[i] == 1))
            loss = reduce(lambda a, b: a + b, losses) * (1.0 / len(losses))
            loss.backward()
            fill_missing_grads(optimizer.params)
            optimizer.step()
            total += loss.item() * len(batch)
            logger.debug(f"{description} step {optimizer.state.step_count}: loss={loss.item():.4f}")

        summary.epochs_run += 1
        summary.loss_history.append(total / n)
        logger.info(f"{description} epoch {epoch + 1}/{train.epochs}: loss={total / n:.4f}, 训练准确率={correct / n:.4f}")
        if train.early_stop and _accuracy(logit_fn, labels) == 1.0:
            logger.info(f"{description}: 训练集已全部分对，提前停止于 epoch {epoch + 1}")
            break

    summary.train_accuracy = _accuracy(logit_fn, labels)
    summary.step_count = optimizer.state.step_count
    return summary


def _check_compatible(pretrained: Checkpoint, run: RunConfig, vocab: Vocabulary) -> None:
    if pretrained.kind is not CheckpointKind.PRETRAINED:
        raise ConfigError(f"微调需要预训练检查点，得到的是 {pretrained.kind.value}")
    if vocab.fingerprint() != pretrained.tokenizer_hash:
        raise ConfigError("词表与预训练检查点记录的词表指纹不一致")
    run.check_encoder(pretrained.encoder_config)
    run.head.check_against(pretrained.encoder_config)


def finetune(
    pretrained: Checkpoint,
    run: RunConfig,
    train_data: Sequence[ReviewRecord],
    vocab: Vocabulary,
    lowercase: bool = False,
) -> Checkpoint:
    """
    在预训练编码器上接分类头训练
    frozen_encoder=True 时编码器参数不更新，只训练分类头（特征提取），
    此时各层隐藏状态只算一次并缓存
    """
    _check_compatible(pretrained, run, vocab)
    labels = _labels(train_data)
    config, spec = pretrained.encoder_config, run.head
    rng = np.random.default_rng(run.seed)

    encoder_params = {
        name: p for name, p in params_from_checkpoint(pretrained, requires_grad=not run.frozen_encoder).items()
        if not name.startswith("mlm.")
    }
    head_params = init_head_params(spec, config, rng)
    sequences = [encode(r.text, vocab, config.seq_len, lowercase=lowercase) for r in train_data]
    params = {**encoder_params, **head_params}

    if run.frozen_encoder:
        with no_grad():
            stacks = [encode_sequence(seq, encoder_params, config).truncated() for seq in sequences]
        logger.info(f"编码器已冻结，缓存了 {len(stacks)} 条序列的隐藏状态")

        def logit_fn(i, training, step_rng):
            return head_logit(stacks[i], spec, head_params, training, step_rng)

        trainable = head_params
    else:
        def logit_fn(i, training, step_rng):
            stack = encode_sequence(sequences[i], encoder_params, config, training, step_rng)
            return head_logit(stack, spec, head_params, training, step_rng)

        trainable = params

    mode = "特征提取" if run.frozen_encoder else "微调"
    logger.info(f"开始{mode}: head={spec.kind.value}, view={spec.view.value}, {len(labels)} 条样本, seed={run.seed}")
    summary = fit_logits(logit_fn, labels, trainable, run.train, rng, f"{mode}[{spec.kind.value}]")
    logger.info(f"{mode}完成: {summary.epochs_run} 个 epoch, 训练准确率 {summary.train_accuracy:.4f}")

    return Checkpoint(
        kind=CheckpointKind.CLASSIFIER,
        encoder_config=config,
        tensors={name: p.data for name, p in params.items()},
        tokenizer_hash=pretrained.tokenizer_hash,
        seed=run.seed,
        step_count=summary.step_count,
        head=spec,
        frozen_encoder=run.frozen_encoder,
        metadata={
            "loss_history": [round(v, 6) for v in summary.loss_history],
            "train_accuracy": summary.train_accuracy,
            "pretrain_steps": pretrained.step_count,
        },
    )


def load_model(checkpoint: Checkpoint, vocab: Vocabulary, name: Optional[str] = None) -> BertSentimentModel:
    if checkpoint.kind is not CheckpointKind.CLASSIFIER or checkpoint.head is None:
        raise ConfigError("只能从分类器检查点加载预测模型")
    if vocab.fingerprint() != checkpoint.tokenizer_hash:
        raise ConfigError("词表与检查点记录的词表指纹不一致")
    params = params_from_checkpoint(checkpoint, requires_grad=False)
    return BertSentimentModel(params, checkpoint.encoder_config, checkpoint.head, vocab, name=name or f"BERT-{checkpoint.head.kind.value}")


def train_static_model(
    train_data: Sequence[ReviewRecord],
    table: EmbeddingTable,
    spec: HeadSpec,
    train: TrainConfig,
    seq_len: int,
    seed: int,
    name: Optional[str] = None,
) -> StaticEmbeddingModel:
    """静态词向量 + 分类头；分类头实现与 BERT 特征完全相同"""
    if spec.kind is HeadKind.TEXTCNN and max(spec.region_sizes) > seq_len:
        raise ConfigError(f"最大区域大小 {max(spec.region_sizes)} 超过 SEQ_LEN={seq_len}")
    labels = _labels(train_data)
    rng = np.random.default_rng(seed)
    head = build_head(spec)
    params = head.init_params(table.dim, rng)
    embedded = [static_embed_sequence(r.text, table, seq_len) for r in train_data]
    matrices = [Tensor(e.matrix) for e in embedded]

    def logit_fn(i, training, step_rng):
        return head.forward(matrices[i], embedded[i].real_length, params, training, step_rng)

    name = name or f"{table.name}+{spec.kind.value}"
    summary = fit_logits(logit_fn, labels, params, train, rng, name)
    logger.info(f"{name} 训练完成: 训练准确率 {summary.train_accuracy:.4f}")
    return StaticEmbeddingModel(table, spec, params, seq_len, name=name)


def train_svm_model(
    train_data: Sequence[ReviewRecord],
    seed: int,
    reg: float = settings.SVM_REG,
    epochs: int = settings.SVM_EPOCHS,
    binary: bool = False,
    name: str = "SVM",
) -> SvmSentimentModel:
    featurizer = NGramFeaturizer(binary=binary)
    svm = train_linear_svm(train_data, featurizer, reg=reg, epochs=epochs, seed=seed)
    return SvmSentimentModel(featurizer, svm, name=name)


def evaluate(
    model: SentimentModel,
    test_data: Sequence[ReviewRecord],
    dataset: str = "",
    macro: bool = False,
) -> MetricsReport:
    if not test_data:
        raise InputValidationError("测试集为空")
    gold = _labels(test_data)
    predictions = model.predict([r.text for r in test_data])
    report = compute_metrics(gold, [p.label for p in predictions], dataset=dataset, model=model.name, macro=macro)
    logger.info(
        f"评估 {model.name} @ {dataset or '-'}: P={report.precision:.4f} R={report.recall:.4f} F1={report.f1:.4f} "
        f"(TP={report.tp} FP={report.fp} FN={report.fn} TN={report.tn})"
    )
    return report


def predict(model: SentimentModel, texts: Sequence[str], batch_size: int = settings.TRAIN_BATCH) -> List[Prediction]:
    """按批推理，输出顺序与输入一致"""
    texts = list(texts)
    results: List[Prediction] = []
    for start in range(0, len(texts), batch_size):
        results.extend(model.predict(texts[start:start + batch_size]))
    return results
