"""
线性 SVM
L2 正则化 hinge 损失，按 1/(λ(t+t0)) 步长做随机次梯度下降
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import sparse

from src.config.settings import settings
from src.models.base import ReviewRecord
from src.utils.exceptions import ContractError, InputValidationError
from src.utils.logger import get_logger
from .ngram import NGramFeaturizer

logger = get_logger(__name__)

INITIAL_STEP = 0.1


@dataclass
class LinearSvm:
    weights: np.ndarray
    bias: float
    reg: float

    def decision_function(self, features: sparse.spmatrix) -> np.ndarray:
        if features.shape[1] != self.weights.shape[0]:
            raise ContractError(f"特征维度 {features.shape[1]} 与权重长度 {self.weights.shape[0]} 不一致")
        return np.asarray(features @ self.weights).reshape(-1) + self.bias

    def predict(self, features: sparse.spmatrix) -> np.ndarray:
        return (self.decision_function(features) >= 0).astype(np.int64)


def hinge_loss(margin: float) -> float:
    return max(0.0, 1.0 - margin)


def hinge_subgradient(weights: np.ndarray, bias: float, x: np.ndarray, y: int, reg: float) -> Tuple[np.ndarray, float]:
    """单样本目标 λ/2·|w|² + max(0, 1 - y(w·x+b)) 的次梯度，y ∈ {-1, +1}"""
    margin = y * (float(x @ weights) + bias)
    grad_w = reg * weights
    grad_b = 0.0
    if margin < 1.0:
        grad_w = grad_w - y * x
        grad_b = -float(y)
    return grad_w, grad_b


def fit_linear_svm(
    features: sparse.csr_matrix,
    labels: Sequence[int],
    reg: float = settings.SVM_REG,
    epochs: int = settings.SVM_EPOCHS,
    seed: int = settings.DEFAULT_SEED,
) -> LinearSvm:
    y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
    if len(set(y.tolist())) < 2:
        raise InputValidationError("训练 SVM 需要正负两类样本各至少一个")
    if reg <= 0:
        raise InputValidationError(f"正则化系数必须为正: {reg}")

    features = sparse.csr_matrix(features, dtype=np.float64)
    rng = np.random.default_rng(seed)
    # w = scale * v，收缩只改 scale
    v = np.zeros(features.shape[1])
    scale = 1.0
    bias = 0.0
    t0 = 1.0 / (reg * INITIAL_STEP)
    t = 0
    for epoch in range(epochs):
        violations = 0
        for i in rng.permutation(features.shape[0]):
            eta = 1.0 / (reg * (t + t0))
            row = features.getrow(i)
            margin = y[i] * (scale * float(row.dot(v)[0]) + bias)
            shrink = 1.0 - eta * reg
            if shrink <= 0.0:
                # 步长过大时收缩到零，不让 scale 变号
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if margin < 1.0:
                violations += 1
                v[row.indices] += (eta * y[i] / scale) * row.data
                bias += eta * y[i]
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            t += 1
        logger.debug(f"SVM epoch {epoch + 1}/{epochs}: 间隔违例 {violations}/{features.shape[0]}")

    model = LinearSvm(weights=v * scale, bias=bias, reg=reg)
    accuracy = float(np.mean(model.predict(features) == (y > 0)))
    logger.info(f"SVM 训练完成: {features.shape[0]} 条样本, {features.shape[1]} 维, 训练准确率 {accuracy:.4f}")
    return model


def train_linear_svm(
    data: Sequence[ReviewRecord],
    featurizer: NGramFeaturizer,
    reg: float = settings.SVM_REG,
    epochs: int = settings.SVM_EPOCHS,
    seed: int = settings.DEFAULT_SEED,
) -> LinearSvm:
    """特征器未拟合时先在训练文本上拟合"""
    if any(record.label is None for record in data):
        raise ContractError("SVM 训练数据必须全部带标签")
    texts = [record.text for record in data]
    if featurizer.index is None:
        featurizer.fit(texts)
    labels = [record.label.as_int for record in data]
    return fit_linear_svm(featurizer.transform(texts), labels, reg, epochs, seed)
