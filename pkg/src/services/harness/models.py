"""
可评估的情感模型
BERT + 分类头、静态词向量 + 分类头、n-gram SVM 三类共用同一个预测接口
"""
from abc import ABC, abstractmethod
from typing import List, Mapping, Sequence

import numpy as np

from src.models.base import Prediction
from src.models.config import EncoderConfig, HeadSpec
from src.services.baselines import EmbeddingTable, LinearSvm, NGramFeaturizer, static_embed_sequence
from src.services.encoder import encode_sequence
from src.services.heads import build_head, classify, head_logit
from src.services.tensor import Tensor, no_grad
from src.services.tokenizer import Vocabulary, encode


class SentimentModel(ABC):
    """输出单个 logit，概率为 σ(logit)"""

    name: str = "model"

    @abstractmethod
    def logits(self, texts: Sequence[str]) -> np.ndarray:
        pass

    def predict(self, texts: Sequence[str]) -> List[Prediction]:
        texts = list(texts)
        if not texts:
            return []
        return [classify(z, text=text) for z, text in zip(self.logits(texts), texts)]


class BertSentimentModel(SentimentModel):
    def __init__(
        self,
        params: Mapping[str, Tensor],
        config: EncoderConfig,
        head: HeadSpec,
        vocab: Vocabulary,
        name: str = "BERT",
        lowercase: bool = False,
    ):
        self.params = params
        self.config = config
        self.head = head
        self.vocab = vocab
        self.name = name
        self.lowercase = lowercase

    def logit(self, text: str) -> float:
        seq = encode(text, self.vocab, self.config.seq_len, lowercase=self.lowercase)
        with no_grad():
            stack = encode_sequence(seq, self.params, self.config)
            return head_logit(stack, self.head, self.params).item()

    def logits(self, texts):
        return np.array([self.logit(text) for text in texts], dtype=np.float64)


class StaticEmbeddingModel(SentimentModel):
    """词向量表固定不训练，只训练分类头"""

    def __init__(self, table: EmbeddingTable, head: HeadSpec, params: Mapping[str, Tensor], seq_len: int, name: str = "Embedding"):
        self.table = table
        self.head = head
        self.params = params
        self.seq_len = seq_len
        self.name = name
        self._head = build_head(head)

    def logit(self, text: str) -> float:
        seq = static_embed_sequence(text, self.table, self.seq_len)
        with no_grad():
            return self._head.forward(Tensor(seq.matrix), seq.real_length, self.params).item()

    def logits(self, texts):
        return np.array([self.logit(text) for text in texts], dtype=np.float64)


class SvmSentimentModel(SentimentModel):
    """logit 取 SVM 的决策值"""

    def __init__(self, featurizer: NGramFeaturizer, svm: LinearSvm, name: str = "SVM"):
        self.featurizer = featurizer
        self.svm = svm
        self.name = name

    def logits(self, texts):
        return self.svm.decision_function(self.featurizer.transform(list(texts)))
