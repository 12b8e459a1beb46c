"""
n-gram 词袋特征
对规范化后按空白切分的词序列统计 n=n_min..n_max 的 n-gram，输出 scipy CSR 稀疏向量
"""
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy import sparse

from src.config.settings import settings
from src.services.tokenizer.normalize import normalize_text
from src.utils.exceptions import ContractError, InputValidationError, ParseError
from src.utils.logger import get_logger

logger = get_logger(__name__)


def extract_ngrams(words: Sequence[str], n_min: int, n_max: int) -> List[str]:
    """词之间用单个空格连接，词本身不含空白"""
    grams = []
    for n in range(n_min, n_max + 1):
        for start in range(len(words) - n + 1):
            grams.append(" ".join(words[start:start + n]))
    return grams


class NGramFeaturizer:
    """
    n-gram 特征器

    n ≥ 2 的 n-gram 只保留文档频次不低于 min_df 的，unigram 全部保留；
    binary=True 时输出是否出现，否则输出次数
    """

    def __init__(
        self,
        n_min: int = 1,
        n_max: int = 5,
        min_df: int = settings.NGRAM_MIN_DF,
        binary: bool = False,
        lowercase: bool = False,
    ):
        if not 1 <= n_min <= n_max <= 5:
            raise InputValidationError(f"n-gram 范围必须在 [1, 5] 内: n_min={n_min}, n_max={n_max}")
        self.n_min = n_min
        self.n_max = n_max
        self.min_df = min_df
        self.binary = binary
        self.lowercase = lowercase
        self.index: Optional[Dict[str, int]] = None

    @property
    def dim(self) -> int:
        return len(self.index or {})

    def _grams(self, text: str) -> List[str]:
        return extract_ngrams(normalize_text(text, lowercase=self.lowercase).split(), self.n_min, self.n_max)

    def fit(self, texts: Iterable[str]) -> "NGramFeaturizer":
        doc_freq: Counter = Counter()
        for text in texts:
            doc_freq.update(set(self._grams(text)))
        kept = sorted(g for g, df in doc_freq.items() if " " not in g or df >= self.min_df)
        self.index = {gram: i for i, gram in enumerate(kept)}
        logger.info(f"n-gram 特征器拟合完成: {len(doc_freq)} 个候选, 保留 {len(kept)} 个 (n={self.n_min}..{self.n_max})")
        return self

    def _check_fitted(self) -> None:
        if self.index is None:
            raise ContractError("n-gram 特征器尚未拟合")

    def featurize(self, text: str) -> sparse.csr_matrix:
        """单条文本 → 1×dim 稀疏向量；未见过的 n-gram 忽略"""
        return self.transform([text])

    def transform(self, texts: Sequence[str]) -> sparse.csr_matrix:
        self._check_fitted()
        indptr, indices, values = [0], [], []
        for text in texts:
            counts = Counter(self.index[g] for g in self._grams(text) if g in self.index)
            for column in sorted(counts):
                indices.append(column)
                values.append(1.0 if self.binary else float(counts[column]))
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.asarray(values, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(texts), self.dim),
        )

    def save(self, path: Union[str, Path]) -> None:
        """每行 "ngram<TAB>index"，按 index 排序"""
        self._check_fitted()
        lines = [f"{gram}\t{i}\n" for gram, i in sorted(self.index.items(), key=lambda item: item[1])]
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path], **kwargs) -> "NGramFeaturizer":
        featurizer = cls(**kwargs)
        index: Dict[str, int] = {}
        with open(path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                gram, sep, raw_index = line.rstrip("\n").rpartition("\t")
                if not sep or not gram:
                    raise ParseError("缺少制表符分隔的 n-gram 与索引", line_number=line_number)
                try:
                    index[gram] = int(raw_index)
                except ValueError:
                    raise ParseError(f"索引不是整数: {raw_index!r}", line_number=line_number)
        if sorted(index.values()) != list(range(len(index))):
            raise ParseError("n-gram 索引必须是连续的 0..D-1")
        featurizer.index = index
        return featurizer


def featurize(text: str, featurizer: NGramFeaturizer) -> sparse.csr_matrix:
    return featurizer.featurize(text)
