"""
静态词向量表
读取 "word v1 ... vd" 文本格式（可带 fastText 的 "词数 维度" 头行），
按词查表得到 SEQ_LEN×d 矩阵，与 BERT 特征共用同一套分类头
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np

from src.services.tokenizer.normalize import normalize_text
from src.utils.exceptions import InputValidationError, ParseError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class EmbeddingTable:
    """词 → 向量；表外词返回零向量"""

    def __init__(self, vectors: Dict[str, np.ndarray], dim: int, name: str = "embedding"):
        for word, vector in vectors.items():
            if vector.shape != (dim,):
                raise InputValidationError(f"词 {word!r} 的向量维度 {vector.shape} 与表维度 {dim} 不一致")
        self.vectors = vectors
        self.dim = dim
        self.name = name

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def lookup(self, word: str) -> np.ndarray:
        vector = self.vectors.get(word)
        return np.zeros(self.dim) if vector is None else vector.copy()

    def save(self, path: Union[str, Path], header: bool = True) -> None:
        lines = [f"{len(self)} {self.dim}\n"] if header else []
        for word in sorted(self.vectors):
            lines.append(word + " " + " ".join(repr(float(v)) for v in self.vectors[word]) + "\n")
        Path(path).write_text("".join(lines), encoding="utf-8")


def _is_header(parts) -> bool:
    return len(parts) == 2 and all(p.isdigit() for p in parts)


def load_embedding_file(path: Union[str, Path], expected_dim: Optional[int] = None) -> EmbeddingTable:
    """
    逐行解析词向量文件
    维度不符或数值无法解析时抛出带行号的 ParseError；重复的词以最后一次为准并告警
    """
    vectors: Dict[str, np.ndarray] = {}
    dim = expected_dim
    duplicates = 0
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if line_number == 1 and _is_header(parts):
                header_dim = int(parts[1])
                if dim is not None and header_dim != dim:
                    raise ParseError(f"头行维度 {header_dim} 与期望维度 {dim} 不一致", line_number=line_number)
                dim = header_dim
                continue

            word, raw_values = parts[0], parts[1:]
            if dim is None:
                dim = len(raw_values)
            if len(raw_values) != dim:
                raise ParseError(f"词 {word!r} 有 {len(raw_values)} 个分量，期望 {dim} 个", line_number=line_number)
            try:
                vector = np.array([float(v) for v in raw_values])
            except ValueError as e:
                raise ParseError(f"词 {word!r} 的分量无法解析: {e}", line_number=line_number)
            if word in vectors:
                duplicates += 1
                logger.warning(f"词向量文件第 {line_number} 行重复出现 {word!r}，以最后一次为准")
            vectors[word] = vector

    if dim is None:
        raise ParseError(f"词向量文件为空: {path}")
    logger.info(f"词向量已加载: {path} ({len(vectors)} 个词, d={dim}, 重复 {duplicates} 个)")
    return EmbeddingTable(vectors, dim, name=Path(path).stem)


def random_embedding_table(words: Iterable[str], dim: int, seed: int, name: str = "random") -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    vectors = {word: rng.normal(0.0, 1.0 / np.sqrt(dim), size=dim) for word in sorted(set(words))}
    return EmbeddingTable(vectors, dim, name=name)


@dataclass
class StaticSequence:
    """静态词向量矩阵与掩码"""
    matrix: np.ndarray
    mask: np.ndarray

    @property
    def real_length(self) -> int:
        return int(self.mask.sum())


def static_embed_sequence(text: str, table: EmbeddingTable, seq_len: int, lowercase: bool = False) -> StaticSequence:
    """按词查表，截断或补零到 seq_len；不加 [CLS]/[SEP]"""
    words = normalize_text(text, lowercase=lowercase).split()[:seq_len]
    matrix = np.zeros((seq_len, table.dim))
    mask = np.zeros(seq_len, dtype=np.int64)
    for i, word in enumerate(words):
        matrix[i] = table.lookup(word)
        mask[i] = 1
    return StaticSequence(matrix=matrix, mask=mask)
