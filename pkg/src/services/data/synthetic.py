"""
合成越南语评论语料
正负评论分别从各自的情感词表取词，再混入中性词，两类在词汇上可分，
用于在没有外部语料时跑通整条流水线
"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from src.models.base import ReviewRecord, Sentiment
from src.services.baselines.embeddings import random_embedding_table
from src.utils.logger import get_logger
from .io import write_jsonl

logger = get_logger(__name__)

POSITIVE_WORDS = (
    "ngon", "tuyệt", "thích", "tốt", "sạch", "đẹp", "rẻ", "nhanh", "thơm", "xịn",
    "ổn", "hài_lòng", "chu_đáo", "dễ_thương", "tươi", "đáng_tiền",
)
NEGATIVE_WORDS = (
    "dở", "tệ", "chán", "bẩn", "đắt", "chậm", "nhạt", "hôi", "thất_vọng", "ồn",
    "nguội", "cáu", "kém", "lâu", "dơ", "phí_tiền",
)
NEUTRAL_WORDS = (
    "quán", "món", "phở", "cà_phê", "nhân_viên", "giá", "phục_vụ", "không_gian", "hôm_nay",
    "mình", "đi", "ăn", "với", "bạn", "ở", "đây", "lần", "này", "thì", "cũng", "rất", "khá",
    "và", "nhưng", "gọi", "một", "chút", "bánh", "trà", "sữa", "bàn", "gần", "nhà", "trưa",
)


@dataclass
class SyntheticPaths:
    raw_csv: Path
    train: Path
    test: Path
    corpus: Path
    embeddings: Path


def _review(rng: np.random.Generator, sentiment_words, length_range: Tuple[int, int]) -> str:
    length = int(rng.integers(length_range[0], length_range[1] + 1))
    k = int(rng.integers(2, 5))
    words = [str(w) for w in rng.choice(NEUTRAL_WORDS, size=length - k)]
    for w in rng.choice(sentiment_words, size=k):
        words.insert(int(rng.integers(0, len(words) + 1)), str(w))
    return " ".join(words)


def generate_reviews(
    n: int,
    seed: int,
    length_range: Tuple[int, int] = (6, 20),
    neutral_fraction: float = 0.0,
) -> List[ReviewRecord]:
    """
    正负各半（奇数时正类多一条），正类评分落在 (8.5, 10]，负类在 [1, 5)；
    neutral_fraction>0 时另外生成评分在 [5, 8.5] 的无标签评论
    """
    rng = np.random.default_rng(seed)
    records: List[ReviewRecord] = []
    for i in range(n):
        positive = i % 2 == 0
        if positive:
            text = _review(rng, POSITIVE_WORDS, length_range)
            score = round(float(rng.uniform(8.6, 10.0)), 1)
        else:
            text = _review(rng, NEGATIVE_WORDS, length_range)
            score = round(float(rng.uniform(1.0, 4.9)), 1)
        label = Sentiment.POSITIVE if positive else Sentiment.NEGATIVE
        records.append(ReviewRecord(text=text, avg_score=score, label=label))

    for _ in range(int(round(n * neutral_fraction))):
        text = _review(rng, POSITIVE_WORDS + NEGATIVE_WORDS, length_range)
        records.append(ReviewRecord(text=text, avg_score=round(float(rng.uniform(5.0, 8.5)), 1)))

    order = rng.permutation(len(records))
    return [records[i] for i in order]


def write_scored_csv(records: List[ReviewRecord], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(["text", "avg_score"])
        for record in records:
            writer.writerow([record.text, f"{record.avg_score:.1f}"])


def generate_synthetic_dataset(
    out_dir: Union[str, Path],
    n_train: int = 2000,
    n_test: int = 500,
    seed: int = 42,
    neutral_fraction: float = 0.1,
    embedding_dim: int = 32,
) -> SyntheticPaths:
    """写出原始评分 CSV、训练/测试 jsonl、预训练语料与随机词向量文件"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = SyntheticPaths(
        raw_csv=out_dir / "raw.csv",
        train=out_dir / "train.jsonl",
        test=out_dir / "test.jsonl",
        corpus=out_dir / "corpus.txt",
        embeddings=out_dir / "embeddings.vec",
    )

    train = generate_reviews(n_train, seed)
    test = generate_reviews(n_test, seed + 1)
    raw = generate_reviews(n_train + n_test, seed + 2, neutral_fraction=neutral_fraction)

    write_scored_csv(raw, paths.raw_csv)
    write_jsonl([r.model_copy(update={"avg_score": None}) for r in train], paths.train)
    write_jsonl([r.model_copy(update={"avg_score": None}) for r in test], paths.test)
    paths.corpus.write_text("".join(r.text + "\n" for r in train), encoding="utf-8")
    table = random_embedding_table(POSITIVE_WORDS + NEGATIVE_WORDS + NEUTRAL_WORDS, embedding_dim, seed, name="synthetic")
    table.save(paths.embeddings)

    logger.info(f"合成数据已生成: {out_dir} (训练 {n_train}, 测试 {n_test}, 原始 {len(raw)} 条)")
    return paths
