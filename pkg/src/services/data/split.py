"""
训练/测试划分
"""
import math
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.models.base import DatasetDescription, ReviewRecord, Sentiment
from src.utils.exceptions import ContractError, InputValidationError
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _test_count(n: int, test_fraction: float) -> int:
    return min(max(_round_half_up(n * test_fraction), 1), n - 1)


def split_records(
    records: Sequence[ReviewRecord],
    test_fraction: float,
    seed: int,
    stratified: bool = False,
) -> Tuple[List[ReviewRecord], List[ReviewRecord]]:
    """
    给定种子结果确定；两部分内保持原始顺序
    分层模式下每个类别各自按比例抽取，至少留一条给训练集和测试集
    """
    if not 0.0 < test_fraction < 1.0:
        raise InputValidationError(f"test_fraction 必须在 (0, 1) 内: {test_fraction}")
    n = len(records)
    rng = np.random.default_rng(seed)

    if stratified:
        groups: Dict[Sentiment, List[int]] = defaultdict(list)
        for i, record in enumerate(records):
            if record.label is None:
                raise ContractError(f"分层划分要求所有记录带标签，第 {i} 条没有")
            groups[record.label].append(i)
        test_idx: List[int] = []
        for label in sorted(groups, key=lambda s: s.value):
            members = groups[label]
            if len(members) < 2:
                raise InputValidationError(f"类别 {label.value} 只有 {len(members)} 条记录，无法分层划分")
            chosen = rng.permutation(len(members))[:_test_count(len(members), test_fraction)]
            test_idx.extend(members[j] for j in chosen)
    else:
        if n < 2:
            raise InputValidationError(f"至少需要2条记录才能划分，当前 {n} 条")
        test_idx = rng.permutation(n)[:_test_count(n, test_fraction)].tolist()

    in_test = set(int(i) for i in test_idx)
    train = [r for i, r in enumerate(records) if i not in in_test]
    test = [r for i, r in enumerate(records) if i in in_test]
    logger.info(f"划分完成: 训练 {len(train)} 条, 测试 {len(test)} 条 (seed={seed}, stratified={stratified})")
    return train, test


def describe_dataset(name: str, train: Sequence[ReviewRecord], test: Sequence[ReviewRecord]) -> DatasetDescription:
    def count(records, label):
        return sum(1 for r in records if r.label is label)

    return DatasetDescription(
        name=name,
        train_positive=count(train, Sentiment.POSITIVE),
        train_negative=count(train, Sentiment.NEGATIVE),
        test_positive=count(test, Sentiment.POSITIVE),
        test_negative=count(test, Sentiment.NEGATIVE),
    )


def format_description(description: DatasetDescription) -> str:
    rows = [
        ("", "Positive", "Negative"),
        ("Train", str(description.train_positive), str(description.train_negative)),
        ("Test", str(description.test_positive), str(description.test_negative)),
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    lines = [f"{description.name}  (total {description.total})"]
    lines += ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
