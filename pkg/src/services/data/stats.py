"""
每条评论词数的描述统计
"""
import json
import math
from typing import Callable, List, Sequence

import numpy as np

from src.models.base import CorpusStats, ReviewRecord
from src.utils.exceptions import InputValidationError


def whitespace_count(text: str) -> int:
    return len(text.split())


def interpolated_percentile(sorted_values: Sequence[float], q: float) -> float:
    """在已排序序列上按位置 q·(n-1) 线性插值"""
    position = q * (len(sorted_values) - 1)
    lo = int(math.floor(position))
    hi = min(lo + 1, len(sorted_values) - 1)
    fraction = position - lo
    return float(sorted_values[lo] + fraction * (sorted_values[hi] - sorted_values[lo]))


def compute_stats(
    records: Sequence[ReviewRecord],
    count_tokens: Callable[[str], int] = whitespace_count,
) -> CorpusStats:
    if not records:
        raise InputValidationError("没有记录，无法统计")
    counts: List[int] = sorted(count_tokens(r.text) for r in records)
    n = len(counts)
    mean = sum(counts) / n
    std = float(np.sqrt(sum((c - mean) ** 2 for c in counts) / n))
    return CorpusStats(
        count=n,
        mean=mean,
        std=std,
        min=float(counts[0]),
        p25=interpolated_percentile(counts, 0.25),
        p50=interpolated_percentile(counts, 0.50),
        p75=interpolated_percentile(counts, 0.75),
        max=float(counts[-1]),
    )


def format_stats_table(stats: CorpusStats, name: str = "") -> str:
    rows = [(label, f"{value:.2f}") for label, value in stats.table_rows()]
    width = max(len(label) for label, _ in rows)
    value_width = max(len(value) for _, value in rows)
    lines = [f"{name} ({stats.count} reviews)" if name else f"{stats.count} reviews"]
    lines += [f"{label.ljust(width)}  {value.rjust(value_width)}" for label, value in rows]
    return "\n".join(lines)


def stats_to_json(stats: CorpusStats, name: str = "") -> str:
    return json.dumps({"dataset": name, **stats.model_dump()}, ensure_ascii=False, indent=2)
