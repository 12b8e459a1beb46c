"""
按平均分打标签
"""
from typing import List, Sequence, Tuple

from src.models.base import LabelRule, ReviewRecord, Sentiment
from src.utils.exceptions import ContractError
from src.utils.logger import get_logger

logger = get_logger(__name__)


def label_for_score(score: float, rule: LabelRule):
    """严格不等式：恰好等于阈值的分数不打标签"""
    if score > rule.pos_threshold:
        return Sentiment.POSITIVE
    if score < rule.neg_threshold:
        return Sentiment.NEGATIVE
    return None


def apply_label_rule(
    records: Sequence[ReviewRecord],
    rule: LabelRule,
    keep_existing: bool = False,
) -> Tuple[List[ReviewRecord], int]:
    """
    有评分的记录按规则重新打标签；
    keep_existing=True 时没有评分但已带标签的记录原样保留
    """
    labeled: List[ReviewRecord] = []
    dropped = kept = 0
    for i, record in enumerate(records):
        if record.avg_score is None:
            if keep_existing and record.label is not None:
                labeled.append(record)
                kept += 1
                continue
            raise ContractError(f"第 {i} 条记录没有 avg_score，无法按评分打标签")
        label = label_for_score(record.avg_score, rule)
        if label is None:
            dropped += 1
        else:
            labeled.append(record.model_copy(update={"label": label}))

    positives = sum(1 for r in labeled if r.label is Sentiment.POSITIVE)
    logger.info(
        f"标注规则 {rule.name} (>{rule.pos_threshold} / <{rule.neg_threshold}): "
        f"正类 {positives}, 负类 {len(labeled) - positives}, 丢弃 {dropped}, 沿用原标签 {kept}"
    )
    return labeled, dropped
