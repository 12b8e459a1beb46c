"""
基础数据模型
评论记录、标注规则、语料统计、评估报告
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class Sentiment(str, Enum):
    """情感标签"""
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def as_int(self) -> int:
        return 1 if self is Sentiment.POSITIVE else 0

    @classmethod
    def from_int(cls, value: int) -> "Sentiment":
        return cls.POSITIVE if int(value) == 1 else cls.NEGATIVE

    @classmethod
    def parse(cls, raw) -> "Sentiment":
        """宽松解析 positive/negative/pos/neg/1/0"""
        if isinstance(raw, Sentiment):
            return raw
        text = str(raw).strip().lower()
        if text in ("positive", "pos", "1", "1.0", "true"):
            return cls.POSITIVE
        if text in ("negative", "neg", "0", "0.0", "false"):
            return cls.NEGATIVE
        raise ValueError(f"无法识别的标签: {raw!r}")


class ReviewRecord(BaseModel):
    """一条评论"""
    text: str
    avg_score: Optional[float] = Field(default=None, ge=0.0, le=10.0)
    label: Optional[Sentiment] = None

    @model_validator(mode="after")
    def _score_or_label(self):
        if self.avg_score is None and self.label is None:
            raise ValueError("评论必须至少带有评分或标签之一")
        return self


class LabelRule(BaseModel):
    """按平均分打标签：高于 pos_threshold 为正，低于 neg_threshold 为负，中间丢弃"""
    pos_threshold: float
    neg_threshold: float
    name: str = "custom"

    @model_validator(mode="after")
    def _ordered(self):
        if self.neg_threshold > self.pos_threshold:
            raise ValueError(f"neg_threshold({self.neg_threshold}) 不能大于 pos_threshold({self.pos_threshold})")
        return self


# 两个数据集的阈值
NTC_SV_RULE = LabelRule(pos_threshold=8.5, neg_threshold=5.0, name="ntc-sv")
VREVIEW_RULE = LabelRule(pos_threshold=7.5, neg_threshold=5.0, name="vreview")
LABEL_RULE_PRESETS: Dict[str, LabelRule] = {rule.name: rule for rule in (NTC_SV_RULE, VREVIEW_RULE)}


class CorpusStats(BaseModel):
    """每条评论词数的描述统计"""
    count: int
    mean: float
    std: float
    min: float
    p25: float
    p50: float
    p75: float
    max: float

    @model_validator(mode="after")
    def _ordered(self):
        if not (self.min <= self.p25 <= self.p50 <= self.p75 <= self.max):
            raise ValueError("分位数顺序不满足 min ≤ p25 ≤ p50 ≤ p75 ≤ max")
        return self

    def table_rows(self) -> List[Tuple[str, float]]:
        """按统计表的字段顺序输出"""
        return [
            ("Mean", self.mean),
            ("Std", self.std),
            ("Min", self.min),
            ("25%", self.p25),
            ("50%", self.p50),
            ("75%", self.p75),
            ("Max", self.max),
        ]


class DatasetDescription(BaseModel):
    """训练/测试集按类别计数"""
    name: str
    train_positive: int
    train_negative: int
    test_positive: int
    test_negative: int

    @property
    def total(self) -> int:
        return self.train_positive + self.train_negative + self.test_positive + self.test_negative


class MetricsReport(BaseModel):
    """以正类为参考类的 P/R/F1 与混淆计数"""
    dataset: str = ""
    model: str = ""
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    macro_precision: Optional[float] = None
    macro_recall: Optional[float] = None
    macro_f1: Optional[float] = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_row(self) -> Tuple[str, str, str, str]:
        """结果表的一行：模型, P%, R%, F1%"""
        return (
            self.model,
            f"{100 * self.precision:.2f}",
            f"{100 * self.recall:.2f}",
            f"{100 * self.f1:.2f}",
        )


class Prediction(BaseModel):
    """单条预测"""
    text: str = ""
    label: Sentiment
    probability: float
