"""
数据模型
"""
from .base import (
    CorpusStats, DatasetDescription, LABEL_RULE_PRESETS, LabelRule, MetricsReport, NTC_SV_RULE,
    Prediction, ReviewRecord, Sentiment, VREVIEW_RULE
)
from .config import (
    EncoderConfig, FeatureView, HeadKind, HeadSpec, PretrainConfig, RunConfig, TrainConfig
)

__all__ = [
    'CorpusStats', 'DatasetDescription', 'LABEL_RULE_PRESETS', 'LabelRule', 'MetricsReport',
    'NTC_SV_RULE', 'Prediction', 'ReviewRecord', 'Sentiment', 'VREVIEW_RULE', 'EncoderConfig',
    'FeatureView', 'HeadKind', 'HeadSpec', 'PretrainConfig', 'RunConfig', 'TrainConfig',
]
