"""
数据：导入、打标签、划分、统计与合成语料
"""
from .io import read_jsonl, read_lines, record_to_dict, write_jsonl
from .ingest import IngestResult, InputFormat, SchemaMapping, ingest
from .labeling import apply_label_rule, label_for_score
from .split import describe_dataset, format_description, split_records
from .stats import compute_stats, format_stats_table, interpolated_percentile, stats_to_json, whitespace_count
from .synthetic import (
    NEGATIVE_WORDS, NEUTRAL_WORDS, POSITIVE_WORDS, SyntheticPaths, generate_reviews, generate_synthetic_dataset,
    write_scored_csv
)

__all__ = [
    'read_jsonl', 'read_lines', 'record_to_dict', 'write_jsonl', 'IngestResult', 'InputFormat',
    'SchemaMapping', 'ingest', 'apply_label_rule', 'label_for_score', 'describe_dataset',
    'format_description', 'split_records', 'compute_stats', 'format_stats_table',
    'interpolated_percentile', 'stats_to_json', 'whitespace_count', 'NEGATIVE_WORDS', 'NEUTRAL_WORDS',
    'POSITIVE_WORDS', 'SyntheticPaths', 'generate_reviews', 'generate_synthetic_dataset',
    'write_scored_csv',
]
