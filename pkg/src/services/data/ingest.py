"""
语料导入
支持带引号的分隔文本（字段内可含逗号和换行）与 json-lines，列名通过 SchemaMapping 指定
"""
import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, List, Mapping, Optional, Union

from pydantic import BaseModel, model_validator

from src.models.base import ReviewRecord, Sentiment
from src.utils.exceptions import ParseError, SchemaError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class InputFormat(str, Enum):
    DELIMITED = "csv"
    JSON_LINES = "jsonl"


class SchemaMapping(BaseModel):
    """文本列必填，评分列与标签列至少给一个"""
    text_col: str = "text"
    score_col: Optional[str] = None
    label_col: Optional[str] = None

    @model_validator(mode="after")
    def _score_or_label(self):
        if self.score_col is None and self.label_col is None:
            raise ValueError("必须指定评分列或标签列")
        return self

    @property
    def columns(self) -> List[str]:
        return [c for c in (self.text_col, self.score_col, self.label_col) if c is not None]


@dataclass
class IngestResult:
    records: List[ReviewRecord] = field(default_factory=list)
    dropped_empty: int = 0

    def __len__(self) -> int:
        return len(self.records)


def _to_record(row: Mapping[str, Any], schema: SchemaMapping, line_number: int) -> Optional[ReviewRecord]:
    text = row.get(schema.text_col)
    text = "" if text is None else str(text)
    if not text.strip():
        return None

    score = None
    if schema.score_col is not None:
        raw = row.get(schema.score_col)
        if raw not in (None, ""):
            try:
                score = float(raw)
            except (TypeError, ValueError):
                raise ParseError(f"评分无法解析为数字: {raw!r}", line_number=line_number)
            if not 0.0 <= score <= 10.0:
                raise ParseError(f"评分超出 [0, 10]: {score}", line_number=line_number)

    label = None
    if schema.label_col is not None:
        raw = row.get(schema.label_col)
        if raw not in (None, ""):
            try:
                label = Sentiment.parse(raw)
            except ValueError as e:
                raise ParseError(str(e), line_number=line_number)

    if score is None and label is None:
        raise ParseError("记录既没有评分也没有标签", line_number=line_number)
    return ReviewRecord(text=text, avg_score=score, label=label)


def _check_columns(available, schema: SchemaMapping, source: str) -> None:
    missing = [c for c in schema.columns if c not in available]
    if missing:
        raise SchemaError(f"{source} 中找不到映射的列: {missing}，可用列: {list(available)}")


def _ingest_delimited(path: Path, schema: SchemaMapping, delimiter: str, result: IngestResult) -> None:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=delimiter, strict=True)
        try:
            header = next(reader, None)
            if header is None:
                return
            _check_columns(header, schema, str(path))
            for row in reader:
                # line_num 是该记录结束处的物理行号
                line_number = reader.line_num
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(f"字段数 {len(row)} 与表头 {len(header)} 不一致", line_number=line_number)
                record = _to_record(dict(zip(header, row)), schema, line_number)
                if record is None:
                    result.dropped_empty += 1
                else:
                    result.records.append(record)
        except csv.Error as e:
            raise ParseError(f"引号格式错误: {e}", line_number=reader.line_num)


def _ingest_jsonl(path: Path, schema: SchemaMapping, result: IngestResult) -> None:
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"JSON 格式错误: {e}", line_number=line_number)
            if not isinstance(row, dict):
                raise ParseError("每行必须是一个 JSON 对象", line_number=line_number)
            _check_columns(row.keys(), schema, f"{path} 第 {line_number} 行")
            record = _to_record(row, schema, line_number)
            if record is None:
                result.dropped_empty += 1
            else:
                result.records.append(record)


def ingest(
    path: Union[str, Path],
    fmt: Union[InputFormat, str] = InputFormat.DELIMITED,
    schema: Optional[SchemaMapping] = None,
    delimiter: str = ",",
) -> IngestResult:
    """按文件顺序返回记录；空文本记录丢弃并计数"""
    path = Path(path)
    fmt = InputFormat(fmt)
    schema = schema or SchemaMapping(score_col="avg_score")
    result = IngestResult()
    if fmt is InputFormat.DELIMITED:
        _ingest_delimited(path, schema, delimiter, result)
    else:
        _ingest_jsonl(path, schema, result)
    if result.dropped_empty:
        logger.warning(f"{path}: 丢弃 {result.dropped_empty} 条空文本记录")
    logger.info(f"导入 {path}: {len(result.records)} 条记录")
    return result
