"""
json-lines 读写，数据集统一以 {text, label[, avg_score]} 落盘
"""
import json
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from src.models.base import ReviewRecord
from src.utils.exceptions import ParseError


def record_to_dict(record: ReviewRecord) -> dict:
    row = {"text": record.text}
    if record.label is not None:
        row["label"] = record.label.value
    if record.avg_score is not None:
        row["avg_score"] = record.avg_score
    return row


def write_jsonl(records: Iterable[ReviewRecord], path: Union[str, Path]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_jsonl(path: Union[str, Path]) -> List[ReviewRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(ReviewRecord(**json.loads(line)))
            except (json.JSONDecodeError, ValidationError, TypeError) as e:
                raise ParseError(f"无法解析记录: {e}", line_number=line_number)
    return records


def read_lines(path: Union[str, Path]) -> List[str]:
    """每行一条文本，去掉行尾换行"""
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]
