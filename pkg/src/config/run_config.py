"""
运行配置文件解析
扁平 key=value 文本，# 开头为注释；未知键、重复键、非法值都报 ConfigError

    encoder.L=4
    encoder.h=64
    head.kind=rcnn
    head.view=concat4
    train.lr=5e-4
    train.epochs=3
    train.batch=16
    data.train=data/train.jsonl
    data.test=data/test.jsonl
    seed=42
"""
from pathlib import Path
from typing import Any, Callable, Dict, Tuple, Union

from pydantic import ValidationError

from src.models.config import RunConfig
from src.utils.exceptions import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"不是布尔值: {raw!r}")


def _int_list(raw: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


# 键 -> (RunConfig 中的段, 字段名, 转换函数)；段为空表示顶层字段
KEYS: Dict[str, Tuple[str, str, Callable[[str], Any]]] = {
    "encoder.L": ("encoder", "L", int),
    "encoder.A": ("encoder", "A", int),
    "encoder.h": ("encoder", "h", int),
    "encoder.f": ("encoder", "f", int),
    "encoder.seq_len": ("encoder", "seq_len", int),
    "encoder.dropout": ("encoder", "dropout_rate", float),
    "head.kind": ("head", "kind", str),
    "head.view": ("head", "view", str),
    "head.ffn_hidden": ("head", "ffn_hidden", int),
    "head.lstm_size": ("head", "lstm_size", int),
    "head.filters": ("head", "textcnn_filters", int),
    "head.regions": ("head", "region_sizes", _int_list),
    "head.rcnn_size": ("head", "rcnn_size", int),
    "head.rcnn_filters": ("head", "rcnn_filters", int),
    "head.rcnn_width": ("head", "rcnn_width", int),
    "head.dropout": ("head", "dropout_rate", float),
    "train.lr": ("train", "learning_rate", float),
    "train.epochs": ("train", "epochs", int),
    "train.batch": ("train", "batch_size", int),
    "train.early_stop": ("train", "early_stop", _bool),
    "train.frozen": ("", "frozen_encoder", _bool),
    "data.train": ("", "train_path", str),
    "data.test": ("", "test_path", str),
    "data.vocab": ("", "vocab_path", str),
    "data.pretrained": ("", "pretrained_path", str),
    "seed": ("", "seed", int),
}

PATH_FIELDS = ("train_path", "test_path", "vocab_path", "pretrained_path")


def parse_run_config(text: str, check_paths: bool = True) -> RunConfig:
    fields: Dict[str, Any] = {"encoder": {}, "head": {}, "train": {}}
    seen = set()
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"配置第 {line_number} 行缺少 '=': {line!r}")
        if key not in KEYS:
            raise ConfigError(f"配置第 {line_number} 行有未知键 {key!r}，可用键: {', '.join(KEYS)}")
        if key in seen:
            raise ConfigError(f"配置第 {line_number} 行重复设置 {key!r}")
        seen.add(key)

        section, name, convert = KEYS[key]
        try:
            value = convert(raw)
        except ValueError as e:
            raise ConfigError(f"配置第 {line_number} 行 {key} 的值非法: {e}")
        if section:
            fields[section][name] = value
        else:
            fields[name] = value

    try:
        run = RunConfig(**fields)
    except ValidationError as e:
        raise ConfigError(f"运行配置不合法: {e}")

    if check_paths:
        for name in PATH_FIELDS:
            path = getattr(run, name)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"配置引用的文件不存在: {name}={path}")
    return run


def load_run_config(path: Union[str, Path], check_paths: bool = True) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"配置文件不存在: {path}")
    run = parse_run_config(path.read_text(encoding="utf-8"), check_paths=check_paths)
    logger.info(f"已加载运行配置: {path} (head={run.head.kind.value}, seed={run.seed})")
    return run
