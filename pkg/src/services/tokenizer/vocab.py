"""
子词词表
BPE 式合并训练，编码时用 WordPiece 式的 "##" 续接片段
"""
import hashlib
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

from src.utils.exceptions import InputValidationError, ParseError
from src.utils.logger import get_logger
from .normalize import normalize_text

logger = get_logger(__name__)

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP, MASK)
CONTINUATION = "##"


class Vocabulary:
    """词表：id 连续为 0..V-1，前五个固定为特殊符号"""

    def __init__(self, tokens: Iterable[str]):
        tokens = list(tokens)
        if tuple(tokens[:len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise InputValidationError(f"词表前五项必须依次为 {SPECIAL_TOKENS}")
        self.id_to_token: List[str] = []
        self.token_to_id: Dict[str, int] = {}
        for token in tokens:
            if token in self.token_to_id:
                raise InputValidationError(f"词表中存在重复符号: {token!r}")
            if not token or any(ch.isspace() for ch in token):
                raise InputValidationError(f"词表符号不能为空或包含空白: {token!r}")
            self.token_to_id[token] = len(self.id_to_token)
            self.id_to_token.append(token)

        self.pad_id = self.token_to_id[PAD]
        self.unk_id = self.token_to_id[UNK]
        self.cls_id = self.token_to_id[CLS]
        self.sep_id = self.token_to_id[SEP]
        self.mask_id = self.token_to_id[MASK]
        self.special_ids = frozenset(range(len(SPECIAL_TOKENS)))

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def to_bytes(self) -> bytes:
        return "".join(f"{token}\n" for token in self.id_to_token).encode("utf-8")

    def fingerprint(self) -> str:
        """序列化内容的 sha256，检查点用它引用词表"""
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_bytes())
        logger.info(f"词表已保存: {path} ({len(self)} 个符号)")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Vocabulary":
        text = raw.decode("utf-8")
        if text and not text.endswith("\n"):
            raise ParseError("词表文件必须以换行结尾", line_number=text.count("\n") + 1)
        return cls(text.split("\n")[:-1])

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        return cls.from_bytes(Path(path).read_bytes())


def _best_pair(pair_counts: Counter) -> Tuple[Tuple[str, str], int]:
    # 频次最高者优先，同频按符号对的字典序取最小
    best = min(pair_counts.items(), key=lambda item: (-item[1], item[0]))
    return best[0], best[1]


def _merge_symbols(symbols: Tuple[str, ...], pair: Tuple[str, str], merged: str) -> Tuple[str, ...]:
    out, i = [], 0
    while i < len(symbols):
        if i < len(symbols) - 1 and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def train_vocab(
    corpus: Iterable[str],
    target_size: int,
    min_frequency: int = 2,
    lowercase: bool = False,
) -> Vocabulary:
    """
    在按空白切分的词上做 BPE 合并训练。
    每个词初始为 [c0, ##c1, ##c2, ...]，合并 (x, ##y) 得到 xy。
    给定语料结果确定：同频符号对按字典序决胜。
    """
    word_counts: Counter = Counter()
    for line in corpus:
        word_counts.update(normalize_text(line, lowercase=lowercase).split())
    if not word_counts:
        raise InputValidationError("语料为空，无法训练词表")

    characters = sorted({ch for word in word_counts for ch in word})
    words: Dict[str, Tuple[str, ...]] = {
        word: (word[0],) + tuple(CONTINUATION + ch for ch in word[1:]) for word in word_counts
    }
    continuation_chars = sorted({sym for symbols in words.values() for sym in symbols[1:]})
    # 基础符号（含 ## 续接形式）全部计入词表大小
    base_size = len(SPECIAL_TOKENS) + len(characters) + len(continuation_chars)
    if target_size < base_size or target_size <= len(SPECIAL_TOKENS) + len(characters):
        raise InputValidationError(
            f"target_size={target_size} 装不下基础符号: 特殊符号 {len(SPECIAL_TOKENS)} + 字符 {len(characters)} "
            f"+ 续接字符 {len(continuation_chars)}"
        )
    tokens: List[str] = list(SPECIAL_TOKENS) + characters + continuation_chars
    known = set(tokens)

    merges = 0
    while len(tokens) < target_size:
        pair_counts: Counter = Counter()
        for word, symbols in words.items():
            freq = word_counts[word]
            for left, right in zip(symbols, symbols[1:]):
                pair_counts[(left, right)] += freq
        if not pair_counts:
            break
        pair, count = _best_pair(pair_counts)
        if count < min_frequency:
            break

        merged = pair[0] + pair[1][len(CONTINUATION):]
        words = {
            word: _merge_symbols(symbols, pair, merged) if pair[0] in symbols else symbols
            for word, symbols in words.items()
        }
        merges += 1
        if merged not in known:
            known.add(merged)
            tokens.append(merged)

    logger.info(f"词表训练完成: {len(tokens)} 个符号, {merges} 次合并, {len(word_counts)} 个不同词")
    return Vocabulary(tokens)
