"""
编码与解码
贪心最长匹配切分子词，加 [CLS]/[SEP]，截断并补齐到固定长度
"""
from dataclasses import dataclass
from typing import List, Sequence

from src.utils.exceptions import InputValidationError
from .normalize import normalize_text
from .vocab import CONTINUATION, Vocabulary

MAX_CHARS_PER_WORD = 100


@dataclass(frozen=True)
class EncodedSequence:
    """固定长度的子词 id 序列及注意力掩码"""
    ids: List[int]
    attention_mask: List[int]

    @property
    def real_length(self) -> int:
        return sum(self.attention_mask)

    def __len__(self) -> int:
        return len(self.ids)


def segment_word(word: str, vocab: Vocabulary) -> List[str]:
    """对单个词做贪心最长匹配；任何位置匹配失败时整个词记为 [UNK]"""
    if len(word) > MAX_CHARS_PER_WORD:
        return [vocab.id_to_token[vocab.unk_id]]
    pieces, start = [], 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION + candidate
            if candidate in vocab:
                piece = candidate
                break
            end -= 1
        if piece is None:
            return [vocab.id_to_token[vocab.unk_id]]
        pieces.append(piece)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocabulary, lowercase: bool = False) -> List[str]:
    pieces: List[str] = []
    for word in normalize_text(text, lowercase=lowercase).split():
        pieces.extend(segment_word(word, vocab))
    return pieces


def encode(text: str, vocab: Vocabulary, seq_len: int, lowercase: bool = False) -> EncodedSequence:
    """[CLS] + 子词 + [SEP]，从尾部截断子词，[PAD] 补齐"""
    if seq_len < 2:
        raise InputValidationError(f"seq_len 至少为2，实际 {seq_len}")
    pieces = tokenize(text, vocab, lowercase=lowercase)[:seq_len - 2]
    ids = [vocab.cls_id] + [vocab.token_to_id[p] for p in pieces] + [vocab.sep_id]
    real = len(ids)
    padding = seq_len - real
    return EncodedSequence(ids=ids + [vocab.pad_id] * padding, attention_mask=[1] * real + [0] * padding)


def decode(ids: Sequence[int], vocab: Vocabulary) -> str:
    """去掉特殊符号，"##" 片段无空格拼接"""
    words: List[str] = []
    for token_id in ids:
        if not 0 <= token_id < len(vocab):
            raise InputValidationError(f"id {token_id} 超出词表范围 [0, {len(vocab)})")
        if token_id in vocab.special_ids:
            continue
        token = vocab.id_to_token[token_id]
        if token.startswith(CONTINUATION) and words:
            words[-1] += token[len(CONTINUATION):]
        else:
            words.append(token)
    return " ".join(words)
