"""
分词器服务
"""
from .encoding import EncodedSequence, decode, encode, segment_word, tokenize
from .normalize import normalize_text
from .vocab import CLS, MASK, PAD, SEP, SPECIAL_TOKENS, UNK, Vocabulary, train_vocab

__all__ = [
    'EncodedSequence', 'decode', 'encode', 'segment_word', 'tokenize', 'normalize_text',
    'CLS', 'MASK', 'PAD', 'SEP', 'SPECIAL_TOKENS', 'UNK', 'Vocabulary', 'train_vocab',
]
