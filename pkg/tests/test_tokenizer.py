"""
分词器：词表训练、编码与解码
"""
import pytest

from src.services.tokenizer import (
    SPECIAL_TOKENS, Vocabulary, decode, encode, normalize_text, segment_word, train_vocab
)
from src.utils.exceptions import InputValidationError, ParseError


def test_merge_training_finds_repeated_word():
    vocab = train_vocab(["aa aa aa"], target_size=10)
    assert "aa" in vocab


def test_specials_come_first():
    vocab = train_vocab(["xin chào các bạn"], target_size=40)
    assert vocab.id_to_token[:5] == list(SPECIAL_TOKENS)
    assert vocab.pad_id == 0


def test_all_characters_retained():
    corpus = ["phở bò", "bún chả"]
    vocab = train_vocab(corpus, target_size=60)
    for ch in set("phởbòbúnchả"):
        assert ch in vocab


def test_target_below_character_count():
    with pytest.raises(InputValidationError):
        train_vocab(["abcdef"], target_size=8)


def test_empty_corpus():
    with pytest.raises(InputValidationError):
        train_vocab(["", "   "], target_size=50)


def test_training_is_deterministic():
    corpus = ["quán ăn ngon", "đồ ăn ngon rẻ", "phục vụ chậm", "ngon ngon"]
    assert train_vocab(corpus, 60).to_bytes() == train_vocab(list(corpus), 60).to_bytes()


def test_empty_text_encodes_to_cls_sep(toy_vocab):
    seq = encode("", toy_vocab, 6)
    assert seq.ids == [toy_vocab.cls_id, toy_vocab.sep_id, 0, 0, 0, 0]
    assert seq.attention_mask == [1, 1, 0, 0, 0, 0]
    assert seq.real_length == 2


def test_greedy_longest_match(toy_vocab):
    assert segment_word("abc", toy_vocab) == ["ab", "##c"]


def test_unmatched_word_becomes_unk(toy_vocab):
    assert segment_word("xyz", toy_vocab) == ["[UNK]"]


def test_truncation_keeps_head_and_sep(toy_vocab):
    seq = encode(" ".join(["ngon"] * 100), toy_vocab, 16)
    assert len(seq) == 16
    assert seq.attention_mask == [1] * 16
    assert seq.ids[0] == toy_vocab.cls_id
    assert seq.ids[-1] == toy_vocab.sep_id
    assert seq.ids[1:15] == [toy_vocab.token_to_id["ngon"]] * 14


@pytest.mark.parametrize("text", ["", "ngon", "quán ngon rẻ đẹp", "xyz abc " * 20])
def test_encode_shape_properties(toy_vocab, text):
    seq = encode(text, toy_vocab, 12)
    assert len(seq.ids) == len(seq.attention_mask) == 12
    assert seq.ids[0] == toy_vocab.cls_id
    assert all(a >= b for a, b in zip(seq.attention_mask, seq.attention_mask[1:]))
    assert seq.ids[seq.real_length - 1] == toy_vocab.sep_id


def test_seq_len_too_small(toy_vocab):
    with pytest.raises(InputValidationError):
        encode("ngon", toy_vocab, 1)


def test_decode_round_trip(toy_vocab):
    assert decode(encode("xin chào", toy_vocab, 8).ids, toy_vocab) == "xin chào"


def test_decode_joins_continuations(toy_vocab):
    assert decode(encode("abc", toy_vocab, 8).ids, toy_vocab) == "abc"


def test_decode_specials_only(toy_vocab):
    assert decode([toy_vocab.cls_id, toy_vocab.sep_id], toy_vocab) == ""


def test_decode_out_of_range(toy_vocab):
    with pytest.raises(InputValidationError):
        decode([len(toy_vocab) + 5], toy_vocab)


def test_normalization():
    assert normalize_text("  quán\t\tngon\x07 ") == "quán ngon"
    assert normalize_text("Quán") == "Quán"
    # 组合形式 NFD -> NFC
    assert normalize_text("qua\u0301n") == "qu\u00e1n"


def test_vocabulary_file_round_trip(tmp_path, toy_vocab):
    path = tmp_path / "vocab.txt"
    toy_vocab.save(path)
    loaded = Vocabulary.load(path)
    assert path.read_bytes() == loaded.to_bytes()
    assert loaded.fingerprint() == toy_vocab.fingerprint()


def test_vocabulary_file_needs_trailing_newline(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("\n".join(SPECIAL_TOKENS), encoding="utf-8")
    with pytest.raises(ParseError):
        Vocabulary.load(path)


def test_duplicate_tokens_rejected():
    with pytest.raises(InputValidationError):
        Vocabulary(list(SPECIAL_TOKENS) + ["a", "a"])


def test_continuation_forms_count_toward_target():
    # 5 个特殊符号 + a b c d + ##b ##c ##d
    vocab = train_vocab(["abcd"], target_size=12)
    assert len(vocab) <= 12
    assert "##d" in vocab
    with pytest.raises(InputValidationError):
        train_vocab(["abcd"], target_size=11)


def test_vocab_never_exceeds_target():
    corpus = ["quán ăn ngon", "đồ ăn ngon rẻ", "phục vụ chậm", "ngon ngon"]
    for size in range(35, 60, 3):
        assert len(train_vocab(corpus, size, min_frequency=1)) <= size
