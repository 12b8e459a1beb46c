"""
公共测试夹具：小词表、小编码器与合成评论
"""
import numpy as np
import pytest

from src.models.config import EncoderConfig
from src.services.data import NEGATIVE_WORDS, NEUTRAL_WORDS, POSITIVE_WORDS, generate_reviews
from src.services.encoder import init_encoder_params, init_mlm_params
from src.services.harness.checkpoint import Checkpoint, CheckpointKind
from src.services.tensor import precision
from src.services.tokenizer import SPECIAL_TOKENS, Vocabulary

TOY_WORDS = ["ngon", "rẻ", "quán", "tệ", "chán", "đẹp", "xin", "chào", "a", "b", "c", "##c", "ab"]
SYNTH_WORDS = sorted(set(POSITIVE_WORDS + NEGATIVE_WORDS + NEUTRAL_WORDS))


def random_pretrained(config: EncoderConfig, vocab: Vocabulary, seed: int, std: float = 0.1) -> Checkpoint:
    """未训练的预训练检查点（随机初始化）"""
    rng = np.random.default_rng(seed)
    params = {**init_encoder_params(config, rng, std=std), **init_mlm_params(config, rng, std=std)}
    return Checkpoint(
        kind=CheckpointKind.PRETRAINED,
        encoder_config=config,
        tensors={name: p.data.astype(np.float32) for name, p in params.items()},
        tokenizer_hash=vocab.fingerprint(),
        seed=seed,
    )


@pytest.fixture
def f64():
    with precision("f64"):
        yield


@pytest.fixture
def toy_vocab() -> Vocabulary:
    return Vocabulary(list(SPECIAL_TOKENS) + TOY_WORDS)


@pytest.fixture
def synth_vocab() -> Vocabulary:
    """合成评论的整词词表"""
    return Vocabulary(list(SPECIAL_TOKENS) + SYNTH_WORDS)


@pytest.fixture
def tiny_config(toy_vocab) -> EncoderConfig:
    return EncoderConfig(L=2, A=2, h=8, f=16, seq_len=12, vocab_size=len(toy_vocab), dropout_rate=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def reviews():
    return generate_reviews(40, seed=3)


@pytest.fixture
def pretrained_checkpoint(tiny_config, toy_vocab):
    return random_pretrained(tiny_config, toy_vocab, seed=11)
