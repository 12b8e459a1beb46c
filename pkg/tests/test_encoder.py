"""
迷你 BERT 编码器与掩码语言模型
"""
import math

import numpy as np
import pytest

from src.models.config import EncoderConfig, PretrainConfig
from src.services.encoder import (
    embed, encode_sequence, encoder_block, init_encoder_params, init_mlm_params, make_mlm_batch,
    mlm_loss, params_from_checkpoint, pretrain
)
from src.services.harness.checkpoint import checkpoint_from_bytes, checkpoint_to_bytes
from src.services.tensor import grad_check, precision
from src.services.tokenizer import EncodedSequence, encode
from src.utils.exceptions import ConfigError, InputValidationError

CORPUS = ["quán ngon rẻ", "xin chào", "đẹp ngon", "tệ chán quán", "ab c ngon", "chào quán đẹp"] * 3


def _params(config, seed=0, std=0.1):
    rng = np.random.default_rng(seed)
    return {**init_encoder_params(config, rng, std=std), **init_mlm_params(config, rng, std=std)}


class TestEncoderConfig:
    def test_heads_must_divide_hidden(self):
        with pytest.raises(ValueError):
            EncoderConfig(L=1, A=3, h=8, f=16)

    def test_ffn_not_smaller_than_hidden(self):
        with pytest.raises(ValueError):
            EncoderConfig(L=1, A=2, h=8, f=4)


class TestForward:
    def test_stack_shapes(self, toy_vocab, tiny_config):
        stack = encode_sequence(encode("quán ngon", toy_vocab, tiny_config.seq_len), _params(tiny_config), tiny_config)
        assert len(stack.layers) == tiny_config.L + 1
        for layer in stack.layers:
            assert layer.shape == (tiny_config.seq_len, tiny_config.h)
            assert np.all(np.isfinite(layer.data))

    def test_embedding_is_positionwise(self, toy_vocab, tiny_config):
        params = _params(tiny_config)
        seq = encode("quán ngon", toy_vocab, tiny_config.seq_len)
        changed = EncodedSequence(ids=seq.ids[:-1] + [toy_vocab.token_to_id["tệ"]], attention_mask=seq.attention_mask)
        n = seq.real_length
        np.testing.assert_array_equal(embed(seq, params, tiny_config).data[:n], embed(changed, params, tiny_config).data[:n])

    def test_pad_content_does_not_leak(self, toy_vocab, tiny_config):
        params = _params(tiny_config)
        seq = encode("quán ngon rẻ", toy_vocab, tiny_config.seq_len)
        changed = EncodedSequence(ids=seq.ids[:-1] + [toy_vocab.token_to_id["tệ"]], attention_mask=seq.attention_mask)
        n = seq.real_length
        a = encode_sequence(seq, params, tiny_config).layers[-1].data[:n]
        b = encode_sequence(changed, params, tiny_config).layers[-1].data[:n]
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_attention_ignores_pad_columns(self, toy_vocab, tiny_config):
        seq = encode("quán ngon", toy_vocab, tiny_config.seq_len)
        stack = encode_sequence(seq, _params(tiny_config), tiny_config, return_attention=True)
        n = seq.real_length
        assert len(stack.attentions) == tiny_config.L
        for probs in stack.attentions:
            assert probs.shape == (tiny_config.A, tiny_config.seq_len, tiny_config.seq_len)
            assert np.all(probs[:, :, n:] == 0.0)
            np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-6)

    def test_out_of_range_id(self, tiny_config):
        seq = EncodedSequence(ids=[2, tiny_config.vocab_size] + [0] * 10, attention_mask=[1, 1] + [0] * 10)
        with pytest.raises(InputValidationError):
            embed(seq, _params(tiny_config), tiny_config)

    def test_truncated_stack_keeps_real_rows(self, toy_vocab, tiny_config):
        seq = encode("quán ngon", toy_vocab, tiny_config.seq_len)
        stack = encode_sequence(seq, _params(tiny_config), tiny_config)
        short = stack.truncated()
        assert short.real_length == seq.real_length
        np.testing.assert_array_equal(short.layers[-1].data, stack.layers[-1].data[:seq.real_length])

    def test_single_block_gradients(self, toy_vocab):
        with precision("f64"):
            config = EncoderConfig(L=1, A=2, h=16, f=32, seq_len=8, vocab_size=len(toy_vocab), dropout_rate=0.0)
            params = init_encoder_params(config, np.random.default_rng(2), std=0.3)
            seq = encode("quán ngon rẻ đẹp", toy_vocab, config.seq_len)
            x0 = embed(seq, params, config)
            keep = np.asarray(seq.attention_mask, dtype=bool)
            target = np.random.default_rng(3).normal(size=(config.seq_len, config.h))
            block_params = {k: v for k, v in params.items() if k.startswith("layers.0")}

            def loss_fn():
                return (encoder_block(x0.detach(), keep, params, 0, config) * target).sum()

            assert grad_check(loss_fn, block_params, eps=1e-6, samples_per_param=3) < 1e-5


class TestMaskedLanguageModel:
    def test_only_real_non_special_positions_masked(self, toy_vocab, tiny_config):
        seqs = [encode(text, toy_vocab, tiny_config.seq_len) for text in CORPUS[:6]]
        batch = make_mlm_batch(seqs, toy_vocab, np.random.default_rng(0))
        for row, seq in enumerate(seqs):
            for pos in np.flatnonzero(batch.masked[row]):
                assert seq.attention_mask[pos] == 1
                assert seq.ids[pos] not in toy_vocab.special_ids
            real_words = sum(1 for i, m in zip(seq.ids, seq.attention_mask) if m and i not in toy_vocab.special_ids)
            assert batch.masked[row].sum() == max(1, round(0.15 * real_words))

    def test_nothing_to_mask(self, toy_vocab, tiny_config):
        with pytest.raises(InputValidationError):
            make_mlm_batch([encode("", toy_vocab, tiny_config.seq_len)], toy_vocab, np.random.default_rng(0))

    def test_uniform_predictions_give_log_vocab(self, toy_vocab, tiny_config):
        params = _params(tiny_config)
        params["embeddings.token"].data[:] = 0.0
        seqs = [encode(text, toy_vocab, tiny_config.seq_len) for text in CORPUS[:4]]
        batch = make_mlm_batch(seqs, toy_vocab, np.random.default_rng(0))
        assert mlm_loss(batch, params, tiny_config).item() == pytest.approx(math.log(len(toy_vocab)), abs=1e-5)

    def test_unmasked_positions_do_not_matter(self, toy_vocab, tiny_config):
        params = _params(tiny_config)
        seqs = [encode(text, toy_vocab, tiny_config.seq_len) for text in CORPUS[:4]]
        batch = make_mlm_batch(seqs, toy_vocab, np.random.default_rng(0))
        changed_targets = batch.targets.copy()
        changed_targets[~batch.masked] = toy_vocab.unk_id
        changed = type(batch)(batch.input_ids, batch.attention_mask, batch.masked, changed_targets)
        assert mlm_loss(batch, params, tiny_config).item() == mlm_loss(changed, params, tiny_config).item()

    def test_vocab_size_mismatch(self, toy_vocab, tiny_config):
        config = tiny_config.model_copy(update={"vocab_size": len(toy_vocab) + 1})
        with pytest.raises(ConfigError):
            pretrain(CORPUS, toy_vocab, config, PretrainConfig(batch_size=4), seed=0)

    def test_pretraining_is_deterministic(self, toy_vocab, tiny_config):
        hyper = PretrainConfig(batch_size=4, epochs=1, max_steps=3)
        first = pretrain(CORPUS, toy_vocab, tiny_config, hyper, seed=5)
        second = pretrain(CORPUS, toy_vocab, tiny_config, hyper, seed=5)
        assert first.step_count == 3
        assert checkpoint_to_bytes(first) == checkpoint_to_bytes(second)

    def test_reloaded_checkpoint_gives_same_loss(self, toy_vocab, tiny_config):
        checkpoint = pretrain(CORPUS, toy_vocab, tiny_config, PretrainConfig(batch_size=4, epochs=1, max_steps=2), seed=1)
        reloaded = checkpoint_from_bytes(checkpoint_to_bytes(checkpoint))
        seqs = [encode(text, toy_vocab, tiny_config.seq_len) for text in ["quán ngon rẻ", "tệ chán quán"]]
        batch = make_mlm_batch(seqs, toy_vocab, np.random.default_rng(9))
        before = mlm_loss(batch, params_from_checkpoint(checkpoint, requires_grad=False), tiny_config).item()
        after = mlm_loss(batch, params_from_checkpoint(reloaded, requires_grad=False), tiny_config).item()
        assert before == after

    @pytest.mark.slow
    def test_loss_decreases(self, toy_vocab, tiny_config):
        corpus = [CORPUS[i % len(CORPUS)] for i in range(50)]
        hyper = PretrainConfig(batch_size=5, epochs=20, learning_rate=5e-3)
        history = pretrain(corpus, toy_vocab, tiny_config, hyper, seed=0).metadata["loss_history"]
        assert len(history) == 200
        assert np.mean(history[-20:]) < np.mean(history[:20])
