"""
分类头、特征视图与 classify
"""
import math

import numpy as np
import pytest

from src.models.base import Sentiment
from src.models.config import EncoderConfig, FeatureView, HeadKind, HeadSpec
from src.services.encoder import HiddenStack, encode_sequence, init_encoder_params
from src.services.heads import (
    LAYER_WEIGHTS, RcnnHead, TextCnnHead, build_head, classify, cls_head_logit, feature_view,
    head_logit, head_param_shapes, init_head_params, lstm_head_logit, rcnn_head_logit, textcnn_head_logit
)
from src.services.tensor import Tensor
from src.services.tokenizer import SPECIAL_TOKENS, EncodedSequence
from src.utils.exceptions import ConfigError, ContractError

H = 8


def make_stack(rows: np.ndarray, seq_len: int, num_blocks: int = 2, seed: int = 0) -> HiddenStack:
    """真实行相同、[PAD] 行随机的隐藏层堆叠"""
    rng = np.random.default_rng(seed)
    n = rows.shape[0]
    layers = []
    for _ in range(num_blocks + 1):
        padded = np.concatenate([rows, rng.normal(size=(seq_len - n, rows.shape[1]))], axis=0)
        layers.append(Tensor(padded))
    return HiddenStack(layers=layers, attention_mask=np.array([1] * n + [0] * (seq_len - n)))


def small_spec(kind: HeadKind, **kwargs) -> HeadSpec:
    return HeadSpec(kind=kind, ffn_hidden=6, lstm_size=4, textcnn_filters=3, rcnn_size=4, rcnn_filters=5, dropout_rate=0.0, **kwargs)


@pytest.fixture
def config():
    return EncoderConfig(L=2, A=2, h=H, f=16, seq_len=20, vocab_size=18)


@pytest.fixture
def real_rows():
    return np.random.default_rng(42).normal(size=(5, H))


class TestFeatureView:
    def test_concat_last_four_width(self):
        stack = make_stack(np.ones((3, H)), seq_len=6, num_blocks=4)
        assert feature_view(stack, FeatureView.CONCAT_LAST_4).shape == (6, 4 * H)

    def test_last_layer_is_identity(self):
        stack = make_stack(np.ones((3, H)), seq_len=6, num_blocks=4)
        assert feature_view(stack, FeatureView.LAST_LAYER) is stack.layers[4]

    def test_concat_needs_four_blocks(self):
        with pytest.raises(ConfigError):
            feature_view(make_stack(np.ones((3, H)), seq_len=6, num_blocks=3), FeatureView.CONCAT_LAST_4)

    def test_sum_all_starts_as_mean(self):
        stack = make_stack(np.ones((3, H)), seq_len=6, num_blocks=2)
        params = {LAYER_WEIGHTS: Tensor(np.zeros(3))}
        expected = np.mean([layer.data for layer in stack.layers], axis=0)
        np.testing.assert_allclose(feature_view(stack, FeatureView.SUM_ALL, params).data, expected, atol=1e-6)

    def test_weighted_view_params_are_registered(self, config):
        shapes = head_param_shapes(small_spec(HeadKind.CLS_FFN, view=FeatureView.SUM_ALL), config)
        assert shapes[LAYER_WEIGHTS] == (config.L + 1,)
        assert all(name.startswith(("head.", "view.")) for name in shapes)


class TestClsHead:
    def test_only_position_zero_matters(self, config, real_rows):
        spec = small_spec(HeadKind.CLS_FFN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        changed = real_rows.copy()
        changed[1:] += 3.0
        a = cls_head_logit(make_stack(real_rows, 20), spec, params).item()
        b = cls_head_logit(make_stack(changed, 20, seed=1), spec, params).item()
        assert a == b

    def test_zero_features_follow_bias_path(self, config):
        spec = small_spec(HeadKind.CLS_FFN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        params["head.ffn.bias"].data[:] = 0.5
        params["head.out.bias"].data[:] = -0.25
        logit = cls_head_logit(make_stack(np.zeros((4, H)), 20), spec, params).item()
        expected = math.tanh(0.5) * params["head.out.weight"].data.sum() - 0.25
        assert logit == pytest.approx(expected, abs=1e-6)


class TestLstmHead:
    def test_appended_pads_do_not_change_logit(self, config, real_rows):
        spec = small_spec(HeadKind.LSTM)
        params = init_head_params(spec, config, np.random.default_rng(0))
        a = lstm_head_logit(make_stack(real_rows, 8), spec, params).item()
        b = lstm_head_logit(make_stack(real_rows, 20, seed=5), spec, params).item()
        assert abs(a - b) < 1e-6

    def test_zero_weights_give_output_bias(self, config, real_rows):
        spec = small_spec(HeadKind.LSTM)
        params = init_head_params(spec, config, np.random.default_rng(0))
        params["head.lstm.input_weight"].data[:] = 0.0
        params["head.lstm.recurrent_weight"].data[:] = 0.0
        params["head.out.bias"].data[:] = 0.3
        assert lstm_head_logit(make_stack(real_rows, 20), spec, params).item() == pytest.approx(0.3, abs=1e-6)

    def test_forget_gate_bias_starts_at_one(self, config):
        spec = small_spec(HeadKind.LSTM)
        bias = init_head_params(spec, config, np.random.default_rng(0))["head.lstm.bias"].data
        np.testing.assert_array_equal(bias[4:8], np.ones(4))
        np.testing.assert_array_equal(bias[:4], np.zeros(4))


class TestTextCnnHead:
    def test_pooled_width(self):
        spec = HeadSpec(kind=HeadKind.TEXTCNN, textcnn_filters=25)
        head = TextCnnHead(spec)
        params = head.init_params(H, np.random.default_rng(0))
        pooled = head.pooled_features(Tensor(np.ones((10, H))), 10, params)
        assert pooled.shape == (1, 100)

    def test_appended_pads_do_not_change_logit(self, config, real_rows):
        spec = small_spec(HeadKind.TEXTCNN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        a = textcnn_head_logit(make_stack(real_rows, 8), spec, params).item()
        b = textcnn_head_logit(make_stack(real_rows, 20, seed=5), spec, params).item()
        assert abs(a - b) < 1e-6

    def test_negative_activations_pool_to_zero(self, config, real_rows):
        spec = small_spec(HeadKind.TEXTCNN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        for r in spec.region_sizes:
            params[f"head.conv{r}.bias"].data[:] = -1e4
        params["head.out.bias"].data[:] = 0.7
        assert textcnn_head_logit(make_stack(real_rows, 20), spec, params).item() == pytest.approx(0.7, abs=1e-6)

    def test_text_shorter_than_region(self, config):
        spec = small_spec(HeadKind.TEXTCNN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        logit = textcnn_head_logit(make_stack(np.ones((2, H)), 20), spec, params)
        assert np.isfinite(logit.item())


class TestRcnnHead:
    def test_token_width(self, real_rows):
        head = RcnnHead(small_spec(HeadKind.RCNN))
        params = head.init_params(H, np.random.default_rng(0))
        assert head.token_representation(Tensor(real_rows), 5, params).shape == (5, 2 * 4 + H)

    def test_context_excludes_current_word(self, real_rows):
        head = RcnnHead(small_spec(HeadKind.RCNN))
        params = head.init_params(H, np.random.default_rng(0))
        tokens = head.token_representation(Tensor(real_rows), 5, params).data
        np.testing.assert_array_equal(tokens[0, :4], np.zeros(4))
        np.testing.assert_array_equal(tokens[-1, 4 + H:], np.zeros(4))

    def test_reversal_changes_logit(self, config, real_rows):
        spec = small_spec(HeadKind.RCNN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        a = rcnn_head_logit(make_stack(real_rows, 20), spec, params).item()
        b = rcnn_head_logit(make_stack(real_rows[::-1].copy(), 20), spec, params).item()
        assert abs(a - b) > 1e-6

    def test_appended_pads_do_not_change_logit(self, config, real_rows):
        spec = small_spec(HeadKind.RCNN)
        params = init_head_params(spec, config, np.random.default_rng(0))
        a = rcnn_head_logit(make_stack(real_rows, 8), spec, params).item()
        b = rcnn_head_logit(make_stack(real_rows, 20, seed=5), spec, params).item()
        assert abs(a - b) < 1e-6


class TestRegistry:
    @pytest.mark.parametrize("kind", list(HeadKind))
    def test_every_kind_builds(self, kind):
        assert build_head(HeadSpec(kind=kind)).kind is kind

    def test_kind_mismatch(self, config, real_rows):
        spec = small_spec(HeadKind.LSTM)
        params = init_head_params(spec, config, np.random.default_rng(0))
        with pytest.raises(ContractError):
            cls_head_logit(make_stack(real_rows, 20), spec, params)

    def test_textcnn_region_longer_than_sequence(self):
        config = EncoderConfig(L=2, A=2, h=H, f=16, seq_len=4, vocab_size=18)
        with pytest.raises(ConfigError):
            init_head_params(small_spec(HeadKind.TEXTCNN), config, np.random.default_rng(0))

    def test_dropout_only_in_training(self, config, real_rows):
        spec = small_spec(HeadKind.CLS_FFN).model_copy(update={"dropout_rate": 0.5})
        params = init_head_params(spec, config, np.random.default_rng(0))
        stack = make_stack(real_rows, 20)
        assert head_logit(stack, spec, params).item() == head_logit(stack, spec, params).item()


class TestPaddingThroughEncoder:
    @pytest.mark.parametrize("kind", list(HeadKind))
    def test_appended_pads_do_not_change_logit(self, f64, kind, config, toy_vocab):
        rng = np.random.default_rng(17)
        spec = small_spec(kind, region_sizes=(2, 3))
        params = {**init_encoder_params(config, rng, std=0.3), **init_head_params(spec, config, rng)}
        words = np.arange(len(SPECIAL_TOKENS), len(toy_vocab))
        for _ in range(100):
            ids = [toy_vocab.cls_id] + rng.choice(words, size=int(rng.integers(1, 11))).tolist() + [toy_vocab.sep_id]
            logits = []
            for length in (len(ids), 12, config.seq_len):
                padding = length - len(ids)
                seq = EncodedSequence(ids=ids + [toy_vocab.pad_id] * padding, attention_mask=[1] * len(ids) + [0] * padding)
                logits.append(head_logit(encode_sequence(seq, params, config), spec, params).item())
            assert max(logits) - min(logits) < 1e-6, ids


class TestClassify:
    def test_zero_is_positive(self):
        prediction = classify(0.0)
        assert prediction.probability == 0.5
        assert prediction.label is Sentiment.POSITIVE

    def test_large_logit(self):
        assert classify(800.0).probability == pytest.approx(1.0)
        assert classify(-800.0).probability == pytest.approx(0.0)

    def test_negative_two(self):
        prediction = classify(Tensor(-2.0))
        assert prediction.probability == pytest.approx(0.11920292202211755, abs=1e-7)
        assert prediction.label is Sentiment.NEGATIVE
