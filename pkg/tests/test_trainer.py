"""
微调、评估与预测
"""
import numpy as np
import pytest

from src.models.base import ReviewRecord, Sentiment
from src.models.config import EncoderConfig, FeatureView, HeadKind, HeadSpec, RunConfig, TrainConfig
from src.services.baselines import random_embedding_table
from src.services.data import NEGATIVE_WORDS, NEUTRAL_WORDS, POSITIVE_WORDS, generate_reviews
from src.services.harness.checkpoint import CheckpointKind, checkpoint_to_bytes
from src.services.harness.models import SentimentModel
from src.services.harness.trainer import (
    evaluate, finetune, load_model, predict, train_static_model, train_svm_model
)
from src.services.heads import classify
from src.services.tokenizer import SPECIAL_TOKENS, Vocabulary
from src.utils.exceptions import ConfigError, ContractError, InputValidationError
from tests.conftest import TOY_WORDS, random_pretrained


def _run(frozen: bool = False, kind: HeadKind = HeadKind.CLS_FFN, seed: int = 5) -> RunConfig:
    return RunConfig(
        head=HeadSpec(kind=kind, view=FeatureView.LAST_LAYER, ffn_hidden=4, lstm_size=3, dropout_rate=0.0),
        train=TrainConfig(learning_rate=1e-3, epochs=1, batch_size=8),
        frozen_encoder=frozen,
        seed=seed,
    )


class OracleModel(SentimentModel):
    """按记录里的标签给出 ±3 的 logit"""

    def __init__(self, records):
        self.name = "oracle"
        self.answers = {r.text: (3.0 if r.label is Sentiment.POSITIVE else -3.0) for r in records}

    def logits(self, texts):
        return np.array([self.answers[t] for t in texts])


class TestFinetune:
    def test_frozen_encoder_is_unchanged(self, pretrained_checkpoint, toy_vocab, reviews):
        classifier = finetune(pretrained_checkpoint, _run(frozen=True), reviews, toy_vocab)
        assert classifier.kind is CheckpointKind.CLASSIFIER
        assert classifier.frozen_encoder
        for name, values in pretrained_checkpoint.encoder_tensors().items():
            np.testing.assert_array_equal(classifier.tensors[name], values)
        assert not any(name.startswith("mlm.") for name in classifier.tensors)
        assert any(name.startswith("head.") for name in classifier.tensors)

    def test_unfrozen_encoder_changes(self, pretrained_checkpoint, toy_vocab, reviews):
        classifier = finetune(pretrained_checkpoint, _run(frozen=False), reviews, toy_vocab)
        changed = [
            name for name, values in pretrained_checkpoint.encoder_tensors().items()
            if not np.array_equal(classifier.tensors[name], values)
        ]
        assert changed

    def test_same_seed_same_bytes(self, pretrained_checkpoint, toy_vocab, reviews):
        first = finetune(pretrained_checkpoint, _run(kind=HeadKind.LSTM), reviews, toy_vocab)
        second = finetune(pretrained_checkpoint, _run(kind=HeadKind.LSTM), reviews, toy_vocab)
        assert checkpoint_to_bytes(first) == checkpoint_to_bytes(second)

    def test_loss_history_recorded(self, pretrained_checkpoint, toy_vocab, reviews):
        classifier = finetune(pretrained_checkpoint, _run(), reviews, toy_vocab)
        assert len(classifier.metadata["loss_history"]) == 1
        assert classifier.step_count == 5

    def test_vocab_fingerprint_mismatch(self, pretrained_checkpoint, reviews):
        other = Vocabulary(list(SPECIAL_TOKENS) + TOY_WORDS + ["extra"])
        with pytest.raises(ConfigError):
            finetune(pretrained_checkpoint, _run(), reviews, other)

    def test_requires_pretrained_kind(self, pretrained_checkpoint, toy_vocab, reviews):
        classifier = finetune(pretrained_checkpoint, _run(frozen=True), reviews, toy_vocab)
        with pytest.raises(ConfigError):
            finetune(classifier, _run(), reviews, toy_vocab)

    def test_view_needs_more_layers(self, pretrained_checkpoint, toy_vocab, reviews):
        run = _run(kind=HeadKind.TEXTCNN)
        run.head = run.head.model_copy(update={"view": FeatureView.CONCAT_LAST_4})
        with pytest.raises(ConfigError):
            finetune(pretrained_checkpoint, run, reviews, toy_vocab)

    def test_encoder_override_mismatch(self, pretrained_checkpoint, toy_vocab, reviews):
        run = _run().model_copy(update={"encoder": {"h": 16}})
        with pytest.raises(ConfigError):
            finetune(pretrained_checkpoint, run, reviews, toy_vocab)

    def test_unlabeled_training_record(self, pretrained_checkpoint, toy_vocab):
        records = [ReviewRecord(text="ngon", avg_score=9.0)]
        with pytest.raises(ContractError):
            finetune(pretrained_checkpoint, _run(), records, toy_vocab)

    def test_empty_training_set(self, pretrained_checkpoint, toy_vocab):
        with pytest.raises(InputValidationError):
            finetune(pretrained_checkpoint, _run(), [], toy_vocab)


class TestPredict:
    @pytest.fixture
    def model(self, pretrained_checkpoint, toy_vocab, reviews):
        return load_model(finetune(pretrained_checkpoint, _run(frozen=True), reviews, toy_vocab), toy_vocab)

    def test_empty_input(self, model):
        assert predict(model, []) == []

    def test_duplicates_identical(self, model):
        first, second = predict(model, ["quán ngon rẻ", "quán ngon rẻ"])
        assert first == second

    def test_order_and_batching(self, model):
        texts = ["ngon", "tệ", "chán", "đẹp", "xin chào"]
        assert [p.text for p in predict(model, texts, batch_size=2)] == texts
        assert predict(model, texts, batch_size=2) == predict(model, texts, batch_size=10)

    def test_probability_matches_logit(self, model):
        text = "quán tệ chán"
        (prediction,) = predict(model, [text])
        expected = classify(model.logit(text), text=text)
        assert prediction.label is expected.label
        assert prediction.probability == pytest.approx(expected.probability)

    def test_load_requires_classifier(self, pretrained_checkpoint, toy_vocab):
        with pytest.raises(ConfigError):
            load_model(pretrained_checkpoint, toy_vocab)


class TestEvaluate:
    def test_perfect_model(self, reviews):
        report = evaluate(OracleModel(reviews), reviews, dataset="toy")
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)
        assert report.fp == report.fn == 0
        assert report.tp + report.tn == len(reviews)

    def test_empty_test_set(self, reviews):
        with pytest.raises(InputValidationError):
            evaluate(OracleModel(reviews), [])

    def test_svm_on_separable_reviews(self, reviews):
        model = train_svm_model(reviews, seed=0)
        test = generate_reviews(40, seed=9)
        assert evaluate(model, test).f1 >= 0.85


class TestStaticModel:
    def test_region_longer_than_sequence(self, reviews):
        table = random_embedding_table(POSITIVE_WORDS + NEGATIVE_WORDS, 8, seed=0)
        spec = HeadSpec(kind=HeadKind.TEXTCNN, region_sizes=(2, 6))
        with pytest.raises(ConfigError):
            train_static_model(reviews, table, spec, TrainConfig(epochs=1), seq_len=4, seed=0)

    @pytest.mark.slow
    def test_overfits_small_set(self):
        records = generate_reviews(64, seed=21)
        table = random_embedding_table(POSITIVE_WORDS + NEGATIVE_WORDS + NEUTRAL_WORDS, 16, seed=0)
        spec = HeadSpec(kind=HeadKind.TEXTCNN, textcnn_filters=8, dropout_rate=0.0)
        train = TrainConfig(learning_rate=1e-2, epochs=30, batch_size=8, early_stop=True)
        model = train_static_model(records, table, spec, train, seq_len=24, seed=0)
        assert evaluate(model, records).f1 >= 0.95


class TestOverfit:
    @pytest.mark.slow
    @pytest.mark.parametrize("kind", list(HeadKind))
    def test_head_fits_64_reviews(self, kind, synth_vocab):
        config = EncoderConfig(L=4, A=4, h=64, f=256, seq_len=24, vocab_size=len(synth_vocab), dropout_rate=0.0)
        pretrained = random_pretrained(config, synth_vocab, seed=2)
        run = RunConfig(
            head=HeadSpec(
                kind=kind, ffn_hidden=32, lstm_size=16, textcnn_filters=16, rcnn_size=16, rcnn_filters=16, dropout_rate=0.0,
            ),
            train=TrainConfig(learning_rate=5e-3, epochs=200, batch_size=8, early_stop=True),
            frozen_encoder=True,
            seed=0,
        )
        classifier = finetune(pretrained, run, generate_reviews(64, seed=21), synth_vocab)
        assert classifier.metadata["train_accuracy"] == 1.0
        assert len(classifier.metadata["loss_history"]) <= 200
