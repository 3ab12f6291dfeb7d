import json

import numpy as np
import pytest

from neuralscorer.fixtures import make_overfit_fixture, fixture_texts
from neuralscorer.model import BiEncoder, CrossEncoder, EncoderConfig
from neuralscorer.tokenizer import Vocab
from neuralscorer.train import (
    TrainConfig,
    load_examples,
    precision_at_1,
    prepare_examples,
    train_bi_encoder,
    train_cross_encoder,
)


def small_model(examples, seed=5, mode="cross"):
    vocab = Vocab.build(fixture_texts(examples))
    config = EncoderConfig(
        vocab_size=vocab.size, embed_dim=16, layers=2, heads=2, max_len=24, ffn_mult=2, seed=seed
    )
    return (CrossEncoder if mode == "cross" else BiEncoder)(config, vocab)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(negatives_per_query=0)
    with pytest.raises(ValueError):
        TrainConfig(loss="hinge")


def test_prepare_skips_and_counts():
    usable, skipped = prepare_examples(
        [
            ("q1", ["gold"], ["neg"]),
            ("q2", [], ["neg"]),
            ("q3", ["gold"], []),
        ]
    )
    assert len(usable) == 1 and skipped == 2


def test_load_examples_from_dataset_schema(tmp_path):
    rows = [
        {
            "id": "a",
            "text": "what is the weather",
            "domain": "weather",
            "split": "train",
            "responses": [
                {"agent": "g", "text": "sunny all day", "votes": 4},
                {"agent": "h", "text": "didn't get that", "votes": 0},
            ],
        },
        {
            "id": "b",
            "text": "no gold here",
            "domain": "misc",
            "split": "train",
            "responses": [{"agent": "g", "text": "nope", "votes": 1}],
        },
        {"id": "c", "text": "test split", "domain": "misc", "split": "test", "responses": []},
    ]
    path = tmp_path / "d.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows))
    examples, skipped = load_examples(path, split="train")
    assert len(examples) == 1 and skipped == 1
    assert examples[0].gold == ("sunny all day",)


def test_zero_learning_rate_is_noop():
    examples = make_overfit_fixture(6, seed=3)
    model = small_model(examples)
    before = {k: v.copy() for k, v in model.params.items()}
    train_cross_encoder(model, examples, TrainConfig(epochs=2, learning_rate=0.0, seed=1))
    for name, original in before.items():
        assert np.array_equal(model.params[name], original), name


def test_training_is_deterministic():
    examples = make_overfit_fixture(8, seed=3)
    config = TrainConfig(epochs=3, seed=9)
    m1 = small_model(examples)
    m2 = small_model(examples)
    r1 = train_cross_encoder(m1, examples, config)
    r2 = train_cross_encoder(m2, examples, config)
    assert r1.loss_trace == r2.loss_trace
    for name in m1.params:
        assert np.array_equal(m1.params[name], m2.params[name])


def test_loss_trace_decreases_on_smoothed_window():
    examples = make_overfit_fixture(12, seed=3)
    model = small_model(examples)
    trace = train_cross_encoder(model, examples, TrainConfig(epochs=30, seed=2)).loss_trace
    third = len(trace) // 3
    first, last = np.mean(trace[:third]), np.mean(trace[-third:])
    assert last < first


def test_cross_overfit_scores_separate():
    # Tiny 5-pair set: gold pairs end up > 0.9, negatives < 0.1.
    examples = make_overfit_fixture(5, seed=21)
    model = small_model(examples, seed=2)
    train_cross_encoder(model, examples, TrainConfig(epochs=120, learning_rate=5e-3, seed=2))
    for ex in examples:
        assert model.score(ex.query, ex.gold[0]) > 0.9
        for neg in ex.negatives:
            assert model.score(ex.query, neg) < 0.1


def test_pointwise_loss_also_learns():
    examples = make_overfit_fixture(8, seed=3)
    model = small_model(examples)
    train_cross_encoder(
        model, examples, TrainConfig(epochs=40, seed=2, loss="pointwise", learning_rate=5e-3)
    )
    assert precision_at_1(model, examples) >= 0.9


def test_bi_encoder_heldout_pairs():
    train = make_overfit_fixture(40, seed=13)
    heldout = make_overfit_fixture(20, seed=77)
    model = small_model(train + heldout, mode="bi")  # vocab covers both draws
    train_bi_encoder(model, train, TrainConfig(epochs=60, learning_rate=3e-3, seed=4))
    wins = total = 0
    for ex in heldout:
        gold_score = model.score(ex.query, ex.gold[0])
        for neg in ex.negatives:
            total += 1
            wins += gold_score > model.score(ex.query, neg)
    assert wins / total >= 0.95, f"{wins}/{total}"


def test_empty_training_set_rejected():
    examples = make_overfit_fixture(2, seed=1)
    model = small_model(examples)
    with pytest.raises(ValueError):
        train_cross_encoder(model, [], TrainConfig(epochs=1))
