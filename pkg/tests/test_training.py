import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kwmatch.config import TrainingConfig
from kwmatch.data import QuestionPairRecord, gen_synthetic
from kwmatch.errors import ConfigError, EmptyDataset, LabelError, ShapeError, UndefinedAUC
from kwmatch.nn.autograd import Tensor
from kwmatch.pipeline import build_model
from kwmatch.training import (
    accuracy,
    auc,
    evaluate,
    evaluate_scores,
    format_comparison,
    hardness_bucket,
    length_bin,
    log_likelihood_loss,
    loss,
    train,
)

from support import D1, Q, records, toy_config, toy_model


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    hits = sum(Fraction(1) if p > n else Fraction(1, 2) if p == n else Fraction(0) for p in pos for n in neg)
    return float(hits / (len(pos) * len(neg)))


# loss -------------------------------------------------------------------

def test_loss_half_is_ln2():
    assert float(log_likelihood_loss(np.full(4, 0.5), [1, 0, 1, 0]).data) == pytest.approx(math.log(2), abs=1e-12)


def test_loss_limit_to_zero():
    assert float(log_likelihood_loss([1.0 - 1e-12], [1]).data) < 1e-6


def test_loss_hand_batch():
    val = float(log_likelihood_loss([0.8, 0.3], [1, 0]).data)
    assert val == pytest.approx(-0.5 * (math.log(0.8) + math.log(0.7)), abs=1e-12)
    assert val == pytest.approx(0.2899, abs=1e-4)


def test_loss_clamps_extremes():
    val = float(log_likelihood_loss([0.0], [1]).data)
    assert val == pytest.approx(-math.log(1e-7), rel=1e-9)


def test_loss_errors():
    with pytest.raises(LabelError):
        log_likelihood_loss([0.5], [2])
    with pytest.raises(EmptyDataset):
        log_likelihood_loss([], [])
    with pytest.raises(ShapeError):
        log_likelihood_loss([0.5, 0.5], [1])


@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01), st.sampled_from([0, 1]))
def test_loss_positive_and_monotone(s, step, y):
    before = float(log_likelihood_loss([s], [y]).data)
    closer = s + step if y == 1 else s - step
    closer = min(max(closer, 1e-6), 1 - 1e-6)
    assert before > 0
    assert float(log_likelihood_loss([closer], [y]).data) < before


def test_loss_gradient_is_finite_at_clamp():
    s = Tensor(np.array([0.0, 1.0, 0.4]), requires_grad=True)
    from kwmatch.nn import autograd as ag
    ag.backward(log_likelihood_loss(s, [1, 0, 1]))
    assert np.isfinite(s.grad).all()


def test_batch_loss_through_model():
    model = toy_model()
    batch = records((Q, D1, 1), (Q, Q, 1))
    val = float(loss(batch, model).data)
    sims = model.predict([(Q, D1), (Q, Q)])
    assert val == pytest.approx(-np.mean(np.log(sims)), abs=1e-9)


# accuracy and auc ---------------------------------------------------------

def test_accuracy_examples():
    assert accuracy([0.9, 0.1], [1, 0]) == 1.0
    assert accuracy([0.9, 0.9], [1, 0]) == 0.5
    assert accuracy([0.5], [1]) == 0.0
    with pytest.raises(ShapeError):
        accuracy([0.1], [1, 0])


def test_auc_examples():
    assert auc([0.9, 0.8, 0.7, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.75
    assert auc([0.3] * 6, [1, 0, 1, 0, 1, 0]) == 0.5
    with pytest.raises(UndefinedAUC):
        auc([0.1, 0.2], [1, 1])


def test_auc_matches_brute_force_random_sets():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 51))
        labels = rng.integers(0, 2, n)
        labels[0], labels[1] = 0, 1
        scores = rng.integers(0, 8, n) / 7.0  # coarse grid to force ties
        assert auc(scores, labels) == brute_auc(scores, labels)


# buckets and bins -------------------------------------------------------

def test_hardness_examples():
    assert hardness_bucket(Q, Q, 1) == "easy"
    assert hardness_bucket("phone cool", "iphone overheating", 1) == "hard"
    assert hardness_bucket("a b c", "a b d", 0) == "middle"  # J = 0.5
    assert hardness_bucket("a b c", "a b d", 1) == "middle"
    assert hardness_bucket(Q, Q, 0) == "hard"
    assert hardness_bucket("x y", "z w", 0) == "easy"


def test_hardness_band_endpoints_inclusive():
    # J = 1/5 and J = 7/10
    assert hardness_bucket("a b c", "a d e", 1) == "hard"
    assert hardness_bucket("a b c d e f g h", "a b c d e f g i j", 1) == "easy"


def test_length_bins():
    assert [length_bin(n) for n in (1, 5, 6, 10, 11, 15, 16, 90)] == \
        ["1-5", "1-5", "6-10", "6-10", "11-15", "11-15", "16+", "16+"]


# evaluation -------------------------------------------------------------

BALANCED = records(("a b", "a b", 1), ("c d", "c e", 1), ("f g", "h i", 0), ("j", "k", 0))


def test_perfect_scorer():
    rep = evaluate_scores([0.9, 0.8, 0.2, 0.1], BALANCED)
    assert rep.accuracy == 1.0 and rep.auc == 1.0
    assert (rep.tp, rep.fp, rep.tn, rep.fn) == (2, 0, 2, 0)


def test_constant_half_scorer():
    rep = evaluate_scores([0.5] * 4, BALANCED)
    assert rep.accuracy == 0.5 and rep.auc == 0.5
    assert rep.tp == 0 and rep.fp == 0


def test_report_invariants():
    rng = np.random.default_rng(2)
    scores = rng.random(4)
    rep = evaluate_scores(scores, BALANCED)
    assert rep.tp + rep.fp + rep.tn + rep.fn == rep.size == 4
    assert rep.accuracy == pytest.approx((rep.tp + rep.tn) / 4)
    assert sum(rep.bucket_counts.values()) == 4
    assert sum(rep.length_counts.values()) == 4


def test_single_class_auc_absent():
    rep = evaluate_scores([0.9, 0.2], records(("a", "a", 1), ("b", "c", 1)))
    assert rep.auc is None
    assert "auc=n/a" in rep.lines()


def test_evaluate_model_and_empty():
    model = toy_model()
    rep = evaluate(model, records((Q, D1, 1), (Q, "what is the capital of france", 0)))
    assert rep.size == 2 and rep.length_counts["6-10"] == 2  # bins use max(|q|, |d|)
    with pytest.raises(EmptyDataset):
        evaluate(model, [])


def test_format_comparison_table():
    text = format_comparison([("full", 0.9123, 0.95), ("no_att", 0.8, None)])
    lines = text.splitlines()
    assert "Acc.(%)" in lines[0] and "AUC.(%)" in lines[0]
    assert "91.23" in text and "n/a" in text


# training ---------------------------------------------------------------

@pytest.fixture(scope="module")
def synthetic():
    return gen_synthetic(n_pairs=160, seed=3)


def _fit(data, epochs):
    model = build_model(toy_config(embedding_dim=16, att_heads=2), data.records, seed=0, aliases=data.alias_map())
    cfg = TrainingConfig(batch_size=16, epochs=epochs, seed=1)
    return model, train(model, cfg, data.records)


def test_training_deterministic():
    data = gen_synthetic(n_pairs=10, seed=4)
    _, a = _fit(data, 1)
    _, b = _fit(data, 1)
    assert a.lines() == b.lines()


def test_training_loss_trend(synthetic):
    _, res = _fit(synthetic, 3)
    assert res.history[2].loss < res.history[0].loss


def test_best_dev_state_restored(synthetic):
    model = build_model(toy_config(), synthetic.records, seed=0)
    dev = synthetic.records[:40]
    seen = []
    res = train(model, TrainingConfig(batch_size=32, epochs=3, seed=0), synthetic.records, dev, on_epoch=seen.append)
    best = max(s.dev_accuracy for s in seen)
    assert res.history[res.best_epoch - 1].dev_accuracy == best
    assert evaluate(model, dev).accuracy == best


def test_empty_training_set():
    with pytest.raises(EmptyDataset):
        train(toy_model(), TrainingConfig(), [])


def test_bad_label_rejected():
    with pytest.raises(LabelError):
        train(toy_model(), TrainingConfig(epochs=1), [QuestionPairRecord(Q, D1, 3)])


def test_training_config_validation():
    with pytest.raises(ConfigError):
        TrainingConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainingConfig(warmup_fraction=1.0)
    assert TrainingConfig().peak_lr == pytest.approx(1e-3)
