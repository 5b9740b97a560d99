"""
Tests for the character-level LSTM classifier.
"""
import math

import numpy as np
import pytest

from corpus.rng import SplitMix64
from models.artifact import ModelArtifact, ModelType
from models.classifier import Charset, LstmHyper, LstmWeights
from sentinel import lstm
from sentinel.errors import DataError, TrainingDivergedError

TINY = LstmHyper(embed_dim=3, hidden_dim=2, max_len=5, dropout_rate=0.0)


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def test_encode_left_pads_and_truncates():
    charset = lstm.build_charset(["abc"])
    assert charset.chars == ["a", "b", "c"]
    assert lstm.encode("ab", charset, 4) == [0, 0, 2, 3]
    assert lstm.encode("abcab", charset, 3) == [2, 3, 4]
    assert lstm.encode("ax", charset, 2) == [2, 1]


def test_zero_weights_score_one_half():
    charset = lstm.build_charset(["abc"])
    weights = lstm.zero_weights(charset, TINY)
    probs = lstm.predict(weights, lstm.encode_batch(["abc", "", "zzz"], charset, TINY.max_len))
    assert probs.tolist() == [0.5, 0.5, 0.5]


def test_forward_matches_scalar_recurrence():
    weights = LstmWeights(
        embedding=np.array([[0.0], [0.0], [0.7], [-0.4]]),
        W=np.array([[0.5, -0.3, 0.8, 0.2]]),
        U=np.array([[0.1, 0.4, -0.6, 0.9]]),
        b=np.array([0.05, 1.0, -0.1, 0.0]),
        v=np.array([1.3]),
        c=np.array([-0.2]),
    )
    sequence = [2, 3, 2]
    h = c = 0.0
    for symbol in sequence:
        x = float(weights.embedding[symbol, 0])
        pre = [float(weights.W[0, k] * x + weights.U[0, k] * h + weights.b[k]) for k in range(4)]
        i, f, g, o = _sigmoid(pre[0]), _sigmoid(pre[1]), math.tanh(pre[2]), _sigmoid(pre[3])
        c = f * c + i * g
        h = o * math.tanh(c)
    expected = _sigmoid(1.3 * h - 0.2)

    cache = lstm.forward(weights, sequence)
    assert cache.probs[0] == pytest.approx(expected, abs=1e-12)


def test_out_of_range_index_rejected():
    weights = lstm.zero_weights(lstm.build_charset(["ab"]), TINY)
    with pytest.raises(DataError):
        lstm.forward(weights, [[0, 9]])


def test_dropout_disabled_equals_rate_zero():
    charset = lstm.build_charset(["abcd"])
    weights = lstm.init_weights(charset, TINY)
    batch = lstm.encode_batch(["abcd", "dcba"], charset, TINY.max_len)
    plain = lstm.forward(weights, batch).probs
    zero_rate = lstm.forward(weights, batch, dropout_rate=0.0, rng=SplitMix64(3)).probs
    no_stream = lstm.forward(weights, batch, dropout_rate=0.5).probs
    assert np.array_equal(plain, zero_rate)
    assert np.array_equal(plain, no_stream)


def test_analytic_gradients_match_finite_differences():
    hyper = LstmHyper(embed_dim=3, hidden_dim=4, max_len=5)
    for seed in range(20):
        assert lstm.gradient_check(hyper, seed=seed) < 1e-4


def test_unused_symbol_has_zero_embedding_gradient():
    hyper = LstmHyper(embed_dim=2, hidden_dim=3)
    charset = Charset(chars=["a", "b", "c"])
    weights = lstm.init_weights(charset, hyper, SplitMix64(5), dtype=np.float64)
    indices = np.array([[2, 3, 2], [0, 3, 3]])
    _, grads = lstm.loss_gradients(weights, indices, np.array([1.0, 0.0]))
    assert np.all(grads["embedding"][4] == 0.0)
    assert np.all(grads["embedding"][1] == 0.0)


def test_loss_scale_scales_gradients():
    hyper = LstmHyper(embed_dim=2, hidden_dim=2)
    charset = Charset(chars=["a", "b"])
    weights = lstm.init_weights(charset, hyper, SplitMix64(1), dtype=np.float64)
    indices = np.array([[2, 3], [3, 3]])
    labels = np.array([0.0, 1.0])
    loss1, grads1 = lstm.loss_gradients(weights, indices, labels, 1.0)
    loss2, grads2 = lstm.loss_gradients(weights, indices, labels, 2.0)
    assert loss2 == pytest.approx(2 * loss1, rel=1e-12)
    for name in grads1:
        np.testing.assert_allclose(grads2[name], 2 * grads1[name], rtol=1e-12, atol=1e-15)


def _z_task(n, seed):
    """Random strings over a-h; positives carry one 'z'."""
    rng = SplitMix64(seed)
    letters = "abcdefgh"
    texts, labels = [], []
    for k in range(n):
        chars = [letters[rng.next_below(len(letters))] for _ in range(6 + rng.next_below(5))]
        label = k % 2
        if label:
            chars[rng.next_below(len(chars))] = "z"
        texts.append("".join(chars))
        labels.append(label)
    return list(zip(texts, labels))


def test_untrained_loss_is_near_ln2(make_samples):
    samples = make_samples(_z_task(200, 4))
    charset = lstm.build_charset([s.text for s in samples])
    hyper = LstmHyper(embed_dim=8, hidden_dim=8, max_len=12)
    weights = lstm.init_weights(charset, hyper)
    X = lstm.encode_batch([s.text for s in samples], charset, hyper.max_len)
    loss, _ = lstm.dataset_loss(weights, X, np.array([s.label for s in samples]))
    assert 0.69 <= loss <= 0.70


def test_learns_presence_of_a_character(make_samples):
    train = make_samples(_z_task(1000, 1))
    val = make_samples(_z_task(200, 2))
    hyper = LstmHyper(
        embed_dim=8, hidden_dim=8, max_len=12, lr=0.02, batch_size=16,
        dropout_rate=0.0, max_epochs=20, patience=20,
    )
    artifact, history = lstm.train_lstm(train, val, hyper)
    assert max(e.val_acc for e in history.epochs) >= 0.99
    probs = lstm.score(artifact, [s.text for s in val])
    correct = sum((p >= 0.5) == (s.label == 1) for p, s in zip(probs, val))
    assert correct / len(val) >= 0.98


def test_early_stopping_and_best_epoch(make_samples):
    train = make_samples(_z_task(60, 7))
    val = make_samples(_z_task(20, 8))
    for patience in (0, 1, 2):
        hyper = LstmHyper(embed_dim=4, hidden_dim=4, max_len=10, lr=0.05, batch_size=8,
                          dropout_rate=0.0, max_epochs=15, patience=patience)
        artifact, history = lstm.train_lstm(train, val, hyper)
        losses = [e.val_loss for e in history.epochs]
        best = artifact.metadata["best_epoch"]
        assert best == int(np.argmin(losses)) + 1
        assert artifact.metadata["epochs_run"] == len(history)
        assert len(history) - best <= max(patience, 1)
        if len(history) < hyper.max_epochs:
            assert len(history) - best == max(patience, 1)


def test_training_is_deterministic(make_samples):
    train = make_samples(_z_task(40, 3))
    hyper = LstmHyper(embed_dim=4, hidden_dim=3, max_len=10, batch_size=8, max_epochs=2, dropout_rate=0.3)
    a, _ = lstm.train_lstm(train, train, hyper)
    b, _ = lstm.train_lstm(train, train, hyper)
    for name in a.weights:
        assert a.weights[name].tobytes() == b.weights[name].tobytes()


def test_dropout_seed_irrelevant_without_dropout(make_samples):
    train = make_samples(_z_task(40, 3))
    base = dict(embed_dim=4, hidden_dim=3, max_len=10, batch_size=8, max_epochs=2, dropout_rate=0.0)
    a, _ = lstm.train_lstm(train, [], LstmHyper(dropout_seed=1, **base))
    b, _ = lstm.train_lstm(train, [], LstmHyper(dropout_seed=99, **base))
    for name in a.weights:
        assert np.array_equal(a.weights[name], b.weights[name])


def test_non_finite_loss_aborts_training(make_samples, monkeypatch):
    monkeypatch.setattr(lstm, "bce", lambda logits, labels: float("nan"))
    train = make_samples(_z_task(20, 3))
    with pytest.raises(TrainingDivergedError):
        lstm.train_lstm(train, [], LstmHyper(embed_dim=2, hidden_dim=2, max_len=8, max_epochs=1))


def test_single_class_rejected(make_samples):
    with pytest.raises(DataError):
        lstm.train_lstm(make_samples([("abc", 1), ("abd", 1)]), [], TINY)


def test_batch_scores_match_single_scores(make_samples):
    train = make_samples(_z_task(40, 3))
    artifact, _ = lstm.train_lstm(train, [], LstmHyper(embed_dim=4, hidden_dim=3, max_len=10, max_epochs=1))
    texts = ["abzc", "hhhh", "", "qqqqqqqqqqqqqqqqqq"]
    batch = lstm.score(artifact, texts)
    assert batch == pytest.approx([lstm.score(artifact, [t])[0] for t in texts], abs=1e-6)
    assert lstm.score(artifact, []) == []


def test_zero_artifact_scores_one_half():
    charset = Charset(chars=list("abc"))
    weights = lstm.zero_weights(charset, TINY)
    artifact = ModelArtifact(
        model_type=ModelType.LSTM, charset=charset.chars, hyper=TINY.model_dump(), weights=weights.params(),
    )
    assert lstm.score(artifact, ["abc", "xyz"]) == [0.5, 0.5]
