"""
Linear baselines: character n-gram + logistic regression for domains and
token bag-of-words + logistic regression for URLs.
"""
import logging
import re
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.special import expit

from corpus.rng import SplitMix64
from models.classifier import EpochStats, FeatureMode, FeatureVocab, LinearConfig, LinearModel, TrainingHistory
from models.samples import TextSample
from sentinel.errors import DataError, TrainingDivergedError

logger = logging.getLogger(__name__)

TOKEN_SPLIT_RE = re.compile(r"[/.?=&\-_:@%]+")


def char_ngrams(text: str, n: int = 2) -> List[str]:
    return [text[i:i + n] for i in range(len(text) - n + 1)]


def tokens(text: str) -> List[str]:
    return [t for t in TOKEN_SPLIT_RE.split(text) if t]


def extract_features(text: str, mode: FeatureMode, n: int = 2, stacked: bool = False) -> Counter:
    """Raw feature counts before vocabulary lookup.

    Stacked token features carry the char n-grams as well, prefixed with
    their order (``"2g:ab"``) so they never collide with tokens.
    """
    if mode == FeatureMode.CHAR_NGRAM:
        return Counter(char_ngrams(text, n))
    counts = Counter(tokens(text))
    if stacked:
        counts.update(f"{n}g:{gram}" for gram in char_ngrams(text, n))
    return counts


def build_vocab(
    texts: Sequence[str],
    mode: FeatureMode,
    n: int = 2,
    stacked: bool = False,
    cap: int = 50000,
) -> FeatureVocab:
    """Most frequent `cap` features, ties broken lexicographically."""
    totals: Counter = Counter()
    for text in texts:
        totals.update(extract_features(text, mode, n, stacked))
    ranked = sorted(totals.items(), key=lambda item: (-item[1], item[0]))[:cap]
    vocab = FeatureVocab(
        mode=mode,
        n=n,
        stacked=stacked,
        entries={feature: index for index, (feature, _) in enumerate(ranked)},
        built_from=len(texts),
    )
    logger.debug("Built %s vocabulary with %d of %d features", mode.value, vocab.size, len(totals))
    return vocab


def featurize(text: str, vocab: FeatureVocab) -> Dict[int, int]:
    """Sparse column -> count vector; out-of-vocabulary features are ignored."""
    vector: Dict[int, int] = {}
    for feature, count in extract_features(text, vocab.mode, vocab.n, vocab.stacked).items():
        column = vocab.entries.get(feature)
        if column is not None:
            vector[column] = count
    return vector


def featurize_batch(texts: Iterable[str], vocab: FeatureVocab) -> sparse.csr_matrix:
    indptr = [0]
    indices: List[int] = []
    data: List[float] = []
    for text in texts:
        vector = featurize(text, vocab)
        for column in sorted(vector):
            indices.append(column)
            data.append(vector[column])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(indptr) - 1, vocab.size),
    )


def logistic_loss_and_grad(w: np.ndarray, b: float, X, y: np.ndarray, l2: float) -> Tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy plus (l2 / 2) * ||w||^2, with its gradient."""
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    residual = (expit(z) - y) / len(y)
    grad_w = np.asarray(X.T @ residual).ravel() + l2 * w
    grad_b = float(residual.sum())
    return loss, grad_w, grad_b


def _loss_and_accuracy(w: np.ndarray, b: float, X, y: np.ndarray) -> Tuple[float, float]:
    if len(y) == 0:
        return float("nan"), float("nan")
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    accuracy = float(np.mean((expit(z) >= 0.5) == (y == 1)))
    return loss, accuracy


def _check_classes(samples: Sequence[TextSample], what: str) -> None:
    labels = {s.label for s in samples}
    if labels != {0, 1}:
        raise DataError(f"{what} needs both classes, found labels {sorted(labels)}")


def train_linear(
    train: Sequence[TextSample],
    val: Sequence[TextSample],
    config: Optional[LinearConfig] = None,
) -> Tuple[LinearModel, TrainingHistory]:
    """Mini-batch gradient descent on the L2-penalized logistic loss.

    Returns the epoch-end weights with the lowest validation loss (the
    training objective when no validation set is given). The recorded
    train_loss is the penalized objective over the whole training set.
    """
    config = config or LinearConfig()
    _check_classes(train, "linear training set")

    vocab = build_vocab([s.text for s in train], config.mode, config.n, config.stacked, config.vocab_cap)
    X = featurize_batch([s.text for s in train], vocab)
    y = np.array([s.label for s in train], dtype=np.float64)
    Xv = featurize_batch([s.text for s in val], vocab)
    yv = np.array([s.label for s in val], dtype=np.float64)

    w = np.zeros(vocab.size, dtype=np.float64)
    b = 0.0
    rng = SplitMix64(config.seed)
    history = TrainingHistory()
    best: Tuple[float, np.ndarray, float, int] = (float("inf"), w.copy(), b, 0)

    for epoch in range(1, config.epochs + 1):
        order = np.asarray(rng.permutation(len(y)), dtype=np.int64)
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            _, grad_w, grad_b = logistic_loss_and_grad(w, b, X[idx], y[idx], config.l2)
            w -= config.lr * grad_w
            b -= config.lr * grad_b

        train_loss, _, _ = logistic_loss_and_grad(w, b, X, y, config.l2)
        _, train_acc = _loss_and_accuracy(w, b, X, y)
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(epoch, train_loss)
        val_loss, val_acc = _loss_and_accuracy(w, b, Xv, yv)
        if len(yv) == 0:
            val_loss, val_acc = train_loss, train_acc
        history.epochs.append(EpochStats(
            epoch=epoch, train_loss=train_loss, train_acc=train_acc, val_loss=val_loss, val_acc=val_acc,
        ))
        logger.info("epoch=%d train_loss=%.6f val_loss=%.6f val_acc=%.4f", epoch, train_loss, val_loss, val_acc)
        if val_loss < best[0]:
            best = (val_loss, w.copy(), b, epoch)

    _, best_w, best_b, best_epoch = best
    model = LinearModel(
        weights=best_w.astype(np.float32),
        bias=float(np.float32(best_b)),
        vocab=vocab,
        trained_epochs=len(history),
    )
    logger.info("Linear model kept epoch %d of %d (vocab=%d)", best_epoch, len(history), vocab.size)
    return model, history


def zero_model(vocab: FeatureVocab) -> LinearModel:
    return LinearModel(weights=np.zeros(vocab.size, dtype=np.float32), bias=0.0, vocab=vocab)


def score_linear(model: LinearModel, text: str) -> float:
    """sigmoid(w . x + b)."""
    z = model.bias + sum(float(model.weights[col]) * count for col, count in featurize(text, model.vocab).items())
    return float(expit(z))


def score_linear_batch(model: LinearModel, texts: Sequence[str]) -> List[float]:
    X = featurize_batch(texts, model.vocab)
    z = X @ model.weights.astype(np.float64) + model.bias
    return expit(z).tolist()
