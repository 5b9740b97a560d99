"""
Character-level LSTM binary classifier.

embedding -> single LSTM layer -> dropout on the final state -> sigmoid
read-out, trained with backpropagation through time on binary
cross-entropy, Adam updates and early stopping on validation loss.
Pure numpy; training runs in float32, the gradient check in float64.
"""
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from corpus.rng import SplitMix64
from models.artifact import ModelArtifact, ModelType
from models.classifier import (
    PAD_INDEX,
    UNK_INDEX,
    Charset,
    EpochStats,
    LstmHyper,
    LstmWeights,
    TrainingHistory,
)
from models.samples import TextSample
from sentinel.errors import DataError, TrainingDivergedError

logger = logging.getLogger(__name__)

PARAM_ORDER = ("embedding", "W", "U", "b", "v", "c")


class ForwardCache(NamedTuple):
    """Activations kept for backpropagation."""
    indices: np.ndarray  # (B, T)
    inputs: np.ndarray  # (B, T, E)
    gates: np.ndarray  # (T, B, 4H), post-activation i, f, g, o
    cells: np.ndarray  # (T + 1, B, H)
    hidden: np.ndarray  # (T + 1, B, H)
    mask: Optional[np.ndarray]  # (B, H) inverted-dropout mask
    logits: np.ndarray  # (B,)
    probs: np.ndarray  # (B,)


def build_charset(texts: Sequence[str]) -> Charset:
    return Charset(chars=sorted(set("".join(texts))))


def encode(text: str, charset: Charset, max_len: int, index_map: Optional[Dict[str, int]] = None) -> List[int]:
    """Leftmost `max_len` characters, left-padded with the padding index."""
    index_map = index_map if index_map is not None else charset.index_map()
    ids = [index_map.get(ch, UNK_INDEX) for ch in text[:max_len]]
    return [PAD_INDEX] * (max_len - len(ids)) + ids


def encode_batch(texts: Sequence[str], charset: Charset, max_len: int) -> np.ndarray:
    index_map = charset.index_map()
    encoded = np.full((len(texts), max_len), PAD_INDEX, dtype=np.int64)
    for row, text in enumerate(texts):
        encoded[row] = encode(text, charset, max_len, index_map)
    return encoded


def _uniform(rng: SplitMix64, shape: Tuple[int, ...], scale: float, dtype) -> np.ndarray:
    count = int(np.prod(shape))
    return ((rng.uniform_block(count) * 2.0 - 1.0) * scale).reshape(shape).astype(dtype)


def init_weights(
    charset: Charset,
    hyper: LstmHyper,
    rng: Optional[SplitMix64] = None,
    dtype=np.float32,
) -> LstmWeights:
    """Uniform(-init_scale, init_scale) draws in PARAM_ORDER, forget bias set after."""
    rng = rng or SplitMix64(hyper.seed)
    E, H = hyper.embed_dim, hyper.hidden_dim
    shapes = {
        "embedding": (charset.size, E),
        "W": (E, 4 * H),
        "U": (H, 4 * H),
        "b": (4 * H,),
        "v": (H,),
        "c": (1,),
    }
    params = {name: _uniform(rng, shapes[name], hyper.init_scale, dtype) for name in PARAM_ORDER}
    params["b"][H:2 * H] = hyper.forget_bias
    return LstmWeights(**params)


def zero_weights(charset: Charset, hyper: LstmHyper) -> LstmWeights:
    E, H = hyper.embed_dim, hyper.hidden_dim
    return LstmWeights(
        embedding=np.zeros((charset.size, E), dtype=np.float32),
        W=np.zeros((E, 4 * H), dtype=np.float32),
        U=np.zeros((H, 4 * H), dtype=np.float32),
        b=np.zeros(4 * H, dtype=np.float32),
        v=np.zeros(H, dtype=np.float32),
        c=np.zeros(1, dtype=np.float32),
    )


def dropout_mask(rng: SplitMix64, shape: Tuple[int, int], rate: float, dtype) -> np.ndarray:
    keep = rng.uniform_block(shape[0] * shape[1]).reshape(shape) >= rate
    return (keep / (1.0 - rate)).astype(dtype)


def forward(
    weights: LstmWeights,
    indices,
    dropout_rate: float = 0.0,
    rng: Optional[SplitMix64] = None,
) -> ForwardCache:
    """Run the network over a (B, T) index batch (a 1-D sequence is a batch of one).

    Dropout is applied only when both a positive rate and a stream are given.
    """
    indices = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    vocab = weights.embedding.shape[0]
    if indices.ndim != 2:
        raise DataError(f"expected a (batch, time) index array, got shape {indices.shape}")
    if indices.size and (indices.min() < 0 or indices.max() >= vocab):
        raise DataError(f"character index out of range for an embedding of {vocab} rows")

    H = weights.hidden_dim
    dtype = weights.W.dtype
    B, T = indices.shape
    inputs = weights.embedding[indices]
    gates = np.empty((T, B, 4 * H), dtype=dtype)
    cells = np.zeros((T + 1, B, H), dtype=dtype)
    hidden = np.zeros((T + 1, B, H), dtype=dtype)

    for t in range(T):
        pre = inputs[:, t, :] @ weights.W + hidden[t] @ weights.U + weights.b
        act = gates[t]
        act[:, :2 * H] = expit(pre[:, :2 * H])
        act[:, 2 * H:3 * H] = np.tanh(pre[:, 2 * H:3 * H])
        act[:, 3 * H:] = expit(pre[:, 3 * H:])
        cells[t + 1] = act[:, H:2 * H] * cells[t] + act[:, :H] * act[:, 2 * H:3 * H]
        hidden[t + 1] = act[:, 3 * H:] * np.tanh(cells[t + 1])

    mask = None
    final = hidden[T]
    if dropout_rate > 0.0 and rng is not None:
        mask = dropout_mask(rng, (B, H), dropout_rate, dtype)
        final = final * mask
    logits = final @ weights.v + weights.c[0]
    return ForwardCache(indices, inputs, gates, cells, hidden, mask, logits, expit(logits))


def bce(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy from logits, accumulated in float64."""
    z = logits.astype(np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - labels * z))


def backward(
    weights: LstmWeights,
    cache: ForwardCache,
    labels: np.ndarray,
    loss_scale: float = 1.0,
) -> Dict[str, np.ndarray]:
    """Gradients of loss_scale * mean BCE with respect to every parameter."""
    H = weights.hidden_dim
    dtype = weights.W.dtype
    B, T = cache.indices.shape
    labels = np.asarray(labels, dtype=dtype)

    d_logits = ((cache.probs - labels) * (loss_scale / B)).astype(dtype)
    final = cache.hidden[T] if cache.mask is None else cache.hidden[T] * cache.mask
    grads = {name: np.zeros_like(param) for name, param in weights.params().items()}
    grads["v"] = final.T @ d_logits
    grads["c"] = np.array([d_logits.sum()], dtype=dtype)

    d_hidden = np.outer(d_logits, weights.v).astype(dtype)
    if cache.mask is not None:
        d_hidden *= cache.mask
    d_cell = np.zeros((B, H), dtype=dtype)
    d_pre = np.empty((B, 4 * H), dtype=dtype)

    for t in range(T - 1, -1, -1):
        act = cache.gates[t]
        i, f, g, o = act[:, :H], act[:, H:2 * H], act[:, 2 * H:3 * H], act[:, 3 * H:]
        tanh_c = np.tanh(cache.cells[t + 1])
        d_cell = d_cell + d_hidden * o * (1.0 - tanh_c ** 2)
        d_pre[:, :H] = d_cell * g * i * (1.0 - i)
        d_pre[:, H:2 * H] = d_cell * cache.cells[t] * f * (1.0 - f)
        d_pre[:, 2 * H:3 * H] = d_cell * i * (1.0 - g ** 2)
        d_pre[:, 3 * H:] = d_hidden * tanh_c * o * (1.0 - o)

        grads["W"] += cache.inputs[:, t, :].T @ d_pre
        grads["U"] += cache.hidden[t].T @ d_pre
        grads["b"] += d_pre.sum(axis=0)
        np.add.at(grads["embedding"], cache.indices[:, t], d_pre @ weights.W.T)
        d_hidden = d_pre @ weights.U.T
        d_cell = d_cell * f
    return grads


def loss_gradients(
    weights: LstmWeights,
    indices: np.ndarray,
    labels: np.ndarray,
    loss_scale: float = 1.0,
) -> Tuple[float, Dict[str, np.ndarray]]:
    cache = forward(weights, indices)
    return loss_scale * bce(cache.logits, np.asarray(labels, dtype=np.float64)), backward(
        weights, cache, labels, loss_scale
    )


def predict(weights: LstmWeights, indices: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Dropout-free probabilities, processed in chunks, input order preserved."""
    if len(indices) == 0:
        return np.zeros(0, dtype=np.float64)
    chunks = [
        forward(weights, indices[start:start + batch_size]).probs
        for start in range(0, len(indices), batch_size)
    ]
    return np.concatenate(chunks).astype(np.float64)


def dataset_loss(
    weights: LstmWeights,
    indices: np.ndarray,
    labels: np.ndarray,
    batch_size: int = 512,
) -> Tuple[float, float]:
    """(mean BCE, accuracy at 0.5) without dropout."""
    if len(labels) == 0:
        return float("nan"), float("nan")
    total = 0.0
    correct = 0
    labels = np.asarray(labels, dtype=np.float64)
    for start in range(0, len(labels), batch_size):
        cache = forward(weights, indices[start:start + batch_size])
        batch_labels = labels[start:start + batch_size]
        total += bce(cache.logits, batch_labels) * len(batch_labels)
        correct += int(np.sum((cache.probs >= 0.5) == (batch_labels == 1)))
    return total / len(labels), correct / len(labels)


class Adam:
    """Adaptive-moment updates applied in place."""

    def __init__(self, params: Dict[str, np.ndarray], hyper: LstmHyper):
        self.lr = hyper.lr
        self.beta1 = hyper.beta1
        self.beta2 = hyper.beta2
        self.epsilon = hyper.epsilon
        self.step_count = 0
        self.m = {name: np.zeros_like(p) for name, p in params.items()}
        self.v = {name: np.zeros_like(p) for name, p in params.items()}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.step_count += 1
        correction1 = 1.0 - self.beta1 ** self.step_count
        correction2 = 1.0 - self.beta2 ** self.step_count
        for name, param in params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            param -= (self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)).astype(param.dtype)


def _check_classes(samples: Sequence[TextSample]) -> None:
    labels = {s.label for s in samples}
    if labels != {0, 1}:
        raise DataError(f"LSTM training set needs both classes, found labels {sorted(labels)}")


def train_lstm(
    train: Sequence[TextSample],
    val: Sequence[TextSample],
    hyper: Optional[LstmHyper] = None,
) -> Tuple[ModelArtifact, TrainingHistory]:
    """Train with mini-batch BPTT and early stopping; best-epoch weights are restored.

    Random streams: initialization uses `seed`, batch order `seed + 1` and
    dropout `dropout_seed` (default `seed + 2`). A zero dropout rate draws
    nothing from the dropout stream.
    """
    hyper = hyper or LstmHyper()
    _check_classes(train)

    charset = build_charset([s.text for s in train])
    X = encode_batch([s.text for s in train], charset, hyper.max_len)
    y = np.array([s.label for s in train], dtype=np.float32)
    Xv = encode_batch([s.text for s in val], charset, hyper.max_len)
    yv = np.array([s.label for s in val], dtype=np.float32)

    weights = init_weights(charset, hyper, SplitMix64(hyper.seed))
    params = weights.params()
    optimizer = Adam(params, hyper)
    shuffle_rng = SplitMix64(hyper.seed + 1)
    dropout_seed = hyper.dropout_seed if hyper.dropout_seed is not None else hyper.seed + 2
    dropout_rng = SplitMix64(dropout_seed)

    history = TrainingHistory()
    best_loss = math.inf
    best_weights = weights.clone()
    best_epoch = 0
    wait = 0

    for epoch in range(1, hyper.max_epochs + 1):
        order = np.asarray(shuffle_rng.permutation(len(y)), dtype=np.int64)
        batch_losses: List[float] = []
        batch_accs: List[float] = []
        for start in range(0, len(order), hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            cache = forward(weights, X[idx], hyper.dropout_rate, dropout_rng)
            loss = bce(cache.logits, y[idx].astype(np.float64))
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            optimizer.step(params, backward(weights, cache, y[idx]))
            batch_losses.append(loss)
            batch_accs.append(float(np.mean((cache.probs >= 0.5) == (y[idx] == 1))))

        train_loss = float(np.mean(batch_losses))
        train_acc = float(np.mean(batch_accs))
        if not all(np.all(np.isfinite(p)) for p in params.values()):
            raise TrainingDivergedError(epoch, float("nan"))
        val_loss, val_acc = dataset_loss(weights, Xv, yv)
        if len(yv) == 0:
            val_loss, val_acc = train_loss, train_acc
        history.epochs.append(EpochStats(
            epoch=epoch, train_loss=train_loss, train_acc=train_acc, val_loss=val_loss, val_acc=val_acc,
        ))
        logger.info(
            "epoch=%d train_loss=%.6f train_acc=%.4f val_loss=%.6f val_acc=%.4f",
            epoch, train_loss, train_acc, val_loss, val_acc,
        )

        if val_loss < best_loss:
            best_loss, best_epoch, wait = val_loss, epoch, 0
            best_weights = weights.clone()
        else:
            wait += 1
            if wait >= hyper.patience:
                logger.info("Early stopping after epoch %d (best epoch %d)", epoch, best_epoch)
                break

    artifact = ModelArtifact(
        model_type=ModelType.LSTM,
        charset=list(charset.chars),
        hyper=hyper.model_dump(),
        weights=best_weights.params(),
        metadata={"epochs_run": len(history), "best_epoch": best_epoch, "best_val_loss": best_loss},
    )
    return artifact, history


def weights_from_artifact(artifact: ModelArtifact) -> Tuple[Charset, LstmHyper, LstmWeights]:
    if artifact.model_type != ModelType.LSTM or artifact.charset is None:
        raise DataError("artifact does not hold an LSTM model")
    try:
        charset = Charset(chars=artifact.charset)
        hyper = LstmHyper(**artifact.hyper)
        weights = LstmWeights(**{name: artifact.weights[name] for name in PARAM_ORDER})
    except (KeyError, ValueError) as e:
        raise DataError(f"corrupt LSTM artifact: {e}") from e
    if weights.embedding.shape[0] != charset.size:
        raise DataError(
            f"corrupt LSTM artifact: embedding has {weights.embedding.shape[0]} rows for {charset.size} symbols"
        )
    return charset, hyper, weights


def score(artifact: ModelArtifact, texts: Sequence[str]) -> List[float]:
    """Dropout-free probabilities in input order."""
    charset, hyper, weights = weights_from_artifact(artifact)
    return predict(weights, encode_batch(texts, charset, hyper.max_len), hyper.batch_size).tolist()


def gradient_check(
    hyper: LstmHyper,
    seed: int = 0,
    seq_len: int = 5,
    batch: int = 3,
    vocab_size: int = 6,
    loss_scale: float = 1.0,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in float64 on a random tiny model; relative error is
    |a - n| / max(|a|, |n|, 1e-6).
    """
    if hyper.embed_dim > 4 or hyper.hidden_dim > 4 or seq_len > 6:
        raise DataError("gradient check expects embed_dim <= 4, hidden_dim <= 4 and seq_len <= 6")
    rng = SplitMix64(seed)
    charset = Charset(chars=[chr(ord("a") + k) for k in range(max(vocab_size - 2, 0))])
    weights = init_weights(charset, hyper.model_copy(update={"init_scale": 0.5}), rng, dtype=np.float64)
    # the last symbol stays unused so its embedding row has a zero gradient
    indices = np.array(
        [[rng.next_below(charset.size - 1) for _ in range(seq_len)] for _ in range(batch)], dtype=np.int64
    )
    labels = np.array([rng.next_below(2) for _ in range(batch)], dtype=np.float64)

    _, analytic = loss_gradients(weights, indices, labels, loss_scale)
    worst = 0.0
    for name, param in weights.params().items():
        for position in np.ndindex(param.shape):
            original = param[position]
            param[position] = original + step
            loss_plus, _ = _loss_only(weights, indices, labels, loss_scale)
            param[position] = original - step
            loss_minus, _ = _loss_only(weights, indices, labels, loss_scale)
            param[position] = original
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            a = float(analytic[name][position])
            error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
            worst = max(worst, error)
    logger.debug("Gradient check max relative error %.3e", worst)
    return worst


def _loss_only(weights: LstmWeights, indices: np.ndarray, labels: np.ndarray, loss_scale: float):
    cache = forward(weights, indices)
    return loss_scale * bce(cache.logits, labels), cache
