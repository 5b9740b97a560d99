"""
ModelArtifact file format shared by the LSTM and the linear baselines.

An artifact is one canonical JSON document (sorted keys, compact
separators, ASCII, trailing newline). Tensors are stored as an explicit
shape plus base64 of little-endian float32 bytes, so save -> load -> save
is byte-identical.
"""
import base64
import binascii
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from models.artifact import ARTIFACT_FORMAT_VERSION, ModelArtifact, ModelType
from models.classifier import FeatureMode, FeatureVocab, LinearModel, TrainingHistory
from sentinel import baseline, lstm
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
GATES = ("i", "f", "g", "o")
GATED = ("W", "U", "b")


def _encode_tensor(array: np.ndarray) -> Dict[str, Any]:
    data = np.ascontiguousarray(array, dtype="<f4").tobytes()
    return {"shape": list(array.shape), "data": base64.b64encode(data).decode("ascii")}


def _decode_tensor(doc: Dict[str, Any]) -> np.ndarray:
    shape = tuple(int(d) for d in doc["shape"])
    raw = base64.b64decode(doc["data"].encode("ascii"), validate=True)
    flat = np.frombuffer(raw, dtype="<f4")
    if flat.size != int(np.prod(shape)):
        raise DataError(f"tensor holds {flat.size} values, shape {list(shape)} needs {int(np.prod(shape))}")
    return flat.reshape(shape).astype(np.float32)


def _split_gates(weights: Dict[str, np.ndarray], model_type: ModelType) -> Dict[str, np.ndarray]:
    if model_type != ModelType.LSTM:
        return dict(weights)
    tensors = {}
    for name, array in weights.items():
        if name in GATED:
            for gate, block in zip(GATES, np.split(array, 4, axis=-1)):
                tensors[f"{name}_{gate}"] = block
        else:
            tensors[name] = array
    return tensors


def _join_gates(tensors: Dict[str, np.ndarray], model_type: ModelType) -> Dict[str, np.ndarray]:
    if model_type != ModelType.LSTM:
        return tensors
    weights = {k: v for k, v in tensors.items() if k.split("_")[0] not in GATED}
    for name in GATED:
        weights[name] = np.concatenate([tensors[f"{name}_{gate}"] for gate in GATES], axis=-1)
    return weights


def artifact_to_json(artifact: ModelArtifact) -> str:
    doc = {
        "format_version": artifact.format_version,
        "model_type": artifact.model_type.value,
        "charset": artifact.charset,
        "vocab": artifact.vocab,
        "hyper": artifact.hyper,
        "weights": {
            name: _encode_tensor(array)
            for name, array in _split_gates(artifact.weights, artifact.model_type).items()
        },
        "metadata": artifact.metadata,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"


def artifact_from_json(text: str) -> ModelArtifact:
    try:
        doc = json.loads(text)
        version = doc["format_version"]
        if version != ARTIFACT_FORMAT_VERSION:
            raise DataError(f"unsupported artifact format_version {version}")
        model_type = ModelType(doc["model_type"])
        tensors = {name: _decode_tensor(t) for name, t in doc["weights"].items()}
        return ModelArtifact(
            format_version=version,
            model_type=model_type,
            charset=doc.get("charset"),
            vocab=doc.get("vocab"),
            hyper=doc.get("hyper") or {},
            weights=_join_gates(tensors, model_type),
            metadata=doc.get("metadata") or {},
        )
    except DataError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError, binascii.Error, ValueError) as e:
        raise DataError(f"corrupt model artifact: {e}") from e


def save_artifact(artifact: ModelArtifact, path: PathLike) -> None:
    Path(path).write_text(artifact_to_json(artifact), encoding="ascii", newline="\n")
    logger.info("Saved %s artifact to %s", artifact.model_type.value, path)


def load_artifact(path: PathLike) -> ModelArtifact:
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read model artifact {path}: {e}") from e
    return artifact_from_json(text)


def linear_to_artifact(model: LinearModel, metadata: Optional[Dict[str, Any]] = None) -> ModelArtifact:
    vocab = model.vocab
    model_type = ModelType.NGRAM_LR if vocab.mode == FeatureMode.CHAR_NGRAM else ModelType.BOW_LR
    return ModelArtifact(
        model_type=model_type,
        vocab={
            "mode": vocab.mode.value,
            "n": vocab.n,
            "stacked": vocab.stacked,
            "features": vocab.features(),
            "built_from": vocab.built_from,
        },
        weights={
            "weights": model.weights.astype(np.float32),
            "bias": np.array([model.bias], dtype=np.float32),
        },
        metadata={"trained_epochs": model.trained_epochs, **(metadata or {})},
    )


def linear_from_artifact(artifact: ModelArtifact) -> LinearModel:
    if artifact.model_type == ModelType.LSTM or artifact.vocab is None:
        raise DataError("artifact does not hold a linear model")
    try:
        stored = artifact.vocab
        vocab = FeatureVocab(
            mode=FeatureMode(stored["mode"]),
            n=stored["n"],
            stacked=stored["stacked"],
            entries={feature: index for index, feature in enumerate(stored["features"])},
            built_from=stored.get("built_from", 0),
        )
        return LinearModel(
            weights=artifact.weights["weights"],
            bias=float(artifact.weights["bias"][0]),
            vocab=vocab,
            trained_epochs=artifact.metadata.get("trained_epochs", 0),
        )
    except (KeyError, IndexError, ValueError) as e:
        raise DataError(f"corrupt linear artifact: {e}") from e


def score_artifact(artifact: ModelArtifact, texts: Sequence[str]) -> List[float]:
    """Probabilities for `texts`, dispatching on the artifact's model type."""
    if artifact.model_type == ModelType.LSTM:
        return lstm.score(artifact, texts)
    return baseline.score_linear_batch(linear_from_artifact(artifact), texts)


def write_history_csv(history: TrainingHistory, path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for stats in history.epochs:
            writer.writerow([stats.epoch, stats.train_loss, stats.train_acc, stats.val_loss, stats.val_acc])
