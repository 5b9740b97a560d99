# models/classifier.py
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

PAD_INDEX = 0
UNK_INDEX = 1

TASK_MAX_LEN = {"dga": 64, "phish": 128}


class FeatureMode(str, Enum):
    CHAR_NGRAM = "char_ngram"
    TOKEN_BOW = "token_bow"


class FeatureVocab(BaseModel):
    mode: FeatureMode
    n: int = Field(2, ge=1, description="n-gram order for char_ngram (and stacked) features.")
    stacked: bool = Field(False, description="token_bow only: append char n-gram features.")
    entries: Dict[str, int] = Field(default_factory=dict, description="feature -> column index.")
    built_from: int = Field(0, description="Number of training samples.")

    @model_validator(mode="after")
    def _dense_indices(self) -> "FeatureVocab":
        if sorted(self.entries.values()) != list(range(len(self.entries))):
            raise ValueError("vocabulary indices must be dense 0..V-1")
        return self

    @property
    def size(self) -> int:
        return len(self.entries)

    def features(self) -> List[str]:
        """Feature strings in column order."""
        ordered = [""] * len(self.entries)
        for feature, index in self.entries.items():
            ordered[index] = feature
        return ordered


class LinearConfig(BaseModel):
    mode: FeatureMode = FeatureMode.CHAR_NGRAM
    n: int = 2
    stacked: bool = False
    lr: float = Field(0.1, gt=0)
    l2: float = Field(1e-6, ge=0)
    epochs: int = Field(10, ge=1)
    batch_size: int = Field(256, ge=1)
    seed: int = 42
    vocab_cap: int = Field(50000, ge=1)


class LinearModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: np.ndarray
    bias: float = 0.0
    vocab: FeatureVocab
    trained_epochs: int = 0

    @model_validator(mode="after")
    def _finite(self) -> "LinearModel":
        if self.weights.shape != (self.vocab.size,):
            raise ValueError(
                f"weights shape {self.weights.shape} does not match vocabulary size {self.vocab.size}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("linear model weights must be finite")
        return self


class Charset(BaseModel):
    """Trainable characters; index 0 is padding, 1 is unknown, chars start at 2."""
    chars: List[str] = Field(default_factory=list)

    @field_validator("chars")
    @classmethod
    def _unique_single_chars(cls, value: List[str]) -> List[str]:
        if len(set(value)) != len(value):
            raise ValueError("charset contains duplicate characters")
        if any(len(c) != 1 for c in value):
            raise ValueError("charset entries must be single characters")
        return value

    @property
    def size(self) -> int:
        return len(self.chars) + 2

    def index_map(self) -> Dict[str, int]:
        return {c: i + 2 for i, c in enumerate(self.chars)}


class LstmHyper(BaseModel):
    embed_dim: int = Field(128, ge=1)
    hidden_dim: int = Field(128, ge=1)
    max_len: int = Field(64, ge=1)
    dropout_rate: float = Field(0.5, ge=0, lt=1)
    lr: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    batch_size: int = Field(128, ge=1)
    max_epochs: int = Field(25, ge=1)
    patience: int = Field(3, ge=0)
    seed: int = 42
    dropout_seed: Optional[int] = Field(None, description="Defaults to a stream derived from seed.")
    init_scale: float = Field(0.05, gt=0)
    forget_bias: float = 1.0

    @classmethod
    def for_task(cls, task: str, **overrides) -> "LstmHyper":
        if task not in TASK_MAX_LEN:
            raise ValueError(f"unknown task {task!r}; expected one of {sorted(TASK_MAX_LEN)}")
        values = {"max_len": TASK_MAX_LEN[task]}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class LstmWeights(BaseModel):
    """Parameters of the embedding -> LSTM -> sigmoid head network.

    Gate blocks are stacked along the last axis in the order
    input, forget, cell candidate, output.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    embedding: np.ndarray  # (V, E)
    W: np.ndarray  # (E, 4H)
    U: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)
    v: np.ndarray  # (H,)
    c: np.ndarray  # (1,)

    @model_validator(mode="after")
    def _consistent(self) -> "LstmWeights":
        vocab, embed = self.embedding.shape
        hidden = self.U.shape[0]
        expected = {
            "W": (embed, 4 * hidden),
            "U": (hidden, 4 * hidden),
            "b": (4 * hidden,),
            "v": (hidden,),
            "c": (1,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ValueError(f"{name} has shape {actual}, expected {shape}")
        for name in ("embedding", *expected):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")
        return self

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embedding.shape[1]

    def params(self) -> Dict[str, np.ndarray]:
        return {
            "embedding": self.embedding,
            "W": self.W,
            "U": self.U,
            "b": self.b,
            "v": self.v,
            "c": self.c,
        }

    def clone(self) -> "LstmWeights":
        return LstmWeights(**{k: v.copy() for k, v in self.params().items()})


class EpochStats(BaseModel):
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


class TrainingHistory(BaseModel):
    epochs: List[EpochStats] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)
