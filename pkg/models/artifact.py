# models/artifact.py
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

ARTIFACT_FORMAT_VERSION = 1


class ModelType(str, Enum):
    LSTM = "lstm"
    NGRAM_LR = "ngram_lr"
    BOW_LR = "bow_lr"


class ModelArtifact(BaseModel):
    """Serialized trained classifier; see sentinel.artifacts for the file format."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    format_version: int = ARTIFACT_FORMAT_VERSION
    model_type: ModelType
    charset: Optional[List[str]] = Field(None, description="LSTM trainable characters (index 2 onward).")
    vocab: Optional[Dict[str, Any]] = Field(None, description="Linear model vocabulary: mode, n, stacked, features.")
    hyper: Dict[str, Any] = Field(default_factory=dict)
    weights: Dict[str, np.ndarray] = Field(default_factory=dict, description="float32 tensors by name.")
    metadata: Dict[str, Any] = Field(default_factory=dict)
