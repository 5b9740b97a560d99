# models/tunnel.py
from enum import Enum
from typing import Dict, List

from pydantic import BaseModel, Field, model_validator


class TunnelFeatures(BaseModel):
    qname_len: int = 0
    unique_chars: int = 0
    max_consonants: int = 0
    max_digits: int = 0
    entropy: float = 0.0
    payload_len: int = 0
    freq: int = 0
    qtype_flag: int = 0
    port_flag: int = 0
    short_qname: bool = Field(False, description="qname had fewer than two labels; analyzed in full.")

    @property
    def max_run(self) -> int:
        return max(self.max_consonants, self.max_digits)


class TunnelWeights(BaseModel):
    entropy: float = Field(0.25, ge=0)
    freq: float = Field(0.20, ge=0)
    qname_len: float = Field(0.15, ge=0)
    qtype: float = Field(0.15, ge=0)
    unique_chars: float = Field(0.10, ge=0)
    max_run: float = Field(0.10, ge=0)
    port: float = Field(0.05, ge=0)

    @model_validator(mode="after")
    def _sum_to_one(self) -> "TunnelWeights":
        total = sum(self.model_dump().values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"feature weights must sum to 1, got {total}")
        return self


class TunnelCaps(BaseModel):
    qname_len: float = Field(40.0, gt=0)
    unique_chars: float = Field(20.0, gt=0)
    max_run: float = Field(8.0, gt=0)
    entropy: float = Field(4.0, gt=0)
    freq: float = Field(60.0, gt=0)


class TunnelConfig(BaseModel):
    weights: TunnelWeights = Field(default_factory=TunnelWeights)
    caps: TunnelCaps = Field(default_factory=TunnelCaps)
    window: int = Field(60, gt=0, description="Window length in seconds.")
    alert_threshold: float = Field(0.5, gt=0, le=1)
    whitelist: List[str] = Field(default_factory=list, description="Domain suffixes never alerted.")
    blacklist: List[str] = Field(default_factory=list, description="Domain suffixes always flagged.")


class Verdict(str, Enum):
    ALERT = "alert"
    BLACKLIST_FORCED = "blacklist_forced"
    SUPPRESSED = "suppressed"


class TunnelAlert(BaseModel):
    src: str
    registered_domain: str
    window_start: int = Field(..., description="Epoch milliseconds.")
    score: float
    features: Dict[str, float] = Field(default_factory=dict, description="Normalized feature values.")
    verdict: Verdict
