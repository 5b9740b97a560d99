# models/samples.py
import re
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

DOMAIN_LABEL_RE = re.compile(r"^[a-z0-9_-]{1,63}$")
_FORBIDDEN_RE = re.compile(r"[\s\x00-\x1f\x7f]")

# 1990-01-01T00:00:00Z
MIN_PLAUSIBLE_EPOCH = 631152000


def is_valid_domain(text: str) -> bool:
    """True when every dot-separated label is 1-63 chars of [a-z0-9_-]."""
    if not text:
        return False
    return all(DOMAIN_LABEL_RE.match(label) for label in text.split("."))


class SampleKind(str, Enum):
    DOMAIN = "domain"
    URL = "url"


class TextSample(BaseModel):
    """A normalized domain or URL with its binary label."""
    model_config = {"frozen": True}

    text: str = Field(..., description="Normalized domain or URL.")
    label: int = Field(..., description="0 = benign, 1 = malicious.")
    kind: SampleKind = Field(..., description="Whether text is a domain or a URL.")
    source: str = Field("", description="Free-form provenance tag.")

    @field_validator("label")
    @classmethod
    def _binary_label(cls, value: int) -> int:
        if value not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {value}")
        return value

    @model_validator(mode="after")
    def _normalized_text(self) -> "TextSample":
        if not self.text:
            raise ValueError("text must be non-empty")
        if self.text != self.text.lower():
            raise ValueError(f"text must be lowercase: {self.text!r}")
        if _FORBIDDEN_RE.search(self.text):
            raise ValueError(f"text contains whitespace or control characters: {self.text!r}")
        if self.kind == SampleKind.DOMAIN and not is_valid_domain(self.text):
            raise ValueError(f"not a valid domain name: {self.text!r}")
        return self


class DatasetSplit(BaseModel):
    """Stratified train/validation/test partition of a sample set."""
    train: List[TextSample] = Field(default_factory=list)
    validation: List[TextSample] = Field(default_factory=list)
    test: List[TextSample] = Field(default_factory=list)
    seed: int = Field(..., description="Seed of the shuffle stream.")
    fractions: Tuple[float, float, float] = Field(..., description="train/validation/test fractions.")


class QType(str, Enum):
    A = "A"
    AAAA = "AAAA"
    CNAME = "CNAME"
    MX = "MX"
    TXT = "TXT"
    NULL = "NULL"
    NS = "NS"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, value: str) -> "QType":
        try:
            return cls(value.strip().upper())
        except ValueError:
            return cls.OTHER


class Protocol(str, Enum):
    UDP = "udp"
    TCP = "tcp"


class DnsQueryRecord(BaseModel):
    """One parsed DNS log line."""
    model_config = {"frozen": True}

    ts: int = Field(..., description="Epoch milliseconds.")
    src: str = Field(..., description="Source identifier.")
    qname: str = Field(..., description="Lowercase query name.")
    qtype: QType
    proto: Protocol
    src_port: int = Field(..., ge=0, le=65535)
    dst_port: int = Field(..., ge=0, le=65535)
    payload_len: int = Field(..., ge=0, description="Bytes on the wire.")

    @model_validator(mode="after")
    def _check_lengths(self) -> "DnsQueryRecord":
        if not self.qname:
            raise ValueError("qname must be non-empty")
        if self.qname != self.qname.lower():
            raise ValueError(f"qname must be lowercase: {self.qname!r}")
        if self.payload_len < len(self.qname):
            raise ValueError(
                f"payload_len {self.payload_len} shorter than qname ({len(self.qname)})"
            )
        return self


class WhoisRecord(BaseModel):
    """Registration data for one domain, parsed from a fixture block."""
    domain: str
    registrant_name: Optional[str] = None
    registrant_email: Optional[str] = None
    registrar: Optional[str] = None
    name_servers: List[str] = Field(default_factory=list)
    created: Optional[int] = Field(None, description="Creation time, epoch seconds.")

    @field_validator("domain")
    @classmethod
    def _domain_normalized(cls, value: str) -> str:
        if not is_valid_domain(value):
            raise ValueError(f"not a valid domain name: {value!r}")
        return value

    @field_validator("created")
    @classmethod
    def _plausible_epoch(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value <= MIN_PLAUSIBLE_EPOCH:
            raise ValueError(f"implausible creation epoch {value}")
        return value
