# models/permutation.py
from enum import Enum

from pydantic import BaseModel, Field, model_validator


class Technique(str, Enum):
    ADDITION = "addition"
    BITSQUATTING = "bitsquatting"
    HOMOGLYPH = "homoglyph"
    HYPHENATION = "hyphenation"
    INSERTION = "insertion"
    OMISSION = "omission"
    REPETITION = "repetition"
    REPLACEMENT = "replacement"
    SUBDOMAIN = "subdomain"
    TRANSPOSITION = "transposition"
    VOWEL_SWAP = "vowel_swap"
    TLD_SWAP = "tld_swap"


ALL_TECHNIQUES = frozenset(Technique)


class Permutation(BaseModel):
    """A spoof candidate derived from a protected domain."""
    model_config = {"frozen": True}

    technique: Technique = Field(..., description="Fuzzing technique that produced the candidate.")
    candidate: str = Field(..., description="Normalized candidate domain.")
    origin: str = Field(..., description="Protected domain the candidate imitates.")

    @model_validator(mode="after")
    def _differs_from_origin(self) -> "Permutation":
        if self.candidate == self.origin:
            raise ValueError("candidate must differ from origin")
        return self


class PermutationHit(BaseModel):
    """An observed domain that matches a watched permutation."""
    observed: str
    permutation: Permutation
    brand: str
    first_seen: int = Field(..., description="Epoch milliseconds of the first sighting.")

    @model_validator(mode="after")
    def _observed_is_candidate(self) -> "PermutationHit":
        if self.observed != self.permutation.candidate:
            raise ValueError("observed domain must equal the permutation candidate")
        return self


# Suffixes used by tld_swap and accepted by the DGA generators.
COMMON_TLDS = (
    "com", "net", "org", "info", "biz", "co", "io", "me", "us", "uk",
    "de", "fr", "ru", "cn", "jp", "br", "in", "it", "nl", "es",
    "eu", "ca", "au", "pl", "ch", "xyz", "online", "site", "top", "app",
)
