# models/dga.py
from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from models.permutation import COMMON_TLDS


class DgaFamily(str, Enum):
    LCG_CHAR = "lcg_char"
    HASH_HEX = "hash_hex"
    WORDLIST_CONCAT = "wordlist_concat"
    DATE_SEEDED = "date_seeded"


class DgaConfig(BaseModel):
    family: DgaFamily
    seed: int = Field(0, ge=0, lt=2 ** 64, description="64-bit seed.")
    count: int = Field(..., ge=1)
    length: int = Field(12, ge=4, le=32, description="Label length for lcg_char/hash_hex.")
    date: Optional[Tuple[int, int, int]] = Field(None, description="(year, month, day) for date_seeded.")
    tld: str = "com"

    @field_validator("tld")
    @classmethod
    def _known_tld(cls, value: str) -> str:
        value = value.lower().lstrip(".")
        if value not in COMMON_TLDS:
            raise ValueError(f"tld {value!r} is not in the embedded TLD list")
        return value

    @model_validator(mode="after")
    def _date_required(self) -> "DgaConfig":
        if self.family == DgaFamily.DATE_SEEDED and self.date is None:
            raise ValueError("date_seeded requires date=(year, month, day)")
        return self


class FamilyDescriptor(BaseModel):
    name: DgaFamily
    parameters: Dict[str, str] = Field(..., description="Parameter name -> description.")
    archetype: str
