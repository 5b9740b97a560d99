# models/evaluation.py
from typing import Dict, List

from pydantic import BaseModel, Field


class RocPoint(BaseModel):
    fpr: float
    tpr: float
    threshold: float


class RocCurve(BaseModel):
    points: List[RocPoint] = Field(..., description="Ordered by non-decreasing fpr.")
    auc: float


class OperatingPoint(BaseModel):
    target_fpr: float
    achieved_fpr: float
    tpr: float
    threshold: float


class EvalReport(BaseModel):
    auc: float
    accuracy: float = Field(..., description="Accuracy at threshold 0.5 (score >= 0.5 is positive).")
    operating_points: List[OperatingPoint] = Field(default_factory=list)
    counts: Dict[str, int] = Field(default_factory=dict, description="Samples per class.")
    model_type: str = ""
