"""
Pydantic models for verification trials and evaluation report rows.
"""
import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from utils.config import AugmentVariant, RoomType, TargetKind


class TrialScore(BaseModel):
    """One enrollment-room x test-instance trial"""
    enroll_room_id: str
    test_instance_id: str
    score: float
    is_target: bool
    test_path: Optional[str] = None

    @field_validator('score')
    def validate_score(cls, v):
        if not math.isfinite(v):
            raise ValueError("Trial scores must be finite")
        return v

    def to_trial_line(self) -> str:
        """'enroll_room_id test_path label' line of a trial list"""
        label = "target" if self.is_target else "nontarget"
        return f"{self.enroll_room_id} {self.test_path or self.test_instance_id} {label}"


class VerificationRow(BaseModel):
    seed: int
    room_type: RoomType
    j: int = Field(..., ge=1)
    variant: AugmentVariant = AugmentVariant.NONE
    eer: float = Field(..., ge=0.0, le=100.0)
    n_trials: int = Field(..., ge=0)


class MetadataRow(BaseModel):
    seed: int
    room_type: RoomType
    j: int = Field(..., ge=0)
    target: TargetKind
    estimator: str
    mae: float = Field(..., ge=0.0)

    @field_validator('estimator')
    def validate_estimator(cls, v):
        if v not in ("wada", "ridge", "bottleneck"):
            raise ValueError("estimator must be one of wada, ridge, bottleneck")
        return v


class EvalReport(BaseModel):
    """Everything one evaluation run produced"""
    seed: int
    config_digest: str
    verification: List[VerificationRow] = Field(default_factory=list)
    metadata: List[MetadataRow] = Field(default_factory=list)
    augmentation: List[VerificationRow] = Field(default_factory=list)
    det: Dict[str, List[List[float]]] = Field(default_factory=dict)
