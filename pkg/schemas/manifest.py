"""
Pydantic models for corpus manifest records.
"""
from typing import Literal

from pydantic import BaseModel, Field, field_validator

from utils.config import RoomType

Split = Literal["train", "val", "enroll", "test"]
SPLITS = ("train", "val", "enroll", "test")


class ManifestRecord(BaseModel):
    """One synthesized instance, as written to the JSON-lines manifest"""
    path: str
    instance_id: str
    room_id: str
    room_type: RoomType
    split: Split
    snr_db: float = Field(..., ge=5.0, le=25.0)
    t60_s: float = Field(..., ge=0.05, le=0.5)
    speech_id: str
    seed: int
    rir_id: str

    model_config = {"extra": "ignore"}

    @field_validator('path')
    def validate_path(cls, v):
        if v.startswith("/") or ".." in v.split("/"):
            raise ValueError("Manifest paths must be relative to the manifest directory")
        return v

    def to_json_line(self) -> str:
        """Canonical one-line JSON form"""
        return self.model_dump_json()
