"""Request and response bodies for the HTTP service.

Frames travel as base64-encoded binary PPM (P6): bit-exact, no codec
ambiguity. Every error body is {"error": snake_case_code, "detail": text}.
"""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

TRACK_STATES = ("acquiring", "tracking", "low_confidence", "occluded",
                "searching", "exited", "done")


class BoxModel(BaseModel):
    x: float
    y: float
    w: float
    h: float


class CreateTrackRequest(BaseModel):
    camera_id: str
    frame_index: int = Field(ge=0)
    bbox: BoxModel
    frame_b64: str


class CreateTrackResponse(BaseModel):
    track_id: str


class FrameEnvelope(BaseModel):
    camera_id: str
    frame_index: int = Field(ge=0)
    frame_b64: str


class TrackUpdate(BaseModel):
    track_id: str
    state: str
    camera_id: str
    bbox: Optional[BoxModel] = None


class IngestResponse(BaseModel):
    updates: list[TrackUpdate]


class TrackStatus(BaseModel):
    track_id: str
    phase: str
    camera: Optional[str]
    ticks: int
    entries: int
    last_state: Optional[str] = None
    last_bbox: Optional[BoxModel] = None


class CameraInfo(BaseModel):
    id: str
    fov: list[float]
    resolution: list[int]
    frames_received: int
    dropped: int
    last_frame_index: Optional[int] = None


class CameraList(BaseModel):
    cameras: list[CameraInfo]


class CameraStats(BaseModel):
    frames_received: int
    dropped: int


class StatsResponse(BaseModel):
    tracks: int
    cameras: dict[str, CameraStats]


class ErrorBody(BaseModel):
    error: str
    detail: str
