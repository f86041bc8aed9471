"""Pydantic request/response models for the ingestion API."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ConsentProof(BaseModel):
    granted_at: int


class RegisterRequest(BaseModel):
    research_id: str = Field(min_length=1)
    consent: ConsentProof
    client_nonce: str = Field(min_length=1)


class RegisterResponse(BaseModel):
    session_token: str


class BatchResponse(BaseModel):
    acked_upto_seq: int
    duplicate: bool
    quarantined: int = 0


class BackupRequest(BaseModel):
    destination: str = Field(min_length=1)


class BackupResponse(BaseModel):
    destination: str
    manifest: dict


class RankedEvent(BaseModel):
    event_id: str
    count: int


class StudySummary(BaseModel):
    participants: int
    activities: int
    actions: int
    run_debug: int
    hotkeys: int
    ui: int
    snapshots: int
    events_by_category: dict
    top_actions: list[RankedEvent]
    top_hotkeys: list[RankedEvent]
    focus_time_by_file: dict


class ErrorResponse(BaseModel):
    detail: str
    reason: Optional[str] = None
