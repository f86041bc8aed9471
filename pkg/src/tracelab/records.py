"""Tracked record types: the five collected-data categories.

Every record carries a per-session sequence number (assigned by the
journal) and a UTC millisecond timestamp. Records are immutable and safe
to hand across threads.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Union

CATEGORY_SNAPSHOT = "snapshot"
CATEGORY_ACTIVITY = "activity"
CATEGORY_FOCUS = "focus"
CATEGORY_TOOLWINDOW = "toolwindow"
CATEGORY_SURVEY = "survey"

CATEGORIES = (
    CATEGORY_SNAPSHOT,
    CATEGORY_ACTIVITY,
    CATEGORY_FOCUS,
    CATEGORY_TOOLWINDOW,
    CATEGORY_SURVEY,
)

# Activity subcategories (closed set).
ACTIVITY_CATEGORIES = ("action", "hotkey", "run", "debug", "ui")

FOCUS_KINDS = ("open", "focus", "unfocus", "close")
TOOLWINDOW_KINDS = ("opened", "closed")

MODE_FULL = "full"
MODE_SIGNATURES = "signatures"


def content_digest(content: str) -> str:
    """sha256 hex digest of full file content."""
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SnapshotRecord:
    seq: int
    timestamp: int
    file: str
    content: str
    digest: str
    mode: str = MODE_FULL


@dataclass(frozen=True)
class ActivityRecord:
    seq: int
    timestamp: int
    category: str
    event_id: str
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FocusRecord:
    seq: int
    timestamp: int
    file: str
    kind: str


@dataclass(frozen=True)
class ToolWindowRecord:
    seq: int
    timestamp: int
    window_id: str
    kind: str


@dataclass(frozen=True)
class SurveyResponseRecord:
    seq: int
    timestamp: int
    survey_id: str
    answers: dict = field(default_factory=dict)


TrackedRecord = Union[
    SnapshotRecord,
    ActivityRecord,
    FocusRecord,
    ToolWindowRecord,
    SurveyResponseRecord,
]

_CATEGORY_BY_TYPE = {
    SnapshotRecord: CATEGORY_SNAPSHOT,
    ActivityRecord: CATEGORY_ACTIVITY,
    FocusRecord: CATEGORY_FOCUS,
    ToolWindowRecord: CATEGORY_TOOLWINDOW,
    SurveyResponseRecord: CATEGORY_SURVEY,
}


def record_category(record: TrackedRecord) -> str:
    return _CATEGORY_BY_TYPE[type(record)]


def with_seq(record: TrackedRecord, seq: int) -> TrackedRecord:
    return replace(record, seq=seq)


def to_wire(record: TrackedRecord) -> dict:
    """Tagged JSON-compatible dict (category discriminator first)."""
    if isinstance(record, SnapshotRecord):
        return {
            "category": CATEGORY_SNAPSHOT,
            "seq": record.seq,
            "timestamp": record.timestamp,
            "file": record.file,
            "mode": record.mode,
            "digest": record.digest,
            "content": record.content,
        }
    if isinstance(record, ActivityRecord):
        return {
            "category": CATEGORY_ACTIVITY,
            "seq": record.seq,
            "timestamp": record.timestamp,
            "activity_category": record.category,
            "event_id": record.event_id,
            "detail": record.detail,
        }
    if isinstance(record, FocusRecord):
        return {
            "category": CATEGORY_FOCUS,
            "seq": record.seq,
            "timestamp": record.timestamp,
            "file": record.file,
            "kind": record.kind,
        }
    if isinstance(record, ToolWindowRecord):
        return {
            "category": CATEGORY_TOOLWINDOW,
            "seq": record.seq,
            "timestamp": record.timestamp,
            "window_id": record.window_id,
            "kind": record.kind,
        }
    if isinstance(record, SurveyResponseRecord):
        return {
            "category": CATEGORY_SURVEY,
            "seq": record.seq,
            "timestamp": record.timestamp,
            "survey_id": record.survey_id,
            "answers": record.answers,
        }
    raise TypeError(f"not a tracked record: {record!r}")


def from_wire(doc: dict) -> TrackedRecord:
    """Inverse of to_wire. Raises ValueError on malformed input."""
    if not isinstance(doc, dict):
        raise ValueError("record must be an object")
    try:
        category = doc["category"]
        seq = int(doc["seq"])
        timestamp = int(doc["timestamp"])
        if category == CATEGORY_SNAPSHOT:
            mode = doc["mode"]
            if mode not in (MODE_FULL, MODE_SIGNATURES):
                raise ValueError(f"unknown snapshot mode {mode!r}")
            return SnapshotRecord(
                seq=seq,
                timestamp=timestamp,
                file=str(doc["file"]),
                mode=mode,
                digest=str(doc["digest"]),
                content=str(doc["content"]),
            )
        if category == CATEGORY_ACTIVITY:
            sub = doc["activity_category"]
            if sub not in ACTIVITY_CATEGORIES:
                raise ValueError(f"unknown activity category {sub!r}")
            detail = doc.get("detail", {})
            if not isinstance(detail, dict):
                raise ValueError("detail must be an object")
            event_id = str(doc["event_id"])
            if not event_id:
                raise ValueError("event_id must be non-empty")
            return ActivityRecord(
                seq=seq, timestamp=timestamp, category=sub,
                event_id=event_id, detail=detail,
            )
        if category == CATEGORY_FOCUS:
            kind = doc["kind"]
            if kind not in FOCUS_KINDS:
                raise ValueError(f"unknown focus kind {kind!r}")
            return FocusRecord(seq=seq, timestamp=timestamp, file=str(doc["file"]), kind=kind)
        if category == CATEGORY_TOOLWINDOW:
            kind = doc["kind"]
            if kind not in TOOLWINDOW_KINDS:
                raise ValueError(f"unknown tool window kind {kind!r}")
            return ToolWindowRecord(
                seq=seq, timestamp=timestamp, window_id=str(doc["window_id"]), kind=kind
            )
        if category == CATEGORY_SURVEY:
            answers = doc["answers"]
            if not isinstance(answers, dict):
                raise ValueError("answers must be an object")
            return SurveyResponseRecord(
                seq=seq, timestamp=timestamp, survey_id=str(doc["survey_id"]), answers=answers
            )
        raise ValueError(f"unknown record category {category!r}")
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ValueError(str(exc)) from exc


def dumps_detail(value: dict) -> str:
    """Deterministic JSON for CSV cells (detail / answers columns)."""
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
