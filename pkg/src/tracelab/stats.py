"""Pure analytics over record streams: counts, rankings, focus time.

All functions are deterministic and side-effect free; ranking ties are
broken lexicographically by event id so dashboards render identically
across runs.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .records import (
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    TrackedRecord,
)

# A session's records paired with its (pseudonymous) session identity.
SessionRecords = Iterable[tuple[str, TrackedRecord]]


@dataclass(frozen=True)
class FocusInterval:
    file: str
    start: int
    end: int

    @property
    def duration_ms(self) -> int:
        return self.end - self.start


@dataclass
class FocusReport:
    intervals: list[FocusInterval] = field(default_factory=list)
    anomalies: int = 0


def top_n(records: Iterable[TrackedRecord], category: str, n: int) -> list[tuple[str, int]]:
    """Top-n event ids of one activity category, descending by count."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counts: Counter = Counter(
        r.event_id for r in records
        if isinstance(r, ActivityRecord) and r.category == category
    )
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]


def focus_intervals(records: Iterable[TrackedRecord]) -> FocusReport:
    """Pair focus events for one session into disjoint intervals.

    Focus is exclusive: focusing a file implicitly closes any open
    interval. `open` alone starts nothing; an unmatched `unfocus`/`close`
    counts as an anomaly; an interval still open at stream end closes at
    the last record's timestamp.
    """
    report = FocusReport()
    current_file: Optional[str] = None
    current_start = 0
    last_ts = 0
    for record in records:
        if not isinstance(record, FocusRecord):
            continue
        last_ts = record.timestamp
        if record.kind == "focus":
            if current_file is not None:
                report.intervals.append(
                    FocusInterval(current_file, current_start, record.timestamp))
            current_file = record.file
            current_start = record.timestamp
        elif record.kind in ("unfocus", "close"):
            if current_file == record.file:
                report.intervals.append(
                    FocusInterval(current_file, current_start, record.timestamp))
                current_file = None
            else:
                # unfocus/close with no matching open interval
                report.anomalies += 1
    if current_file is not None:
        report.intervals.append(FocusInterval(current_file, current_start, last_ts))
    return report


def focus_time_by_file(records: Iterable[TrackedRecord]) -> dict[str, int]:
    totals: dict[str, int] = {}
    for interval in focus_intervals(records).intervals:
        totals[interval.file] = totals.get(interval.file, 0) + interval.duration_ms
    return totals


def summary_counts(session_records: SessionRecords) -> dict:
    """Exact multiset counts across sessions.

    Identity: actions + run_debug + hotkeys + ui = activities.
    """
    participants: set[str] = set()
    activities = actions = run_debug = hotkeys = ui = snapshots = 0
    for session_id, record in session_records:
        participants.add(session_id)
        if isinstance(record, ActivityRecord):
            activities += 1
            if record.category == "action":
                actions += 1
            elif record.category in ("run", "debug"):
                run_debug += 1
            elif record.category == "hotkey":
                hotkeys += 1
            elif record.category == "ui":
                ui += 1
        elif isinstance(record, SnapshotRecord):
            snapshots += 1
    return {
        "participants": len(participants),
        "activities": activities,
        "actions": actions,
        "run_debug": run_debug,
        "hotkeys": hotkeys,
        "ui": ui,
        "snapshots": snapshots,
    }


def study_summary(session_records: list[tuple[str, TrackedRecord]], top: int = 15) -> dict:
    """Full dashboard summary: counts, top-N rankings, focus time."""
    counts = summary_counts(session_records)
    events_by_category: Counter = Counter()
    for _, record in session_records:
        if isinstance(record, ActivityRecord):
            events_by_category[record.category] += 1
    all_records = [r for _, r in session_records]
    focus_totals: dict[str, int] = {}
    by_session: dict[str, list[TrackedRecord]] = {}
    for session_id, record in session_records:
        by_session.setdefault(session_id, []).append(record)
    for session_id, records in by_session.items():
        for file, ms in focus_time_by_file(records).items():
            focus_totals[file] = focus_totals.get(file, 0) + ms
    return {
        **counts,
        "events_by_category": dict(sorted(events_by_category.items())),
        "top_actions": [{"event_id": e, "count": c} for e, c in top_n(all_records, "action", top)],
        "top_hotkeys": [{"event_id": e, "count": c} for e, c in top_n(all_records, "hotkey", top)],
        "focus_time_by_file": dict(sorted(focus_totals.items())),
    }
