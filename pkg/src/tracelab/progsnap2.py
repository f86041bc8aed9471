"""Conversion of stored study data into a ProgSnap2 bundle, plus a
bundle validator.

Bundle layout: MainTable.csv, DatasetMetadata.csv, CodeStates/<id>/...
(the "Directory" code-state representation). Non-standard event kinds
keep their information under X- extension names instead of being
dropped: hotkeys, generic actions, unfocus events, tool windows, and
survey responses.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .records import (
    ActivityRecord,
    FocusRecord,
    MODE_SIGNATURES,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
    TrackedRecord,
    dumps_detail,
)

PS2_VERSION = "6"

MAIN_COLUMNS = [
    "EventID",
    "Order",
    "SubjectID",
    "ToolInstances",
    "EventType",
    "CodeStateID",
    "ClientTimestamp",
    "CodeStateSection",
    "X-EventId",
    "X-ContentMode",
    "X-WindowId",
    "X-SurveyId",
    "X-AnswersJson",
]

REQUIRED_COLUMNS = ("EventID", "Order", "SubjectID", "ToolInstances",
                    "EventType", "CodeStateID", "ClientTimestamp")

REQUIRED_METADATA = ("Version", "IsEventOrderingConsistent", "CodeStateRepresentation")

_EVENT_TYPE_BY_FOCUS_KIND = {
    "open": "File.Open",
    "close": "File.Close",
    "focus": "File.Focus",
    "unfocus": "X-File.Unfocus",
}


@dataclass
class Bundle:
    main_rows: list[dict] = field(default_factory=list)
    metadata: list[tuple[str, str]] = field(default_factory=list)
    code_states: dict = field(default_factory=dict)  # id -> {path: content}


def _iso_utc(timestamp_ms: int) -> str:
    dt = datetime.fromtimestamp(timestamp_ms / 1000.0, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{timestamp_ms % 1000:03d}Z"


def convert(sessions: list[tuple[str, list[TrackedRecord]]]) -> Bundle:
    """Convert per-subject record streams into a ProgSnap2 bundle.

    Order is assigned by (timestamp, subject, seq); each snapshot becomes
    a File.Edit with a fresh code state, carried forward on the subject's
    later events. Deterministic: equal inputs produce equal bundles.
    """
    events: list[tuple[int, str, int, TrackedRecord]] = []
    for subject_id, records in sessions:
        for record in records:
            events.append((record.timestamp, subject_id, record.seq, record))
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    bundle = Bundle(metadata=[
        ("Version", PS2_VERSION),
        ("IsEventOrderingConsistent", "true"),
        ("CodeStateRepresentation", "Directory"),
    ])
    tool = f"tracelab-{__version__}"
    trees: dict[str, dict] = {}        # subject -> current file tree
    current_state: dict[str, str] = {}  # subject -> last CodeStateID
    state_counter = 0

    for order, (timestamp, subject, seq, record) in enumerate(events):
        row = {column: "" for column in MAIN_COLUMNS}
        row["EventID"] = str(order)
        row["Order"] = str(order)
        row["SubjectID"] = subject
        row["ToolInstances"] = tool
        row["ClientTimestamp"] = _iso_utc(timestamp)

        if isinstance(record, SnapshotRecord):
            tree = dict(trees.get(subject, {}))
            tree[record.file] = record.content
            trees[subject] = tree
            state_id = f"cs{state_counter:06d}"
            state_counter += 1
            bundle.code_states[state_id] = tree
            current_state[subject] = state_id
            row["EventType"] = "File.Edit"
            row["CodeStateSection"] = record.file
            if record.mode == MODE_SIGNATURES:
                row["X-ContentMode"] = "signatures-only"
        elif isinstance(record, ActivityRecord):
            if record.category == "run":
                row["EventType"] = "Run.Program"
            elif record.category == "debug":
                row["EventType"] = "Debug.Program"
            elif record.category == "hotkey":
                row["EventType"] = "X-Hotkey"
            else:
                row["EventType"] = "X-Action"
            row["X-EventId"] = record.event_id
        elif isinstance(record, FocusRecord):
            row["EventType"] = _EVENT_TYPE_BY_FOCUS_KIND[record.kind]
            row["CodeStateSection"] = record.file
        elif isinstance(record, ToolWindowRecord):
            row["EventType"] = "X-ToolWindow.Open" if record.kind == "opened" \
                else "X-ToolWindow.Close"
            row["X-WindowId"] = record.window_id
        elif isinstance(record, SurveyResponseRecord):
            row["EventType"] = "X-Survey"
            row["X-SurveyId"] = record.survey_id
            row["X-AnswersJson"] = dumps_detail(record.answers)

        row["CodeStateID"] = current_state.get(subject, "")
        bundle.main_rows.append(row)
    return bundle


# ---------------------------------------------------------------------------
# Bundle I/O


def write_bundle(bundle: Bundle, out_dir: Path | str) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "MainTable.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(MAIN_COLUMNS)
        for row in bundle.main_rows:
            writer.writerow([row.get(column, "") for column in MAIN_COLUMNS])
    with open(out_dir / "DatasetMetadata.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["Property", "Value"])
        for prop, value in bundle.metadata:
            writer.writerow([prop, value])
    states_dir = out_dir / "CodeStates"
    states_dir.mkdir(exist_ok=True)
    for state_id in sorted(bundle.code_states):
        state_dir = states_dir / state_id
        for rel_path, content in sorted(bundle.code_states[state_id].items()):
            target = state_dir / rel_path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, encoding="utf-8")
        state_dir.mkdir(exist_ok=True)  # states with an empty tree


def load_bundle(directory: Path | str) -> Bundle:
    directory = Path(directory)
    bundle = Bundle()
    with open(directory / "MainTable.csv", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, [])
        for row in reader:
            bundle.main_rows.append(dict(zip(header, row)))
    with open(directory / "DatasetMetadata.csv", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if len(row) >= 2:
                bundle.metadata.append((row[0], row[1]))
    states_dir = directory / "CodeStates"
    if states_dir.is_dir():
        for state_dir in sorted(states_dir.iterdir()):
            if not state_dir.is_dir():
                continue
            tree = {}
            for path in sorted(state_dir.rglob("*")):
                if path.is_file():
                    tree[path.relative_to(state_dir).as_posix()] = \
                        path.read_text(encoding="utf-8")
            bundle.code_states[state_dir.name] = tree
    return bundle


def validate_bundle(bundle: Bundle) -> list[str]:
    """Return violations (empty list means the bundle conforms)."""
    violations: list[str] = []

    if bundle.main_rows:
        missing = [c for c in REQUIRED_COLUMNS if c not in bundle.main_rows[0]]
        for column in missing:
            violations.append(f"missing required column {column}")

    previous_order = None
    for line, row in enumerate(bundle.main_rows, start=2):  # header is line 1
        try:
            order = int(row.get("Order", ""))
        except ValueError:
            violations.append(f"row {line}: Order is not an integer")
            continue
        if previous_order is not None and order <= previous_order:
            violations.append(f"row {line}: Order not strictly increasing")
        previous_order = order
        state_id = row.get("CodeStateID", "")
        if state_id and state_id not in bundle.code_states:
            violations.append(f"row {line}: unresolved CodeStateID {state_id!r}")
        if not row.get("EventType"):
            violations.append(f"row {line}: empty EventType")

    metadata = dict(bundle.metadata)
    for prop in REQUIRED_METADATA:
        if prop not in metadata:
            violations.append(f"missing metadata property {prop}")
    return violations
