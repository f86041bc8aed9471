"""Crash-safe local persistence of tracked records as per-category CSV logs.

One journal per session. Appends are fsynced before the sequence number
is returned, so an acked append survives any crash. The flush watermark
(highest seq confirmed by the server) lives in a small side file updated
by atomic rename; records above it are pending for sync.

Column orders are a bit-exact contract:
  snapshots.csv  seq,timestamp,file,mode,digest,content
  activity.csv   seq,timestamp,category,event_id,detail_json
  focus.csv      seq,timestamp,file,kind
  toolwindow.csv seq,timestamp,window_id,kind
  survey.csv     seq,timestamp,survey_id,answers_json
"""
from __future__ import annotations

import base64
import csv
import io
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .records import (
    CATEGORY_ACTIVITY,
    CATEGORY_FOCUS,
    CATEGORY_SNAPSHOT,
    CATEGORY_SURVEY,
    CATEGORY_TOOLWINDOW,
    ACTIVITY_CATEGORIES,
    FOCUS_KINDS,
    MODE_FULL,
    MODE_SIGNATURES,
    TOOLWINDOW_KINDS,
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
    TrackedRecord,
    content_digest,
    dumps_detail,
    record_category,
    with_seq,
)

logger = logging.getLogger(__name__)

FILES = {
    CATEGORY_SNAPSHOT: "snapshots.csv",
    CATEGORY_ACTIVITY: "activity.csv",
    CATEGORY_FOCUS: "focus.csv",
    CATEGORY_TOOLWINDOW: "toolwindow.csv",
    CATEGORY_SURVEY: "survey.csv",
}

HEADERS = {
    CATEGORY_SNAPSHOT: ["seq", "timestamp", "file", "mode", "digest", "content"],
    CATEGORY_ACTIVITY: ["seq", "timestamp", "category", "event_id", "detail_json"],
    CATEGORY_FOCUS: ["seq", "timestamp", "file", "kind"],
    CATEGORY_TOOLWINDOW: ["seq", "timestamp", "window_id", "kind"],
    CATEGORY_SURVEY: ["seq", "timestamp", "survey_id", "answers_json"],
}

WATERMARK_FILE = "watermark"


class IoFailure(Exception):
    pass


@dataclass(frozen=True)
class CorruptRow:
    file: str
    line: int
    detail: str


# RFC 4180 (and Python's csv module) cannot carry NUL characters; the
# rare text cell containing one is wrapped in a base64 sentinel.
_B64_SENTINEL = "=b64:"


def _encode_cell(value: str) -> str:
    if "\x00" in value or value.startswith(_B64_SENTINEL):
        return _B64_SENTINEL + base64.b64encode(value.encode("utf-8")).decode("ascii")
    return value


def _decode_cell(value: str) -> str:
    if value.startswith(_B64_SENTINEL):
        return base64.b64decode(value[len(_B64_SENTINEL):]).decode("utf-8")
    return value


def _row_to_record(category: str, row: list[str]) -> TrackedRecord:
    if len(row) != len(HEADERS[category]):
        raise ValueError(f"expected {len(HEADERS[category])} columns, got {len(row)}")
    seq = int(row[0])
    timestamp = int(row[1])
    if category == CATEGORY_SNAPSHOT:
        mode = row[3]
        if mode not in (MODE_FULL, MODE_SIGNATURES):
            raise ValueError(f"bad mode {mode!r}")
        content = _decode_cell(row[5])
        if mode == MODE_FULL:
            # integrity check: catches rows truncated by a crash
            if content_digest(content) != row[4]:
                raise ValueError("content does not match digest")
        return SnapshotRecord(seq=seq, timestamp=timestamp, file=_decode_cell(row[2]),
                              mode=mode, digest=row[4], content=content)
    if category == CATEGORY_ACTIVITY:
        if row[2] not in ACTIVITY_CATEGORIES:
            raise ValueError(f"bad activity category {row[2]!r}")
        if not row[3]:
            raise ValueError("empty event_id")
        detail = json.loads(row[4])
        if not isinstance(detail, dict):
            raise ValueError("detail must be an object")
        return ActivityRecord(seq=seq, timestamp=timestamp, category=row[2],
                              event_id=_decode_cell(row[3]), detail=detail)
    if category == CATEGORY_FOCUS:
        if row[3] not in FOCUS_KINDS:
            raise ValueError(f"bad focus kind {row[3]!r}")
        return FocusRecord(seq=seq, timestamp=timestamp, file=_decode_cell(row[2]), kind=row[3])
    if category == CATEGORY_TOOLWINDOW:
        if row[3] not in TOOLWINDOW_KINDS:
            raise ValueError(f"bad tool window kind {row[3]!r}")
        return ToolWindowRecord(seq=seq, timestamp=timestamp,
                                window_id=_decode_cell(row[2]), kind=row[3])
    answers = json.loads(row[3])
    if not isinstance(answers, dict):
        raise ValueError("answers must be an object")
    return SurveyResponseRecord(seq=seq, timestamp=timestamp,
                                survey_id=_decode_cell(row[2]), answers=answers)


def _record_to_row(record: TrackedRecord) -> list[str]:
    if isinstance(record, SnapshotRecord):
        return [str(record.seq), str(record.timestamp), _encode_cell(record.file),
                record.mode, record.digest, _encode_cell(record.content)]
    if isinstance(record, ActivityRecord):
        return [str(record.seq), str(record.timestamp), record.category,
                _encode_cell(record.event_id), dumps_detail(record.detail)]
    if isinstance(record, FocusRecord):
        return [str(record.seq), str(record.timestamp), _encode_cell(record.file), record.kind]
    if isinstance(record, ToolWindowRecord):
        return [str(record.seq), str(record.timestamp), _encode_cell(record.window_id),
                record.kind]
    if isinstance(record, SurveyResponseRecord):
        return [str(record.seq), str(record.timestamp), _encode_cell(record.survey_id),
                dumps_detail(record.answers)]
    raise TypeError(f"not a tracked record: {record!r}")


class Journal:
    """Append-only journal over a directory of five category CSVs.

    `durable=False` skips the per-append fsync; synthetic-data generation
    uses it, live capture must not.
    """

    def __init__(self, directory: Path | str, durable: bool = True):
        self.directory = Path(directory)
        self.durable = durable
        self.directory.mkdir(parents=True, exist_ok=True)
        self._handles: dict[str, io.TextIOWrapper] = {}
        self._writers: dict[str, object] = {}
        self.last_corrupt_rows: list[CorruptRow] = []
        self._next_seq = self._scan_max_seq() + 1

    # -- open/close ----------------------------------------------------

    def _scan_max_seq(self) -> int:
        max_seq = 0
        for category, name in FILES.items():
            path = self.directory / name
            if not path.exists():
                continue
            self._seal_partial_tail(path)
            for _, record in self._read_category(category):
                if record.seq > max_seq:
                    max_seq = record.seq
        return max_seq

    @staticmethod
    def _seal_partial_tail(path: Path) -> None:
        # A crash mid-append can leave a final line without its newline;
        # seal it so later appends start on a fresh line. The partial row
        # itself is reported as corrupt on read.
        with open(path, "rb+") as f:
            f.seek(0, os.SEEK_END)
            size = f.tell()
            if size == 0:
                return
            f.seek(size - 1)
            if f.read(1) != b"\n":
                f.write(b"\n")
                f.flush()
                os.fsync(f.fileno())

    def close(self) -> None:
        for handle in self._handles.values():
            handle.close()
        self._handles.clear()
        self._writers.clear()

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- append --------------------------------------------------------

    def _writer_for(self, category: str):
        if category not in self._writers:
            path = self.directory / FILES[category]
            is_new = not path.exists() or path.stat().st_size == 0
            handle = open(path, "a", encoding="utf-8", newline="")
            writer = csv.writer(handle)
            if is_new:
                writer.writerow(HEADERS[category])
            self._handles[category] = handle
            self._writers[category] = writer
        return self._writers[category]

    def append(self, record: TrackedRecord) -> int:
        """Durably append a record; assigns and returns its seq."""
        category = record_category(record)
        seq = self._next_seq
        stamped = with_seq(record, seq)
        writer = self._writer_for(category)
        try:
            writer.writerow(_record_to_row(stamped))
            handle = self._handles[category]
            handle.flush()
            if self.durable:
                os.fsync(handle.fileno())
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        self._next_seq = seq + 1
        return seq

    @property
    def max_seq(self) -> int:
        return self._next_seq - 1

    # -- read ----------------------------------------------------------

    def _read_category(self, category: str):
        """Yield (line_number, record); corrupt rows go to last_corrupt_rows."""
        path = self.directory / FILES[category]
        if not path.exists():
            return
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            for line_no, row in enumerate(reader, start=1):
                if line_no == 1 and row == HEADERS[category]:
                    continue
                if not row:
                    continue
                try:
                    yield line_no, _row_to_record(category, row)
                except (ValueError, json.JSONDecodeError) as exc:
                    self.last_corrupt_rows.append(
                        CorruptRow(file=FILES[category], line=line_no, detail=str(exc)))

    def read_all(self) -> list[TrackedRecord]:
        """All readable records across categories, in seq order."""
        self.last_corrupt_rows = []
        records: list[TrackedRecord] = []
        for category in FILES:
            for _, record in self._read_category(category):
                records.append(record)
        records.sort(key=lambda r: r.seq)
        return records

    def read_pending(self) -> list[TrackedRecord]:
        """Records not yet confirmed flushed, in seq order.

        Corrupt rows are skipped and reported via `last_corrupt_rows`.
        """
        watermark = self.flush_watermark()
        return [r for r in self.read_all() if r.seq > watermark]

    # -- flush watermark -------------------------------------------------

    def flush_watermark(self) -> int:
        path = self.directory / WATERMARK_FILE
        try:
            return int(path.read_text(encoding="utf-8").strip())
        except (OSError, ValueError):
            return 0

    def mark_flushed(self, upto_seq: int) -> None:
        """Durably advance the watermark; monotone, never regresses."""
        if upto_seq > self.max_seq:
            raise ValueError(f"cannot flush past max appended seq {self.max_seq}")
        if upto_seq <= self.flush_watermark():
            return
        path = self.directory / WATERMARK_FILE
        tmp = path.with_suffix(".tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as f:
                f.write(str(upto_seq))
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
            if self.durable:
                dir_fd = os.open(self.directory, os.O_RDONLY)
                try:
                    os.fsync(dir_fd)
                finally:
                    os.close(dir_fd)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
