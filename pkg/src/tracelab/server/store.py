"""Embedded transactional storage for the ingestion server.

SQLite behind a narrow repository interface: sessions and consent,
per-category record tables, byte-exact raw batch payloads, quarantine
for malformed records, and attachments. Row uniqueness on
(session, seq) per category makes re-ingestion idempotent even across
distinct batch ids.
"""
from __future__ import annotations

import base64
import json
import secrets
import sqlite3
import threading
import time
from pathlib import Path
from typing import Optional

from ..records import (
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
    TrackedRecord,
    dumps_detail,
    from_wire,
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    research_id TEXT NOT NULL,
    participant_id TEXT NOT NULL,
    client_nonce TEXT NOT NULL,
    created_at INTEGER NOT NULL,
    UNIQUE (research_id, client_nonce)
);
CREATE TABLE IF NOT EXISTS consent (
    participant_id TEXT PRIMARY KEY,
    research_id TEXT NOT NULL,
    granted_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS raw_batches (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_token TEXT NOT NULL,
    batch_id TEXT NOT NULL,
    received_at INTEGER NOT NULL,
    payload BLOB NOT NULL,
    status TEXT NOT NULL,
    acked_upto INTEGER NOT NULL,
    UNIQUE (session_token, batch_id)
);
CREATE TABLE IF NOT EXISTS snapshots (
    session_token TEXT NOT NULL,
    seq INTEGER NOT NULL,
    timestamp INTEGER NOT NULL,
    file TEXT NOT NULL,
    mode TEXT NOT NULL,
    digest TEXT NOT NULL,
    content TEXT NOT NULL,
    PRIMARY KEY (session_token, seq)
);
CREATE TABLE IF NOT EXISTS activity (
    session_token TEXT NOT NULL,
    seq INTEGER NOT NULL,
    timestamp INTEGER NOT NULL,
    category TEXT NOT NULL,
    event_id TEXT NOT NULL,
    detail_json TEXT NOT NULL,
    PRIMARY KEY (session_token, seq)
);
CREATE TABLE IF NOT EXISTS focus (
    session_token TEXT NOT NULL,
    seq INTEGER NOT NULL,
    timestamp INTEGER NOT NULL,
    file TEXT NOT NULL,
    kind TEXT NOT NULL,
    PRIMARY KEY (session_token, seq)
);
CREATE TABLE IF NOT EXISTS toolwindow (
    session_token TEXT NOT NULL,
    seq INTEGER NOT NULL,
    timestamp INTEGER NOT NULL,
    window_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    PRIMARY KEY (session_token, seq)
);
CREATE TABLE IF NOT EXISTS survey (
    session_token TEXT NOT NULL,
    seq INTEGER NOT NULL,
    timestamp INTEGER NOT NULL,
    survey_id TEXT NOT NULL,
    answers_json TEXT NOT NULL,
    PRIMARY KEY (session_token, seq)
);
CREATE TABLE IF NOT EXISTS quarantine (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_token TEXT NOT NULL,
    batch_id TEXT NOT NULL,
    record_index INTEGER NOT NULL,
    raw_json TEXT NOT NULL,
    error TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS attachments (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_token TEXT NOT NULL,
    path TEXT NOT NULL,
    data BLOB NOT NULL
);
"""

RECORD_TABLES = ("snapshots", "activity", "focus", "toolwindow", "survey")
ALL_TABLES = ("sessions", "consent", "raw_batches", "quarantine", "attachments") + RECORD_TABLES


class UnknownSession(Exception):
    pass


class UnknownResearch(Exception):
    pass


class Store:
    def __init__(self, db_path: Path | str):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self.db_path, check_same_thread=False,
                                     isolation_level=None)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA synchronous=FULL")
        self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    # -- sessions ----------------------------------------------------------

    def register_session(self, research_id: str, granted_at: int, client_nonce: str) -> str:
        """Create (or idempotently return) a session for a consent grant.

        The participant id is random; consent metadata lives only in the
        separate consent table.
        """
        with self._lock:
            row = self._conn.execute(
                "SELECT token FROM sessions WHERE research_id=? AND client_nonce=?",
                (research_id, client_nonce)).fetchone()
            if row:
                return row[0]
            token = secrets.token_urlsafe(24)
            participant_id = f"p-{secrets.token_hex(8)}"
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                self._conn.execute(
                    "INSERT INTO sessions (token, research_id, participant_id, client_nonce, created_at)"
                    " VALUES (?,?,?,?,?)",
                    (token, research_id, participant_id, client_nonce, int(time.time() * 1000)))
                self._conn.execute(
                    "INSERT INTO consent (participant_id, research_id, granted_at) VALUES (?,?,?)",
                    (participant_id, research_id, granted_at))
                self._conn.execute("COMMIT")
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
            return token

    def session(self, token: str) -> Optional[dict]:
        row = self._conn.execute(
            "SELECT token, research_id, participant_id FROM sessions WHERE token=?",
            (token,)).fetchone()
        if not row:
            return None
        return {"token": row[0], "research_id": row[1], "participant_id": row[2]}

    def sessions_for_study(self, research_id: str) -> list[dict]:
        rows = self._conn.execute(
            "SELECT token, research_id, participant_id FROM sessions"
            " WHERE research_id=? ORDER BY created_at, token", (research_id,)).fetchall()
        return [{"token": r[0], "research_id": r[1], "participant_id": r[2]} for r in rows]

    def study_exists(self, research_id: str) -> bool:
        return bool(self._conn.execute(
            "SELECT 1 FROM sessions WHERE research_id=? LIMIT 1", (research_id,)).fetchone())

    # -- ingestion ----------------------------------------------------------

    def ingest(self, token: str, batch_id: str, payload: bytes,
               records: list, attachments: list) -> dict:
        """Apply one batch atomically.

        Duplicate (session, batch_id) pairs change nothing and replay the
        original ack. Malformed records are quarantined, valid ones
        inserted; the raw payload is stored byte-exact regardless.
        """
        if self.session(token) is None:
            raise UnknownSession(token)
        with self._lock:
            row = self._conn.execute(
                "SELECT acked_upto FROM raw_batches WHERE session_token=? AND batch_id=?",
                (token, batch_id)).fetchone()
            if row:
                return {"acked_upto_seq": row[0], "duplicate": True, "quarantined": 0}

            acked_upto = 0
            quarantined = 0
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                for index, doc in enumerate(records):
                    seq_guess = doc.get("seq") if isinstance(doc, dict) else None
                    if isinstance(seq_guess, int) and seq_guess > acked_upto:
                        acked_upto = seq_guess
                    try:
                        record = from_wire(doc)
                    except ValueError as exc:
                        quarantined += 1
                        self._conn.execute(
                            "INSERT INTO quarantine (session_token, batch_id, record_index, raw_json, error)"
                            " VALUES (?,?,?,?,?)",
                            (token, batch_id, index, json.dumps(doc), str(exc)))
                        continue
                    self._insert_record(token, record)
                    if record.seq > acked_upto:
                        acked_upto = record.seq
                for att in attachments:
                    self._conn.execute(
                        "INSERT INTO attachments (session_token, path, data) VALUES (?,?,?)",
                        (token, str(att.get("path", "")),
                         base64.b64decode(att.get("content_b64", ""))))
                self._conn.execute(
                    "INSERT INTO raw_batches (session_token, batch_id, received_at, payload, status, acked_upto)"
                    " VALUES (?,?,?,?,?,?)",
                    (token, batch_id, int(time.time() * 1000), payload, "applied", acked_upto))
                self._conn.execute("COMMIT")
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
            return {"acked_upto_seq": acked_upto, "duplicate": False, "quarantined": quarantined}

    def _insert_record(self, token: str, record: TrackedRecord) -> None:
        if isinstance(record, SnapshotRecord):
            self._conn.execute(
                "INSERT OR IGNORE INTO snapshots VALUES (?,?,?,?,?,?,?)",
                (token, record.seq, record.timestamp, record.file,
                 record.mode, record.digest, record.content))
        elif isinstance(record, ActivityRecord):
            self._conn.execute(
                "INSERT OR IGNORE INTO activity VALUES (?,?,?,?,?,?)",
                (token, record.seq, record.timestamp, record.category,
                 record.event_id, dumps_detail(record.detail)))
        elif isinstance(record, FocusRecord):
            self._conn.execute(
                "INSERT OR IGNORE INTO focus VALUES (?,?,?,?,?)",
                (token, record.seq, record.timestamp, record.file, record.kind))
        elif isinstance(record, ToolWindowRecord):
            self._conn.execute(
                "INSERT OR IGNORE INTO toolwindow VALUES (?,?,?,?,?)",
                (token, record.seq, record.timestamp, record.window_id, record.kind))
        elif isinstance(record, SurveyResponseRecord):
            self._conn.execute(
                "INSERT OR IGNORE INTO survey VALUES (?,?,?,?,?)",
                (token, record.seq, record.timestamp, record.survey_id,
                 dumps_detail(record.answers)))

    # -- reads ---------------------------------------------------------------

    def records_for_session(self, token: str) -> list[TrackedRecord]:
        """All applied records of one session, in seq order."""
        if self.session(token) is None:
            raise UnknownSession(token)
        records: list[TrackedRecord] = []
        for row in self._conn.execute(
                "SELECT seq, timestamp, file, mode, digest, content FROM snapshots"
                " WHERE session_token=?", (token,)):
            records.append(SnapshotRecord(seq=row[0], timestamp=row[1], file=row[2],
                                          mode=row[3], digest=row[4], content=row[5]))
        for row in self._conn.execute(
                "SELECT seq, timestamp, category, event_id, detail_json FROM activity"
                " WHERE session_token=?", (token,)):
            records.append(ActivityRecord(seq=row[0], timestamp=row[1], category=row[2],
                                          event_id=row[3], detail=json.loads(row[4])))
        for row in self._conn.execute(
                "SELECT seq, timestamp, file, kind FROM focus WHERE session_token=?", (token,)):
            records.append(FocusRecord(seq=row[0], timestamp=row[1], file=row[2], kind=row[3]))
        for row in self._conn.execute(
                "SELECT seq, timestamp, window_id, kind FROM toolwindow WHERE session_token=?",
                (token,)):
            records.append(ToolWindowRecord(seq=row[0], timestamp=row[1], window_id=row[2],
                                            kind=row[3]))
        for row in self._conn.execute(
                "SELECT seq, timestamp, survey_id, answers_json FROM survey WHERE session_token=?",
                (token,)):
            records.append(SurveyResponseRecord(seq=row[0], timestamp=row[1], survey_id=row[2],
                                                answers=json.loads(row[3])))
        records.sort(key=lambda r: r.seq)
        return records

    def records_for_study(self, research_id: str) -> list[tuple[str, TrackedRecord]]:
        """(participant_id, record) pairs for every session of a study."""
        if not self.study_exists(research_id):
            raise UnknownResearch(research_id)
        pairs: list[tuple[str, TrackedRecord]] = []
        for session in self.sessions_for_study(research_id):
            for record in self.records_for_session(session["token"]):
                pairs.append((session["participant_id"], record))
        return pairs

    def export_raw(self, token: str) -> list[tuple[str, bytes]]:
        """Raw batch payloads in receipt order, byte-exact."""
        if self.session(token) is None:
            raise UnknownSession(token)
        rows = self._conn.execute(
            "SELECT batch_id, payload FROM raw_batches WHERE session_token=? ORDER BY id",
            (token,)).fetchall()
        return [(r[0], r[1]) for r in rows]

    # -- maintenance ----------------------------------------------------------

    def table_counts(self) -> dict:
        return {table: self._conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]
                for table in ALL_TABLES}

    def backup(self, destination: Path | str) -> dict:
        """Consistent point-in-time copy; returns the row-count manifest."""
        destination = Path(destination)
        destination.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            target = sqlite3.connect(destination)
            try:
                self._conn.backup(target)
            finally:
                target.close()
            return self.table_counts()
