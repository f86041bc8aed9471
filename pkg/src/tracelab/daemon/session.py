"""The study client's session orchestrator.

Binds scenario state, capture, the journal, and sync for one participant
workspace. Nothing is journaled or transmitted before consent is granted;
declining consent removes the session directory entirely.
"""
from __future__ import annotations

import json
import logging
import os
import secrets
import shutil
import time
from pathlib import Path
from typing import Callable, Optional

from .. import scenario as sm
from ..capture import ActivityFilter, Accepted, FileWatcher, Filtered, SnapshotEngine
from ..config.types import STEP_SURVEY, StudyConfig
from ..config.resolve import resolve_task_files
from ..journal import Journal
from ..records import (
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
)
from ..sync import FlushReport, HttpxTransport, SyncClient, Transport, read_attachments

logger = logging.getLogger(__name__)

STATE_DIR = ".tracelab"
STATE_FILE = "state.json"
JOURNAL_DIR = "journal"


class NotConsented(Exception):
    pass


def _wall_clock_ms() -> int:
    return int(time.time() * 1000)


class DaemonSession:
    """One participant's live session over a workspace."""

    def __init__(self, config: StudyConfig, workspace: Path | str,
                 server_url: str = "", transport: Optional[Transport] = None,
                 clock: Callable[[], int] = _wall_clock_ms,
                 start_watcher: bool = True):
        self.config = config
        self.workspace = Path(workspace)
        self.server_url = server_url or config.metadata.server_url
        self._transport = transport
        self.clock = clock
        self.start_watcher = start_watcher

        self.state_dir = self.workspace / STATE_DIR
        self.state_path = self.state_dir / STATE_FILE
        self.journal_dir = self.state_dir / JOURNAL_DIR

        self.journal: Optional[Journal] = None
        self.watcher: Optional[FileWatcher] = None
        self.activity_filter = ActivityFilter(config.activity_policy)
        self.session_token: str = ""
        self.client_nonce: str = ""
        self.declined = False

        self.state = self._load_or_init()
        if self.state.consent == sm.CONSENT_GRANTED:
            self._enable_tracking()

    # -- persistence -----------------------------------------------------

    def _load_or_init(self) -> sm.ScenarioState:
        if self.state_path.exists():
            doc = json.loads(self.state_path.read_text(encoding="utf-8"))
            self.client_nonce = doc.get("sync", {}).get("client_nonce", "")
            self.session_token = doc.get("sync", {}).get("session_token", "")
            return sm.restore_state(json.dumps(doc["scenario"]).encode("utf-8"))
        return sm.init(self.config)

    def _persist(self) -> None:
        self.state_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "scenario": json.loads(sm.save_state(self.state).decode("utf-8")),
            "sync": {"client_nonce": self.client_nonce, "session_token": self.session_token},
        }
        tmp = self.state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.state_path)

    # -- tracking --------------------------------------------------------

    def _enable_tracking(self) -> None:
        if self.journal is not None:
            return
        if not self.client_nonce:
            self.client_nonce = secrets.token_hex(8)
        for task in self.config.tasks.values():
            resolve_task_files(task, self.workspace)
        self.journal = Journal(self.journal_dir)
        engine = SnapshotEngine(
            files=self.config.tracked_files(),
            policy=self.config.tracking_policy,
            sink=self._snapshot_sink,
            start_ms=self.clock(),
        )
        self.watcher = FileWatcher(self.workspace, engine, clock=self.clock)
        if self.start_watcher:
            self.watcher.start()

    def _snapshot_sink(self, file: str, content: str, digest: str, mode: str,
                       now_ms: int) -> None:
        assert self.journal is not None
        self.journal.append(SnapshotRecord(
            seq=0, timestamp=now_ms, file=file, content=content, digest=digest, mode=mode))

    # -- scenario --------------------------------------------------------

    def scenario_view(self) -> dict:
        steps = self.config.scenario.steps
        step_payload: Optional[dict] = None
        if self.state.consent == sm.CONSENT_GRANTED and self.state.cursor < len(steps):
            step = steps[self.state.cursor]
            step_payload = {"kind": step.kind, "index": self.state.cursor}
            if step.kind == "task":
                task = self.config.tasks[step.task_ids[0]]
                step_payload["task"] = {
                    "id": task.id,
                    "description": task.description,
                    "files": [f.relative_path for f in task.files],
                }
            elif step.kind in ("group", "choice"):
                step_payload["tasks"] = [
                    {
                        "id": tid,
                        "description": self.config.tasks[tid].description,
                        "done": tid in self.state.group_done,
                    }
                    for tid in step.task_ids
                ]
                step_payload["choice_taken"] = self.state.choice_taken
            elif step.kind == "survey":
                survey = self.config.surveys[step.survey_id]
                step_payload["survey"] = {
                    "id": survey.id,
                    "questions": [
                        {
                            "id": sm.question_id(i),
                            "kind": q.kind,
                            "text": q.text,
                            "required": q.required,
                            "options": list(q.options),
                        }
                        for i, q in enumerate(survey.questions)
                    ],
                }
            elif step.kind == "info":
                step_payload["text"] = step.text
        return {
            "consent": self.state.consent,
            "cursor": self.state.cursor,
            "finished": self.state.finished(self.config),
            "total_steps": len(steps),
            "step": step_payload,
            "research": {
                "title": self.config.metadata.title,
                "description": self.config.metadata.description,
                "consent_url": self.config.metadata.consent_url,
            },
            "available_actions": [a.to_doc() for a in
                                  sm.available_actions(self.state, self.config)],
        }

    def apply_action(self, action_doc: dict) -> dict:
        action = sm.StepAction.from_doc(action_doc)
        now = self.clock()
        previous = self.state
        self.state = sm.advance(previous, action, self.config, now_ms=now)

        if action.kind == sm.A_GRANT_CONSENT:
            self._enable_tracking()
        elif action.kind == sm.A_DECLINE_CONSENT:
            self.declined = True
            self.shutdown(flush=False)
            if self.state_dir.exists():
                shutil.rmtree(self.state_dir)
            return self.scenario_view()
        elif action.kind == sm.A_ANSWER_SURVEY:
            step = self.config.scenario.steps[previous.cursor]
            if step.kind == STEP_SURVEY and self.journal is not None:
                self.journal.append(SurveyResponseRecord(
                    seq=0, timestamp=now, survey_id=step.survey_id,
                    answers=self.state.survey_answers.get(step.survey_id, {})))
        self._persist()

        if action.kind in (sm.A_PAUSE, sm.A_SUBMIT):
            try:
                self.flush()
            except Exception as exc:  # records stay pending; never fatal
                logger.warning("flush failed, will retry later: %s", exc)
        return self.scenario_view()

    # -- events ------------------------------------------------------------

    def submit_event(self, doc: dict):
        """Record an adapter-submitted event. Returns (seq, None) when
        accepted or (None, reason) when filtered."""
        if self.state.consent != sm.CONSENT_GRANTED or self.journal is None:
            raise NotConsented("tracking is disabled until consent is granted")
        category = doc.get("category")
        timestamp = int(doc.get("timestamp") or self.clock())
        if category == "activity":
            sub = doc.get("activity_category", "")
            event_id = str(doc.get("event_id", ""))
            if not event_id:
                return None, "event_id must be non-empty"
            verdict = self.activity_filter.check(sub, event_id, timestamp)
            if isinstance(verdict, Filtered):
                return None, verdict.reason
            detail = doc.get("detail") or {}
            seq = self.journal.append(ActivityRecord(
                seq=0, timestamp=timestamp, category=sub, event_id=event_id, detail=detail))
            return seq, None
        if category == "focus":
            record = FocusRecord(seq=0, timestamp=timestamp,
                                 file=str(doc.get("file", "")), kind=doc.get("kind", ""))
            if record.kind not in ("open", "focus", "unfocus", "close"):
                return None, f"unknown focus kind {record.kind!r}"
            return self.journal.append(record), None
        if category == "toolwindow":
            kind = doc.get("kind", "")
            if kind not in ("opened", "closed"):
                return None, f"unknown tool window kind {kind!r}"
            return self.journal.append(ToolWindowRecord(
                seq=0, timestamp=timestamp, window_id=str(doc.get("window_id", "")),
                kind=kind)), None
        return None, f"unknown record category {category!r}"

    # -- sync ----------------------------------------------------------------

    def _sync_client(self) -> Optional[SyncClient]:
        if self._transport is None:
            if not self.server_url:
                return None
            self._transport = HttpxTransport(self.server_url)
        return SyncClient(self._transport)

    def flush(self) -> Optional[FlushReport]:
        """Register (if needed) and upload all pending records."""
        client = self._sync_client()
        if client is None or self.journal is None:
            return None
        if not self.session_token:
            self.session_token = client.register_session(
                research_id=self.config.metadata.title or "untitled-study",
                consent_timestamp=self.state.consent_timestamp,
                client_nonce=self.client_nonce,
            )
            self._persist()
        attachments = read_attachments(
            self.workspace, list(self.config.metadata.third_party_files))
        return client.flush(self.journal, self.session_token, attachments=attachments)

    def shutdown(self, flush: bool = True) -> None:
        if self.watcher is not None:
            self.watcher.stop()
            self.watcher = None
        if flush and self.journal is not None:
            try:
                self.flush()
            except Exception as exc:
                logger.warning("final flush failed: %s", exc)
        if self.journal is not None:
            self.journal.close()
            self.journal = None
