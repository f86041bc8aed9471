"""Snapshot capture: trigger-policy debounce engine and a polling file watcher.

The engine is pure with respect to time: callers feed it change
observations and clock ticks (milliseconds), which makes the debounce
behavior testable under a scripted clock. The watcher wraps the engine
with a polling thread over real files; polling is also the documented
fallback when native change notification is unavailable.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from ..config.types import (
    CONTENT_SIGNATURES,
    TRIGGER_EVERY_CHANGE,
    TRIGGER_INTERVAL,
    TRIGGER_ON_SAVE,
    TrackingPolicy,
)
from ..records import MODE_FULL, MODE_SIGNATURES, content_digest
from .signatures import extract_signatures

logger = logging.getLogger(__name__)

# sink(file, content, digest, mode, now_ms) — the recorder turns this
# into a SnapshotRecord with an assigned seq.
SnapshotSink = Callable[[str, str, str, str, int], None]


@dataclass
class _FileState:
    last_emitted_digest: Optional[str] = None
    pending_content: Optional[str] = None
    pending_due: int = 0


def language_hint_for(path: str) -> str:
    suffix = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    return {"kt": "kotlin", "kts": "kotlin", "java": "java", "py": "python"}.get(suffix, "generic")


class SnapshotEngine:
    """Applies a TrackingPolicy to a stream of observed file contents.

    Only the configured files are tracked; observations for anything else
    are dropped. Consecutive identical contents (by digest) never produce
    a second snapshot.
    """

    def __init__(self, files: list[str], policy: TrackingPolicy, sink: SnapshotSink,
                 start_ms: int = 0):
        self.policy = policy
        self.sink = sink
        self._tracked = {f: _FileState() for f in files}
        self._last_interval_emit = start_ms

    def tracked_files(self) -> list[str]:
        return list(self._tracked)

    def observe(self, file: str, content: str, now_ms: int) -> None:
        """A change to `file` with the given full content at `now_ms`."""
        state = self._tracked.get(file)
        if state is None:
            return  # untracked: never captured
        if self.policy.trigger == TRIGGER_ON_SAVE:
            self._emit(file, state, content, now_ms)
        elif self.policy.trigger == TRIGGER_EVERY_CHANGE:
            state.pending_content = content
            state.pending_due = now_ms + self.policy.debounce_ms
            self.tick(now_ms)
        else:  # interval
            state.pending_content = content
            self.tick(now_ms)

    def tick(self, now_ms: int) -> None:
        """Advance the clock: emit any pending snapshots that are due."""
        if self.policy.trigger == TRIGGER_EVERY_CHANGE:
            for file, state in self._tracked.items():
                if state.pending_content is not None and now_ms >= state.pending_due:
                    self._emit(file, state, state.pending_content, now_ms)
                    state.pending_content = None
        elif self.policy.trigger == TRIGGER_INTERVAL:
            interval_ms = self.policy.interval_s * 1000
            if now_ms - self._last_interval_emit >= interval_ms:
                self._last_interval_emit = now_ms
                for file, state in self._tracked.items():
                    if state.pending_content is not None:
                        self._emit(file, state, state.pending_content, now_ms)
                        state.pending_content = None

    def finish(self, now_ms: int) -> None:
        """Session end: flush everything still pending."""
        for file, state in self._tracked.items():
            if state.pending_content is not None:
                self._emit(file, state, state.pending_content, now_ms)
                state.pending_content = None

    def _emit(self, file: str, state: _FileState, content: str, now_ms: int) -> None:
        digest = content_digest(content)
        if digest == state.last_emitted_digest:
            return
        state.last_emitted_digest = digest
        if self.policy.content_mode == CONTENT_SIGNATURES:
            signatures = extract_signatures(content, language_hint_for(file))
            self.sink(file, "\n".join(signatures), digest, MODE_SIGNATURES, now_ms)
        else:
            self.sink(file, content, digest, MODE_FULL, now_ms)


class FileWatcher:
    """Polls tracked files and drives a SnapshotEngine with wall time."""

    def __init__(self, workspace_root: Path, engine: SnapshotEngine,
                 clock: Callable[[], int], poll_ms: Optional[int] = None):
        self.workspace_root = Path(workspace_root)
        self.engine = engine
        self.clock = clock
        if poll_ms is None:
            poll_ms = max(engine.policy.debounce_ms, 500) \
                if engine.policy.trigger == TRIGGER_EVERY_CHANGE else 500
        self.poll_ms = max(poll_ms, 50)
        self._mtimes: dict[str, float] = {}
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def poll_once(self) -> None:
        now = self.clock()
        for rel in self.engine.tracked_files():
            path = self.workspace_root / rel
            try:
                mtime = path.stat().st_mtime
            except OSError:
                continue
            if self._mtimes.get(rel) == mtime:
                continue
            self._mtimes[rel] = mtime
            try:
                content = path.read_text(encoding="utf-8", errors="replace")
            except OSError as exc:
                logger.warning("unreadable tracked file %s: %s", rel, exc)
                continue
            self.engine.observe(rel, content, now)
        self.engine.tick(now)

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="tracelab-watcher", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.wait(self.poll_ms / 1000.0):
            try:
                self.poll_once()
            except Exception:  # keep the watcher alive across poll errors
                logger.exception("watcher poll failed")

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.poll_once()
        self.engine.finish(self.clock())
