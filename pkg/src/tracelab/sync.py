"""Client side of the wire protocol: session registration and batch upload.

Delivery is at-least-once: a batch keeps its batch_id across retries, the
server dedupes, and the journal watermark only advances after a durable
server ack. A failed flush leaves every pending record in the journal.
"""
from __future__ import annotations

import base64
import gzip
import json
import logging
import random
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol

from .journal import Journal
from .records import TrackedRecord, to_wire

logger = logging.getLogger(__name__)

MAX_BATCH_RECORDS = 5000
MAX_BATCH_BYTES = 5 * 1024 * 1024

BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0
BACKOFF_CAP_S = 60.0


class ConsentMissing(Exception):
    pass


class ServerUnreachable(Exception):
    pass


class Rejected(Exception):
    def __init__(self, batch_id: str, reason: str):
        self.batch_id = batch_id
        self.reason = reason
        super().__init__(f"batch {batch_id} rejected: {reason}")


class Transport(Protocol):
    """POSTs a JSON body; raises ConnectionError on network failure."""

    def post(self, path: str, body: bytes, headers: dict) -> tuple[int, dict]: ...


class HttpxTransport:
    def __init__(self, base_url: str, timeout: float = 30.0):
        import httpx

        self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def post(self, path: str, body: bytes, headers: dict) -> tuple[int, dict]:
        import httpx

        try:
            response = self._client.post(path, content=body, headers=headers)
        except httpx.HTTPError as exc:
            raise ConnectionError(str(exc)) from exc
        try:
            doc = response.json()
        except ValueError:
            doc = {}
        return response.status_code, doc


@dataclass
class FlushReport:
    sent: int = 0
    acked: int = 0
    duplicates: int = 0


@dataclass(frozen=True)
class Attachment:
    path: str
    data: bytes


def chunk_records(records: list[TrackedRecord]) -> list[list[TrackedRecord]]:
    """Split pending records into batches of at most MAX_BATCH_RECORDS
    records or MAX_BATCH_BYTES of serialized payload."""
    batches: list[list[TrackedRecord]] = []
    current: list[TrackedRecord] = []
    current_bytes = 0
    for record in records:
        size = len(json.dumps(to_wire(record)).encode("utf-8"))
        if current and (len(current) >= MAX_BATCH_RECORDS
                        or current_bytes + size > MAX_BATCH_BYTES):
            batches.append(current)
            current = []
            current_bytes = 0
        current.append(record)
        current_bytes += size
    if current:
        batches.append(current)
    return batches


class SyncClient:
    """Uploads journal contents to an ingestion server.

    `sleep` and `rng` are injectable so tests can run the retry schedule
    under a scripted clock.
    """

    def __init__(self, transport: Transport,
                 sleep: Callable[[float], None] = time.sleep,
                 rng: Optional[random.Random] = None,
                 max_attempts: int = 8):
        self.transport = transport
        self.sleep = sleep
        self.rng = rng or random.Random()
        self.max_attempts = max_attempts

    # -- low level -------------------------------------------------------

    def _post_json(self, path: str, doc: dict, token: str = "") -> dict:
        body = gzip.compress(json.dumps(doc).encode("utf-8"))
        headers = {"Content-Type": "application/json", "Content-Encoding": "gzip"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        delay = BACKOFF_BASE_S
        last_error: Optional[str] = None
        for attempt in range(self.max_attempts):
            if attempt:
                # full jitter on the capped exponential schedule
                self.sleep(self.rng.uniform(0, min(delay, BACKOFF_CAP_S)))
                delay *= BACKOFF_FACTOR
            try:
                status, response = self.transport.post(path, body, headers)
            except ConnectionError as exc:
                last_error = str(exc)
                logger.warning("post %s failed (attempt %d): %s", path, attempt + 1, exc)
                continue
            if status >= 500:
                last_error = f"server error {status}"
                continue
            if status >= 400:
                raise Rejected(doc.get("batch_id", ""), response.get("detail", f"status {status}"))
            return response
        raise ServerUnreachable(last_error or "no attempts made")

    # -- protocol ----------------------------------------------------------

    def register_session(self, research_id: str, consent_timestamp: Optional[int],
                         client_nonce: str) -> str:
        """Exchange a consent proof for an opaque session token.

        Idempotent on (research_id, client_nonce): re-registration returns
        the same token.
        """
        if consent_timestamp is None:
            raise ConsentMissing("consent has not been granted")
        response = self._post_json("/api/v1/sessions", {
            "research_id": research_id,
            "consent": {"granted_at": consent_timestamp},
            "client_nonce": client_nonce,
        })
        return response["session_token"]

    def flush(self, journal: Journal, token: str,
              attachments: Optional[list[Attachment]] = None) -> FlushReport:
        """Upload all pending records (plus attachments) in order.

        Raises ServerUnreachable when delivery fails; the journal is left
        intact in that case, nothing is ever dropped.
        """
        report = FlushReport()
        pending = journal.read_pending()
        batches = chunk_records(pending)
        if not batches and attachments:
            batches = [[]]
        for i, batch in enumerate(batches):
            batch_id = uuid.uuid4().hex
            doc: dict = {
                "batch_id": batch_id,
                "records": [to_wire(r) for r in batch],
                "attachments": [],
            }
            if i == 0 and attachments:
                doc["attachments"] = [
                    {"path": a.path, "content_b64": base64.b64encode(a.data).decode("ascii")}
                    for a in attachments
                ]
            response = self._post_json(f"/api/v1/sessions/{token}/batches", doc, token=token)
            acked_upto = int(response.get("acked_upto_seq", 0))
            if response.get("duplicate"):
                report.duplicates += 1
            report.sent += len(batch)
            if batch:
                journal.mark_flushed(min(acked_upto, journal.max_seq))
                report.acked += len(batch)
        return report


def read_attachments(workspace_root: Path | str, relative_paths: list[str]) -> list[Attachment]:
    """Load third-party files for upload; missing files are skipped."""
    root = Path(workspace_root)
    attachments = []
    for rel in relative_paths:
        path = root / rel
        if path.is_file():
            attachments.append(Attachment(path=rel, data=path.read_bytes()))
    return attachments
