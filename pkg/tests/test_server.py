"""Ingestion server: idempotency, categorization, quarantine, auth, backup."""
import gzip
import io
import json
import zipfile

import pytest
from fastapi.testclient import TestClient

from tracelab.records import (
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
    content_digest,
    to_wire,
)
from tracelab.server.app import create_app
from tracelab.server.store import Store, UnknownSession


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "server.db")
    yield s
    s.close()


@pytest.fixture
def client(store):
    with TestClient(create_app(store, admin_token="adm")) as c:
        yield c


def register(client, research_id="study-1", nonce="n1"):
    response = client.post("/api/v1/sessions", json={
        "research_id": research_id,
        "consent": {"granted_at": 1_700_000_000_000},
        "client_nonce": nonce,
    })
    assert response.status_code == 200
    return response.json()["session_token"]


def post_batch(client, token, batch_id, records, attachments=(), gzipped=False):
    doc = {"batch_id": batch_id, "records": [to_wire(r) for r in records],
           "attachments": list(attachments)}
    body = json.dumps(doc).encode()
    headers = {"Authorization": f"Bearer {token}",
               "Content-Type": "application/json"}
    if gzipped:
        body = gzip.compress(body)
        headers["Content-Encoding"] = "gzip"
    return client.post(f"/api/v1/sessions/{token}/batches", content=body,
                       headers=headers)


def sample_records():
    snap = SnapshotRecord(seq=1, timestamp=10, file="src/a.kt", mode="full",
                          digest=content_digest("fun main() {}"),
                          content="fun main() {}")
    return [
        snap,
        ActivityRecord(seq=2, timestamp=20, category="ui", event_id="Editor.Up", detail={}),
        FocusRecord(seq=3, timestamp=30, file="src/a.kt", kind="focus"),
        ToolWindowRecord(seq=4, timestamp=40, window_id="Run", kind="opened"),
        SurveyResponseRecord(seq=5, timestamp=50, survey_id="final",
                             answers={"q0": "easy"}),
    ]


def test_registration_is_idempotent(client):
    first = register(client, nonce="same")
    second = register(client, nonce="same")
    assert first == second
    other = register(client, nonce="different")
    assert other != first


def test_mixed_batch_lands_in_per_category_tables(client, store):
    token = register(client)
    response = post_batch(client, token, "b1", sample_records())
    data = response.json()
    assert data == {"acked_upto_seq": 5, "duplicate": False, "quarantined": 0}
    stored = store.records_for_session(token)
    assert stored == sample_records()
    counts = store.table_counts()
    for table in ("snapshots", "activity", "focus", "toolwindow", "survey"):
        assert counts[table] == 1


def test_duplicate_batch_replays_original_ack(client, store):
    token = register(client)
    records = sample_records()
    first = post_batch(client, token, "b1", records).json()
    second = post_batch(client, token, "b1", records).json()
    assert second["duplicate"] is True
    assert second["acked_upto_seq"] == first["acked_upto_seq"]
    assert len(store.records_for_session(token)) == len(records)


def test_resend_under_new_batch_id_does_not_duplicate_rows(client, store):
    # a client that crashed before noting the batch id resends with a fresh
    # one; the per-seq primary key still keeps the store exactly-once
    token = register(client)
    records = sample_records()
    post_batch(client, token, "b1", records)
    post_batch(client, token, "b2", records)
    assert len(store.records_for_session(token)) == len(records)


def test_malformed_records_are_quarantined_not_dropped_silently(client, store):
    token = register(client)
    good = sample_records()[:2]
    doc = {"batch_id": "b1",
           "records": [to_wire(good[0]),
                       {"category": "activity", "seq": 9, "timestamp": 1},
                       to_wire(good[1])],
           "attachments": []}
    response = client.post(f"/api/v1/sessions/{token}/batches", json=doc,
                           headers={"Authorization": f"Bearer {token}"})
    data = response.json()
    assert data["quarantined"] == 1
    # the ack covers the malformed record's seq so the client can move on
    assert data["acked_upto_seq"] == 9
    assert store.records_for_session(token) == good
    rows = store._conn.execute("SELECT raw_json, error FROM quarantine").fetchall()
    assert len(rows) == 1 and rows[0][1]


def test_raw_payload_is_preserved_byte_exact(client, store):
    token = register(client)
    post_batch(client, token, "b1", sample_records(), gzipped=True)
    blobs = store.export_raw(token)
    assert len(blobs) == 1
    batch_id, payload = blobs[0]
    assert batch_id == "b1"
    # the stored payload is the decompressed body, byte for byte
    doc = {"batch_id": "b1", "records": [to_wire(r) for r in sample_records()],
           "attachments": []}
    assert payload == json.dumps(doc).encode()


def test_export_zip_lists_batches_in_receipt_order(client):
    token = register(client)
    post_batch(client, token, "first", sample_records()[:2])
    post_batch(client, token, "second", sample_records()[2:])
    response = client.get(f"/api/v1/sessions/{token}/export",
                          headers={"Authorization": f"Bearer {token}"})
    assert response.status_code == 200
    archive = zipfile.ZipFile(io.BytesIO(response.content))
    names = archive.namelist()
    assert names == ["000000-first.json", "000001-second.json"]


def test_bearer_auth_isolates_sessions(client):
    token_a = register(client, nonce="a")
    token_b = register(client, nonce="b")
    doc = {"batch_id": "b1", "records": [], "attachments": []}
    response = client.post(f"/api/v1/sessions/{token_a}/batches", json=doc,
                           headers={"Authorization": f"Bearer {token_b}"})
    assert response.status_code == 401
    response = client.get(f"/api/v1/sessions/{token_a}/export",
                          headers={"Authorization": f"Bearer {token_b}"})
    assert response.status_code == 401


def test_unknown_session_and_unknown_study(client):
    doc = {"batch_id": "b1", "records": [], "attachments": []}
    response = client.post("/api/v1/sessions/ghost/batches", json=doc,
                           headers={"Authorization": "Bearer ghost"})
    assert response.status_code == 401
    assert client.get("/api/v1/studies/ghost/summary").status_code == 404


def test_batch_body_validation(client):
    token = register(client)
    headers = {"Authorization": f"Bearer {token}"}
    response = client.post(f"/api/v1/sessions/{token}/batches",
                           content=b"not json", headers=headers)
    assert response.status_code == 400
    response = client.post(f"/api/v1/sessions/{token}/batches",
                           json={"records": []}, headers=headers)
    assert response.status_code == 422
    response = client.post(
        f"/api/v1/sessions/{token}/batches", content=b"\x1f\x8bgarbage",
        headers={**headers, "Content-Encoding": "gzip"})
    assert response.status_code == 400


def test_study_summary_over_two_sessions(client):
    token_a = register(client, nonce="a")
    token_b = register(client, nonce="b")
    post_batch(client, token_a, "b1", sample_records())
    post_batch(client, token_b, "b1", sample_records())
    data = client.get("/api/v1/studies/study-1/summary").json()
    assert data["participants"] == 2
    assert data["snapshots"] == 2
    assert data["activities"] == 2
    assert data["events_by_category"] == {"ui": 2}


def test_backup_requires_admin_token_and_copies_everything(client, store, tmp_path):
    token = register(client)
    post_batch(client, token, "b1", sample_records())
    destination = str(tmp_path / "backup.db")
    body = {"destination": destination}
    response = client.post("/api/v1/admin/backup", json=body,
                           headers={"Authorization": "Bearer wrong"})
    assert response.status_code == 401
    response = client.post("/api/v1/admin/backup", json=body,
                           headers={"Authorization": "Bearer adm"})
    assert response.status_code == 200
    assert response.json()["manifest"] == store.table_counts()

    restored = Store(destination)
    try:
        assert restored.records_for_session(token) == store.records_for_session(token)
        assert restored.export_raw(token) == store.export_raw(token)
        assert restored.table_counts() == store.table_counts()
    finally:
        restored.close()


def test_consent_is_stored_apart_from_records(store):
    token = store.register_session("study-1", 1_700_000_000_000, "n1")
    # consent lives in its own table keyed by pseudonymous participant id,
    # not by the session token used on the wire
    participant = store.session(token)["participant_id"]
    row = store._conn.execute(
        "SELECT granted_at FROM consent WHERE participant_id=?", (participant,)).fetchone()
    assert row[0] == 1_700_000_000_000


def test_store_rejects_reads_for_unknown_token(store):
    with pytest.raises(UnknownSession):
        store.records_for_session("missing")
