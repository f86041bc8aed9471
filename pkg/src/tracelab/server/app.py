"""Ingestion server: session registration, batch ingest, stats, exports.

The batch endpoint reads the raw request body itself (optionally
gzip-encoded) so the stored raw payload is byte-exact, independent of
any later parsing.
"""
from __future__ import annotations

import gzip
import io
import json
import logging
import os
import zipfile
import zlib
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Request, Response
from fastapi.staticfiles import StaticFiles

from .. import stats
from .schemas import (
    BackupRequest,
    BackupResponse,
    BatchResponse,
    RegisterRequest,
    RegisterResponse,
    StudySummary,
)
from .store import Store, UnknownResearch, UnknownSession

logger = logging.getLogger(__name__)

ADMIN_TOKEN_ENV = "TRACELAB_ADMIN_TOKEN"


async def _read_json_body(request: Request) -> tuple[bytes, dict]:
    """Return (decoded payload bytes, parsed JSON)."""
    body = await request.body()
    if request.headers.get("content-encoding", "").lower() == "gzip":
        try:
            body = gzip.decompress(body)
        except (OSError, EOFError, zlib.error) as exc:
            raise HTTPException(status_code=400, detail=f"bad gzip body: {exc}") from exc
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HTTPException(status_code=400, detail=f"body is not JSON: {exc}") from exc
    return body, doc


def _check_bearer(authorization: Optional[str], token: str) -> None:
    if authorization != f"Bearer {token}":
        raise HTTPException(status_code=401, detail="invalid bearer token")


def create_app(store: Store, admin_token: Optional[str] = None,
               dashboard_dir: Optional[Path] = None) -> FastAPI:
    admin_token = admin_token or os.environ.get(ADMIN_TOKEN_ENV, "")
    app = FastAPI(title="tracelab ingestion server")
    app.state.store = store

    @app.post("/api/v1/sessions", response_model=RegisterResponse)
    async def register_session(request: Request) -> RegisterResponse:
        _, doc = await _read_json_body(request)
        try:
            parsed = RegisterRequest.model_validate(doc)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        token = store.register_session(
            parsed.research_id, parsed.consent.granted_at, parsed.client_nonce)
        return RegisterResponse(session_token=token)

    @app.post("/api/v1/sessions/{token}/batches", response_model=BatchResponse)
    async def ingest_batch(token: str, request: Request,
                           authorization: Optional[str] = Header(default=None)) -> BatchResponse:
        _check_bearer(authorization, token)
        payload, doc = await _read_json_body(request)
        if not isinstance(doc, dict) or "batch_id" not in doc:
            raise HTTPException(status_code=422, detail="batch_id is required")
        records = doc.get("records", [])
        attachments = doc.get("attachments", [])
        if not isinstance(records, list) or not isinstance(attachments, list):
            raise HTTPException(status_code=422, detail="records and attachments must be arrays")
        try:
            result = store.ingest(token, str(doc["batch_id"]), payload, records, attachments)
        except UnknownSession:
            raise HTTPException(status_code=401, detail="unknown session") from None
        return BatchResponse(**result)

    @app.get("/api/v1/studies/{research_id}/summary", response_model=StudySummary)
    def study_summary(research_id: str) -> StudySummary:
        try:
            pairs = store.records_for_study(research_id)
        except UnknownResearch:
            raise HTTPException(status_code=404, detail="unknown study") from None
        return StudySummary(**stats.study_summary(pairs))

    @app.get("/api/v1/sessions/{token}/export")
    def export_session(token: str,
                       authorization: Optional[str] = Header(default=None)) -> Response:
        _check_bearer(authorization, token)
        try:
            blobs = store.export_raw(token)
        except UnknownSession:
            raise HTTPException(status_code=401, detail="unknown session") from None
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            for index, (batch_id, payload) in enumerate(blobs):
                archive.writestr(f"{index:06d}-{batch_id}.json", payload)
        return Response(content=buffer.getvalue(), media_type="application/zip")

    @app.post("/api/v1/admin/backup", response_model=BackupResponse)
    def backup(body: BackupRequest,
               authorization: Optional[str] = Header(default=None)) -> BackupResponse:
        if not admin_token or authorization != f"Bearer {admin_token}":
            raise HTTPException(status_code=401, detail="admin token required")
        manifest = store.backup(body.destination)
        return BackupResponse(destination=body.destination, manifest=manifest)

    if dashboard_dir and Path(dashboard_dir).is_dir():
        app.mount("/dashboard", StaticFiles(directory=dashboard_dir, html=True), name="dashboard")

    return app
