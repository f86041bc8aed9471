"""Loopback HTTP API the editor adapters and the student UI talk to."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .. import scenario as sm
from .session import DaemonSession, NotConsented

logger = logging.getLogger(__name__)


class ActionRequest(BaseModel):
    kind: str
    task_id: str = ""
    answers: Optional[dict] = None


class SurveyRequest(BaseModel):
    answers: dict


def create_daemon_app(session: DaemonSession, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="tracelab study client")
    app.state.session = session

    @app.get("/v1/scenario")
    def get_scenario() -> dict:
        return session.scenario_view()

    @app.post("/v1/scenario/advance")
    def advance(body: ActionRequest) -> dict:
        try:
            return session.apply_action(body.model_dump(exclude_none=True))
        except sm.MissingRequiredAnswer as exc:
            raise HTTPException(status_code=422, detail={
                "error": "missing-required-answer", "question_id": exc.question_id})
        except sm.IllegalAction as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/v1/survey/{survey_id}")
    def answer_survey(survey_id: str, body: SurveyRequest) -> dict:
        steps = session.config.scenario.steps
        cursor = session.state.cursor
        if cursor >= len(steps) or steps[cursor].kind != "survey" \
                or steps[cursor].survey_id != survey_id:
            raise HTTPException(status_code=409, detail=f"survey {survey_id} is not the current step")
        try:
            return session.apply_action(
                {"kind": sm.A_ANSWER_SURVEY, "answers": body.answers})
        except sm.MissingRequiredAnswer as exc:
            raise HTTPException(status_code=422, detail={
                "error": "missing-required-answer", "question_id": exc.question_id})
        except sm.IllegalAction as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/v1/events")
    def submit_event(body: dict) -> JSONResponse:
        try:
            seq, reason = session.submit_event(body)
        except NotConsented as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if reason is not None:
            return JSONResponse(status_code=422, content={"reason": reason})
        return JSONResponse(status_code=202, content={"seq": seq})

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
