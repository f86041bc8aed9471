"""Per-participant state machine over a study scenario.

Consent is an implicit step zero: no task action is available until the
participant explicitly grants consent, and declining terminates the
session. Step progression is deterministic; a Group step completes when
all members are done (any order), a Choice step when its single picked
alternative is done.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

from .config.types import (
    Q_MULTIPLE,
    Q_OPEN,
    Q_SINGLE,
    STEP_CHOICE,
    STEP_GROUP,
    STEP_INFO,
    STEP_SURVEY,
    STEP_TASK,
    ScenarioStep,
    StudyConfig,
    SurveySpec,
)

STATE_VERSION = 1

CONSENT_PENDING = "pending"
CONSENT_GRANTED = "granted"
CONSENT_DECLINED = "declined"

A_GRANT_CONSENT = "grant-consent"
A_DECLINE_CONSENT = "decline-consent"
A_COMPLETE_TASK = "complete-task"
A_PICK_CHOICE = "pick-choice"
A_ANSWER_SURVEY = "answer-survey"
A_ACKNOWLEDGE = "acknowledge"
A_PAUSE = "pause"
A_SUBMIT = "submit"


class IllegalAction(Exception):
    def __init__(self, action: "StepAction", cursor: int):
        self.action = action
        self.cursor = cursor
        super().__init__(f"action {action.kind}({action.task_id or action.answers}) illegal at step {cursor}")


class MissingRequiredAnswer(Exception):
    def __init__(self, question_id: str):
        self.question_id = question_id
        super().__init__(f"required question {question_id} not answered")


class CorruptState(Exception):
    pass


@dataclass(frozen=True)
class StepAction:
    kind: str
    task_id: str = ""
    answers: Optional[dict] = None

    def to_doc(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.task_id:
            doc["task_id"] = self.task_id
        if self.answers is not None:
            doc["answers"] = self.answers
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "StepAction":
        return StepAction(
            kind=doc["kind"],
            task_id=doc.get("task_id", ""),
            answers=doc.get("answers"),
        )


@dataclass(frozen=True)
class ScenarioState:
    consent: str = CONSENT_PENDING
    consent_timestamp: Optional[int] = None
    cursor: int = 0
    group_done: frozenset = frozenset()
    choice_taken: Optional[str] = None
    survey_answers: dict = field(default_factory=dict)  # survey_id -> answers

    def finished(self, config: StudyConfig) -> bool:
        return self.consent == CONSENT_GRANTED and self.cursor >= len(config.scenario.steps)


def question_id(index: int) -> str:
    return f"q{index}"


def init(config: StudyConfig) -> ScenarioState:
    """Fresh state: consent pending, cursor at step zero, nothing tracked."""
    return ScenarioState()


def _current_step(state: ScenarioState, config: StudyConfig) -> Optional[ScenarioStep]:
    steps = config.scenario.steps
    if state.cursor >= len(steps):
        return None
    return steps[state.cursor]


def available_actions(state: ScenarioState, config: StudyConfig) -> list[StepAction]:
    if state.consent == CONSENT_PENDING:
        return [StepAction(A_GRANT_CONSENT), StepAction(A_DECLINE_CONSENT)]
    if state.consent == CONSENT_DECLINED:
        return []

    actions: list[StepAction] = []
    step = _current_step(state, config)
    if step is not None:
        if step.kind == STEP_TASK:
            actions.append(StepAction(A_COMPLETE_TASK, task_id=step.task_ids[0]))
        elif step.kind == STEP_GROUP:
            for task_id in step.task_ids:
                if task_id not in state.group_done:
                    actions.append(StepAction(A_COMPLETE_TASK, task_id=task_id))
        elif step.kind == STEP_CHOICE:
            if state.choice_taken is None:
                for task_id in step.task_ids:
                    actions.append(StepAction(A_PICK_CHOICE, task_id=task_id))
            else:
                actions.append(StepAction(A_COMPLETE_TASK, task_id=state.choice_taken))
        elif step.kind == STEP_SURVEY:
            actions.append(StepAction(A_ANSWER_SURVEY))
        elif step.kind == STEP_INFO:
            actions.append(StepAction(A_ACKNOWLEDGE))
    actions.append(StepAction(A_PAUSE))
    actions.append(StepAction(A_SUBMIT))
    return actions


def _validate_survey_answers(survey: SurveySpec, answers: dict) -> dict:
    """Check answers against question kinds and required flags.

    Returns the normalized answers map keyed by question id.
    """
    normalized: dict[str, object] = {}
    for i, question in enumerate(survey.questions):
        qid = question_id(i)
        if qid not in answers or answers[qid] in (None, "", []):
            if question.required:
                raise MissingRequiredAnswer(qid)
            continue
        value = answers[qid]
        if question.kind == Q_SINGLE:
            if not isinstance(value, str) or value not in question.options:
                raise ValueError(f"{qid}: answer must be one of the options")
        elif question.kind == Q_MULTIPLE:
            if (not isinstance(value, list)
                    or not all(isinstance(v, str) and v in question.options for v in value)):
                raise ValueError(f"{qid}: answer must be a list of options")
        elif question.kind == Q_OPEN:
            if not isinstance(value, str):
                raise ValueError(f"{qid}: answer must be text")
        normalized[qid] = value
    unknown = set(answers) - {question_id(i) for i in range(len(survey.questions))}
    if unknown:
        raise ValueError(f"answers for unknown questions: {sorted(unknown)}")
    return normalized


def advance(state: ScenarioState, action: StepAction, config: StudyConfig,
            now_ms: Optional[int] = None) -> ScenarioState:
    """Apply one action and return the successor state.

    Raises IllegalAction if the action is not currently legal and
    MissingRequiredAnswer when a survey submission omits a required
    question.
    """
    if action.kind == A_GRANT_CONSENT:
        if state.consent != CONSENT_PENDING:
            raise IllegalAction(action, state.cursor)
        ts = now_ms if now_ms is not None else int(time.time() * 1000)
        return replace(state, consent=CONSENT_GRANTED, consent_timestamp=ts)
    if action.kind == A_DECLINE_CONSENT:
        if state.consent != CONSENT_PENDING:
            raise IllegalAction(action, state.cursor)
        return replace(state, consent=CONSENT_DECLINED)
    if state.consent != CONSENT_GRANTED:
        raise IllegalAction(action, state.cursor)

    if action.kind in (A_PAUSE, A_SUBMIT):
        return state

    step = _current_step(state, config)
    if step is None:
        raise IllegalAction(action, state.cursor)

    if action.kind == A_COMPLETE_TASK:
        if step.kind == STEP_TASK and action.task_id == step.task_ids[0]:
            return _step_forward(state)
        if step.kind == STEP_GROUP and action.task_id in step.task_ids \
                and action.task_id not in state.group_done:
            done = state.group_done | {action.task_id}
            if done == frozenset(step.task_ids):
                return _step_forward(state)
            return replace(state, group_done=done)
        if step.kind == STEP_CHOICE and state.choice_taken == action.task_id:
            return _step_forward(state)
        raise IllegalAction(action, state.cursor)

    if action.kind == A_PICK_CHOICE:
        if step.kind != STEP_CHOICE or state.choice_taken is not None \
                or action.task_id not in step.task_ids:
            raise IllegalAction(action, state.cursor)
        return replace(state, choice_taken=action.task_id)

    if action.kind == A_ANSWER_SURVEY:
        if step.kind != STEP_SURVEY:
            raise IllegalAction(action, state.cursor)
        survey = config.surveys[step.survey_id]
        try:
            normalized = _validate_survey_answers(survey, action.answers or {})
        except ValueError:
            raise IllegalAction(action, state.cursor) from None
        answers = dict(state.survey_answers)
        answers[step.survey_id] = normalized
        return _step_forward(replace(state, survey_answers=answers))

    if action.kind == A_ACKNOWLEDGE:
        if step.kind != STEP_INFO:
            raise IllegalAction(action, state.cursor)
        return _step_forward(state)

    raise IllegalAction(action, state.cursor)


def _step_forward(state: ScenarioState) -> ScenarioState:
    return replace(
        state,
        cursor=state.cursor + 1,
        group_done=frozenset(),
        choice_taken=None,
    )


def analytic_path_count(config: StudyConfig) -> int:
    """Distinct task-order paths: k! per Group of size k, k per Choice."""
    count = 1
    for step in config.scenario.steps:
        if step.kind == STEP_GROUP:
            count *= math.factorial(len(step.task_ids))
        elif step.kind == STEP_CHOICE:
            count *= len(step.task_ids)
    return count


# ---------------------------------------------------------------------------
# Persistence


def save_state(state: ScenarioState) -> bytes:
    doc = {
        "version": STATE_VERSION,
        "consent": state.consent,
        "consent_timestamp": state.consent_timestamp,
        "cursor": state.cursor,
        "group_done": sorted(state.group_done),
        "choice_taken": state.choice_taken,
        "survey_answers": state.survey_answers,
    }
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def restore_state(data: bytes) -> ScenarioState:
    try:
        doc = json.loads(data.decode("utf-8"))
        if not isinstance(doc, dict) or doc.get("version") != STATE_VERSION:
            raise CorruptState("unsupported state version")
        consent = doc["consent"]
        if consent not in (CONSENT_PENDING, CONSENT_GRANTED, CONSENT_DECLINED):
            raise CorruptState(f"bad consent value {consent!r}")
        cursor = doc["cursor"]
        if not isinstance(cursor, int) or cursor < 0:
            raise CorruptState("bad cursor")
        return ScenarioState(
            consent=consent,
            consent_timestamp=doc.get("consent_timestamp"),
            cursor=cursor,
            group_done=frozenset(doc["group_done"]),
            choice_taken=doc.get("choice_taken"),
            survey_answers=doc.get("survey_answers") or {},
        )
    except CorruptState:
        raise
    except Exception as exc:
        raise CorruptState(str(exc)) from exc
