"""Deterministic synthetic sessions for testing and demos.

Each simulated participant walks the configured scenario legally (consent
first, groups in a random order, one choice alternative, valid survey
answers) while emitting snapshot/activity/focus/tool-window records at
configurable category ratios. The same seed always produces byte-identical
journals.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import scenario as sm
from .config.types import (
    Q_MULTIPLE,
    Q_OPEN,
    Q_SINGLE,
    STEP_SURVEY,
    StudyConfig,
    SurveySpec,
)
from .journal import Journal
from .records import (
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
    content_digest,
)

BASE_EPOCH_MS = 1_700_000_000_000

# Per-session record counts, shaped like the case-study category ratios
# (activities > snapshots > hotkeys > run/debug).
DEFAULT_RATIOS = {
    "ui": 467,
    "action": 94,
    "hotkey": 21,
    "run_debug": 4,
    "snapshots": 127,
}

HOTKEY_POOL = ["Reformat", "Inline", "Move", "IntroduceConstant", "Undo", "Copy",
               "Paste", "Rename", "ExtractMethod", "Find"]
ACTION_POOL = ["CodeCompletion", "GotoDeclaration", "ShowIntentions", "OptimizeImports",
               "Replace", "CommentLine", "SurroundWith"]
UI_POOL = ["EditorClick", "MenuOpen", "ToolbarClick", "ScrollEditor", "TabSwitch"]
WINDOW_POOL = ["Build", "Run", "Terminal", "Problems"]

CODE_FRAGMENTS = [
    "fun main() {\n}\n",
    "fun main() {\n    println(\"hi\")\n}\n",
    "fun main() {\n    val x = 1\n    println(x)\n}\n",
    "fun main() {\n    val x = 1\n    val y = 2\n    println(x + y)\n}\n",
]


@dataclass(frozen=True)
class SimulatedSession:
    directory: Path
    client_nonce: str
    consent_timestamp: int
    actions_file: Path


def _random_answers(survey: SurveySpec, rng: random.Random) -> dict:
    answers: dict = {}
    for i, question in enumerate(survey.questions):
        if not question.required and rng.random() < 0.3:
            continue
        qid = sm.question_id(i)
        if question.kind == Q_SINGLE:
            answers[qid] = rng.choice(list(question.options))
        elif question.kind == Q_MULTIPLE:
            k = rng.randint(1, len(question.options))
            answers[qid] = sorted(rng.sample(list(question.options), k))
        elif question.kind == Q_OPEN:
            answers[qid] = rng.choice(["fine", "confusing", "loved it", "too long"])
    return answers


class _SessionClock:
    def __init__(self, start_ms: int, rng: random.Random):
        self.now = start_ms
        self.rng = rng

    def step(self) -> int:
        self.now += self.rng.randint(100, 2000)
        return self.now


def _emit_task_records(journal: Journal, task_id: str, config: StudyConfig,
                       clock: _SessionClock, rng: random.Random, budget: dict) -> None:
    """Spend one task's share of the per-category record budget."""
    task = config.tasks.get(task_id)
    files = [f.relative_path for f in task.files] if task and task.files else [f"{task_id}.kt"]
    main_file = files[0]

    journal.append(FocusRecord(seq=0, timestamp=clock.step(), file=main_file, kind="open"))
    journal.append(FocusRecord(seq=0, timestamp=clock.step(), file=main_file, kind="focus"))
    journal.append(ToolWindowRecord(seq=0, timestamp=clock.step(),
                                    window_id=rng.choice(WINDOW_POOL), kind="opened"))

    mixed: list[str] = (
        ["snapshot"] * budget["snapshots"]
        + ["ui"] * budget["ui"]
        + ["action"] * budget["action"]
        + ["hotkey"] * budget["hotkey"]
        + ["run_debug"] * budget["run_debug"]
    )
    rng.shuffle(mixed)
    edit_round = 0
    for kind in mixed:
        ts = clock.step()
        if kind == "snapshot":
            base = CODE_FRAGMENTS[edit_round % len(CODE_FRAGMENTS)]
            content = f"// {task_id} step {edit_round}\n{base}"
            edit_round += 1
            journal.append(SnapshotRecord(seq=0, timestamp=ts, file=main_file,
                                          content=content, digest=content_digest(content)))
        elif kind == "run_debug":
            category = "run" if rng.random() < 0.8 else "debug"
            journal.append(ActivityRecord(seq=0, timestamp=ts, category=category,
                                          event_id=category.capitalize(),
                                          detail={"task": task_id}))
        else:
            pool = {"ui": UI_POOL, "action": ACTION_POOL, "hotkey": HOTKEY_POOL}[kind]
            journal.append(ActivityRecord(seq=0, timestamp=ts, category=kind,
                                          event_id=rng.choice(pool), detail={}))

    journal.append(ToolWindowRecord(seq=0, timestamp=clock.step(),
                                    window_id=rng.choice(WINDOW_POOL), kind="closed"))
    journal.append(FocusRecord(seq=0, timestamp=clock.step(), file=main_file, kind="unfocus"))


def simulate_study(config: StudyConfig, sessions: int, seed: int, out_dir: Path | str,
                   ratios: Optional[dict] = None) -> list[SimulatedSession]:
    """Generate `sessions` legal synthetic journals under `out_dir`."""
    out_dir = Path(out_dir)
    ratios = dict(DEFAULT_RATIOS, **(ratios or {}))
    results: list[SimulatedSession] = []

    task_step_count = sum(
        1 for step in config.scenario.steps if step.kind in ("task", "group", "choice"))
    task_share = max(task_step_count, 1)

    for index in range(sessions):
        rng = random.Random(f"{seed}:{index}")
        session_dir = out_dir / f"session-{index:03d}"
        journal = Journal(session_dir, durable=False)
        clock = _SessionClock(BASE_EPOCH_MS + index * 3_600_000, rng)
        consent_ts = clock.step()

        state = sm.init(config)
        state = sm.advance(state, sm.StepAction(sm.A_GRANT_CONSENT), config, now_ms=consent_ts)
        taken_actions: list[dict] = [{"kind": sm.A_GRANT_CONSENT}]

        budget = {k: max(v // task_share, 1) for k, v in ratios.items()}

        while not state.finished(config):
            choices = [a for a in sm.available_actions(state, config)
                       if a.kind not in (sm.A_PAUSE, sm.A_SUBMIT)]
            action = rng.choice(choices)
            if action.kind == sm.A_ANSWER_SURVEY:
                step = config.scenario.steps[state.cursor]
                survey = config.surveys[step.survey_id]
                answers = _random_answers(survey, rng)
                action = sm.StepAction(sm.A_ANSWER_SURVEY, answers=answers)
                journal.append(SurveyResponseRecord(seq=0, timestamp=clock.step(),
                                                    survey_id=survey.id, answers=answers))
            elif action.kind == sm.A_COMPLETE_TASK:
                _emit_task_records(journal, action.task_id, config, clock, rng, budget)
            state = sm.advance(state, action, config, now_ms=clock.now)
            taken_actions.append(action.to_doc())

        taken_actions.append({"kind": sm.A_SUBMIT})
        state = sm.advance(state, sm.StepAction(sm.A_SUBMIT), config, now_ms=clock.now)
        journal.close()

        actions_file = session_dir / "actions.json"
        actions_file.write_text(json.dumps({
            "client_nonce": f"sim-{seed}-{index}",
            "consent_timestamp": consent_ts,
            "actions": taken_actions,
        }, indent=2, sort_keys=True), encoding="utf-8")
        results.append(SimulatedSession(
            directory=session_dir,
            client_nonce=f"sim-{seed}-{index}",
            consent_timestamp=consent_ts,
            actions_file=actions_file,
        ))
    return results
