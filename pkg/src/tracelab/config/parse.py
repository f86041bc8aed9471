"""Parse and validate the seven YAML study configuration documents.

Validation collects every error it can find rather than stopping at the
first one; `parse_study_config` raises ConfigValidationError carrying the
full list.
"""
from __future__ import annotations

import posixpath
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from .types import (
    CONTENT_FULL,
    CONTENT_SIGNATURES,
    KNOWN_FEATURES,
    Q_OPEN,
    QUESTION_KINDS,
    STEP_CHOICE,
    STEP_GROUP,
    STEP_INFO,
    STEP_SURVEY,
    STEP_TASK,
    TOGGLE_VALUES,
    TRIGGER_EVERY_CHANGE,
    TRIGGER_INTERVAL,
    TRIGGER_ON_SAVE,
    ActivityPolicy,
    FeatureToggles,
    Question,
    ResearchMetadata,
    ScenarioSpec,
    ScenarioStep,
    StudyConfig,
    SurveySpec,
    TaskFile,
    TaskSpec,
    TrackingPolicy,
)
from ..records import ACTIVITY_CATEGORIES

SCENARIO_FILE = "scenario.yaml"
TASKS_FILE = "tasks.yaml"
SETTINGS_FILE = "settings.yaml"
SURVEYS_FILE = "surveys.yaml"
ACTIVITY_FILE = "activity.yaml"
TRACKING_FILE = "tracking.yaml"
RESEARCH_FILE = "research.yaml"

REQUIRED_FILES = (SCENARIO_FILE, TASKS_FILE, RESEARCH_FILE)
ALL_FILES = (
    SCENARIO_FILE,
    TASKS_FILE,
    SETTINGS_FILE,
    SURVEYS_FILE,
    ACTIVITY_FILE,
    TRACKING_FILE,
    RESEARCH_FILE,
)

E_MALFORMED = "malformed-document"
E_DANGLING = "dangling-reference"
E_PATH_ESCAPE = "path-escape"
E_DUPLICATE = "duplicate-id"


@dataclass(frozen=True)
class ConfigError:
    kind: str
    detail: str
    file: str = ""
    line: int = 0

    def __str__(self) -> str:
        loc = self.file
        if self.line:
            loc += f":{self.line}"
        return f"{self.kind} [{loc}]: {self.detail}" if loc else f"{self.kind}: {self.detail}"


class ConfigValidationError(Exception):
    """Raised by parse_study_config with the complete error list."""

    def __init__(self, errors: list[ConfigError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


def contains_escape(path: Any) -> bool:
    """True if a config path is absolute or escapes the workspace root
    after lexical normalization."""
    if not isinstance(path, str) or not path:
        return True
    if path.startswith("/") or path.startswith("\\") or ":" in path.split("/")[0]:
        return True
    norm = posixpath.normpath(path)
    return norm == ".." or norm.startswith("../")


class _Collector:
    def __init__(self) -> None:
        self.errors: list[ConfigError] = []

    def add(self, kind: str, detail: str, file: str = "", line: int = 0) -> None:
        self.errors.append(ConfigError(kind=kind, detail=detail, file=file, line=line))


# Distinguishes "could not load at all" from a legitimately empty document.
_LOAD_FAILED = object()


def _load_yaml(path: Path, errs: _Collector) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        errs.add(E_MALFORMED, f"unreadable: {exc}", file=path.name)
        return _LOAD_FAILED
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = 0
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        errs.add(E_MALFORMED, f"invalid YAML: {exc}", file=path.name, line=line)
        return _LOAD_FAILED


def _expect_mapping(doc: Any, file: str, errs: _Collector) -> Optional[dict]:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        errs.add(E_MALFORMED, "top level must be a mapping", file=file)
        return None
    return doc


def _parse_scenario(doc: dict, errs: _Collector) -> ScenarioSpec:
    steps: list[ScenarioStep] = []
    raw_steps = doc.get("steps")
    if raw_steps is None:
        errs.add(E_MALFORMED, "missing 'steps' list", file=SCENARIO_FILE)
        return ScenarioSpec(steps=())
    if not isinstance(raw_steps, list):
        errs.add(E_MALFORMED, "'steps' must be a list", file=SCENARIO_FILE)
        return ScenarioSpec(steps=())
    for i, raw in enumerate(raw_steps):
        where = f"steps[{i}]"
        if not isinstance(raw, dict) or len(raw) != 1:
            errs.add(E_MALFORMED, f"{where}: each step is a one-key mapping", file=SCENARIO_FILE)
            continue
        key, value = next(iter(raw.items()))
        if key == STEP_TASK:
            if not isinstance(value, str) or not value:
                errs.add(E_MALFORMED, f"{where}: task id must be a string", file=SCENARIO_FILE)
                continue
            steps.append(ScenarioStep(kind=STEP_TASK, task_ids=(value,)))
        elif key in (STEP_GROUP, STEP_CHOICE):
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                errs.add(E_MALFORMED, f"{where}: {key} takes a list of task ids", file=SCENARIO_FILE)
                continue
            if key == STEP_GROUP and not value:
                errs.add(E_MALFORMED, f"{where}: group must be non-empty", file=SCENARIO_FILE)
                continue
            if key == STEP_CHOICE and len(value) < 2:
                errs.add(E_MALFORMED, f"{where}: choice needs at least 2 alternatives", file=SCENARIO_FILE)
                continue
            if len(set(value)) != len(value):
                errs.add(E_DUPLICATE, f"{where}: repeated task id in {key}", file=SCENARIO_FILE)
                continue
            steps.append(ScenarioStep(kind=key, task_ids=tuple(value)))
        elif key == STEP_SURVEY:
            if not isinstance(value, str) or not value:
                errs.add(E_MALFORMED, f"{where}: survey id must be a string", file=SCENARIO_FILE)
                continue
            steps.append(ScenarioStep(kind=STEP_SURVEY, survey_id=value))
        elif key == STEP_INFO:
            if not isinstance(value, str):
                errs.add(E_MALFORMED, f"{where}: info takes text", file=SCENARIO_FILE)
                continue
            steps.append(ScenarioStep(kind=STEP_INFO, text=value))
        else:
            errs.add(E_MALFORMED, f"{where}: unknown step kind {key!r}", file=SCENARIO_FILE)
    return ScenarioSpec(steps=tuple(steps))


def _parse_tasks(doc: dict, errs: _Collector) -> dict:
    tasks: dict[str, TaskSpec] = {}
    raw_tasks = doc.get("tasks")
    if raw_tasks is None:
        errs.add(E_MALFORMED, "missing 'tasks' list", file=TASKS_FILE)
        return tasks
    if not isinstance(raw_tasks, list):
        errs.add(E_MALFORMED, "'tasks' must be a list", file=TASKS_FILE)
        return tasks
    for i, raw in enumerate(raw_tasks):
        where = f"tasks[{i}]"
        if not isinstance(raw, dict):
            errs.add(E_MALFORMED, f"{where}: task must be a mapping", file=TASKS_FILE)
            continue
        task_id = raw.get("id")
        if not isinstance(task_id, str) or not task_id:
            errs.add(E_MALFORMED, f"{where}: missing task id", file=TASKS_FILE)
            continue
        if task_id in tasks:
            errs.add(E_DUPLICATE, f"task id {task_id!r} defined twice", file=TASKS_FILE)
            continue
        files: list[TaskFile] = []
        for j, raw_file in enumerate(raw.get("files") or []):
            fwhere = f"{where}.files[{j}]"
            if not isinstance(raw_file, dict):
                errs.add(E_MALFORMED, f"{fwhere}: file entry must be a mapping", file=TASKS_FILE)
                continue
            rel = raw_file.get("relative-path")
            if not isinstance(rel, str) or not rel:
                errs.add(E_MALFORMED, f"{fwhere}: missing relative-path", file=TASKS_FILE)
                continue
            if contains_escape(rel):
                errs.add(E_PATH_ESCAPE, f"{fwhere}: {rel!r} escapes the workspace", file=TASKS_FILE)
                continue
            template = raw_file.get("template")
            if template is not None and not isinstance(template, str):
                errs.add(E_MALFORMED, f"{fwhere}: template must be text", file=TASKS_FILE)
                continue
            internal = bool(raw_file.get("internal", False))
            files.append(TaskFile(
                relative_path=posixpath.normpath(rel),
                template=template,
                internal=internal,
            ))
        description = raw.get("description", "")
        if not isinstance(description, str):
            errs.add(E_MALFORMED, f"{where}: description must be text", file=TASKS_FILE)
            description = ""
        tasks[task_id] = TaskSpec(id=task_id, description=description, files=tuple(files))
    return tasks


def _parse_surveys(doc: dict, errs: _Collector) -> dict:
    surveys: dict[str, SurveySpec] = {}
    for i, raw in enumerate(doc.get("surveys") or []):
        where = f"surveys[{i}]"
        if not isinstance(raw, dict):
            errs.add(E_MALFORMED, f"{where}: survey must be a mapping", file=SURVEYS_FILE)
            continue
        survey_id = raw.get("id")
        if not isinstance(survey_id, str) or not survey_id:
            errs.add(E_MALFORMED, f"{where}: missing survey id", file=SURVEYS_FILE)
            continue
        if survey_id in surveys:
            errs.add(E_DUPLICATE, f"survey id {survey_id!r} defined twice", file=SURVEYS_FILE)
            continue
        questions: list[Question] = []
        for j, raw_q in enumerate(raw.get("questions") or []):
            qwhere = f"{where}.questions[{j}]"
            if not isinstance(raw_q, dict):
                errs.add(E_MALFORMED, f"{qwhere}: question must be a mapping", file=SURVEYS_FILE)
                continue
            kind = raw_q.get("kind")
            if kind not in QUESTION_KINDS:
                errs.add(E_MALFORMED, f"{qwhere}: unknown question kind {kind!r}", file=SURVEYS_FILE)
                continue
            text = raw_q.get("text")
            if not isinstance(text, str) or not text:
                errs.add(E_MALFORMED, f"{qwhere}: missing question text", file=SURVEYS_FILE)
                continue
            options = raw_q.get("options") or []
            if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
                errs.add(E_MALFORMED, f"{qwhere}: options must be a list of strings", file=SURVEYS_FILE)
                continue
            if kind == Q_OPEN and options:
                errs.add(E_MALFORMED, f"{qwhere}: open-ended questions take no options", file=SURVEYS_FILE)
                continue
            if kind != Q_OPEN and len(options) < 2:
                errs.add(E_MALFORMED, f"{qwhere}: choice questions need at least 2 options", file=SURVEYS_FILE)
                continue
            questions.append(Question(
                kind=kind, text=text,
                required=bool(raw_q.get("required", False)),
                options=tuple(options),
            ))
        surveys[survey_id] = SurveySpec(id=survey_id, questions=tuple(questions))
    return surveys


def _parse_settings(doc: dict, errs: _Collector) -> FeatureToggles:
    values: dict[str, str] = {}
    raw = doc.get("features") or {}
    if not isinstance(raw, dict):
        errs.add(E_MALFORMED, "'features' must be a mapping", file=SETTINGS_FILE)
        return FeatureToggles()
    for name, value in raw.items():
        if name not in KNOWN_FEATURES:
            errs.add(E_MALFORMED, f"unknown feature {name!r}", file=SETTINGS_FILE)
            continue
        if not isinstance(value, str) or not value:
            errs.add(E_MALFORMED, f"feature {name!r}: value must be a string", file=SETTINGS_FILE)
            continue
        # color-theme carries an arbitrary theme name; everything else is
        # a strict tri-state toggle.
        if name != "color-theme" and value not in TOGGLE_VALUES:
            errs.add(E_MALFORMED, f"feature {name!r}: value must be one of {TOGGLE_VALUES}", file=SETTINGS_FILE)
            continue
        values[name] = value
    return FeatureToggles(values=values)


def _parse_activity(doc: dict, errs: _Collector) -> ActivityPolicy:
    excluded_raw = doc.get("excluded") or []
    excluded: frozenset = frozenset()
    if not isinstance(excluded_raw, list) or not all(isinstance(e, str) for e in excluded_raw):
        errs.add(E_MALFORMED, "'excluded' must be a list of event ids", file=ACTIVITY_FILE)
    else:
        excluded = frozenset(excluded_raw)
    intervals: dict[str, int] = {}
    raw = doc.get("min-interval-ms") or {}
    if not isinstance(raw, dict):
        errs.add(E_MALFORMED, "'min-interval-ms' must be a mapping", file=ACTIVITY_FILE)
        raw = {}
    for cat, ms in raw.items():
        if cat not in ACTIVITY_CATEGORIES:
            errs.add(E_MALFORMED, f"unknown activity category {cat!r}", file=ACTIVITY_FILE)
            continue
        if not isinstance(ms, int) or isinstance(ms, bool) or ms < 0:
            errs.add(E_MALFORMED, f"min-interval-ms[{cat}] must be a non-negative integer", file=ACTIVITY_FILE)
            continue
        intervals[cat] = ms
    return ActivityPolicy(excluded=excluded, min_interval_ms=intervals)


def _parse_tracking(doc: dict, errs: _Collector) -> TrackingPolicy:
    raw_trigger = doc.get("trigger") or {}
    if not isinstance(raw_trigger, dict):
        errs.add(E_MALFORMED, "'trigger' must be a mapping", file=TRACKING_FILE)
        raw_trigger = {}
    kind = raw_trigger.get("kind", TRIGGER_EVERY_CHANGE)
    debounce_ms = 200
    interval_s = 30
    if kind == TRIGGER_EVERY_CHANGE:
        debounce_ms = raw_trigger.get("debounce-ms", 200)
        if not isinstance(debounce_ms, int) or isinstance(debounce_ms, bool) or debounce_ms < 0:
            errs.add(E_MALFORMED, "debounce-ms must be a non-negative integer", file=TRACKING_FILE)
            debounce_ms = 200
    elif kind == TRIGGER_INTERVAL:
        interval_s = raw_trigger.get("interval-s", 30)
        if not isinstance(interval_s, int) or isinstance(interval_s, bool) or interval_s < 1:
            errs.add(E_MALFORMED, "interval-s must be an integer >= 1", file=TRACKING_FILE)
            interval_s = 30
    elif kind != TRIGGER_ON_SAVE:
        errs.add(E_MALFORMED, f"unknown trigger kind {kind!r}", file=TRACKING_FILE)
        kind = TRIGGER_EVERY_CHANGE
    mode = doc.get("content-mode", CONTENT_FULL)
    if mode not in (CONTENT_FULL, CONTENT_SIGNATURES):
        errs.add(E_MALFORMED, f"unknown content-mode {mode!r}", file=TRACKING_FILE)
        mode = CONTENT_FULL
    return TrackingPolicy(trigger=kind, debounce_ms=debounce_ms, interval_s=interval_s, content_mode=mode)


def _parse_research(doc: dict, errs: _Collector) -> ResearchMetadata:
    def text(key: str) -> str:
        value = doc.get(key, "")
        if value is None:
            return ""
        if not isinstance(value, str):
            errs.add(E_MALFORMED, f"'{key}' must be text", file=RESEARCH_FILE)
            return ""
        return value

    third_party: list[str] = []
    raw = doc.get("third-party-files") or []
    if not isinstance(raw, list):
        errs.add(E_MALFORMED, "'third-party-files' must be a list", file=RESEARCH_FILE)
        raw = []
    for p in raw:
        if contains_escape(p):
            errs.add(E_PATH_ESCAPE, f"third-party file {p!r} escapes the workspace", file=RESEARCH_FILE)
            continue
        third_party.append(posixpath.normpath(p))
    return ResearchMetadata(
        title=text("title"),
        description=text("description"),
        consent_url=text("consent-url"),
        server_url=text("server-url"),
        third_party_files=tuple(third_party),
    )


def _cross_validate(config: StudyConfig, errs: _Collector) -> None:
    for step in config.scenario.steps:
        for task_id in step.task_ids:
            if task_id not in config.tasks:
                errs.add(E_DANGLING, f"task {task_id!r} referenced by scenario is not defined",
                         file=SCENARIO_FILE)
        if step.kind == STEP_SURVEY and step.survey_id not in config.surveys:
            errs.add(E_DANGLING, f"survey {step.survey_id!r} referenced by scenario is not defined",
                     file=SCENARIO_FILE)


def parse_study_config(directory: Path | str) -> StudyConfig:
    """Parse the seven documents in `directory` into a StudyConfig.

    Raises ConfigValidationError carrying all errors found; never raises
    on malformed input content itself.
    """
    directory = Path(directory)
    errs = _Collector()

    # None marks a document that failed to load (missing/unreadable/bad
    # YAML); those are reported once and skipped structurally so a single
    # root cause does not cascade into follow-on errors.
    docs: dict[str, Optional[dict]] = {}
    for name in ALL_FILES:
        path = directory / name
        if not path.exists():
            if name in REQUIRED_FILES:
                errs.add(E_MALFORMED, "required document is missing", file=name)
                docs[name] = None
            else:
                docs[name] = {}
            continue
        loaded = _load_yaml(path, errs)
        docs[name] = None if loaded is _LOAD_FAILED else _expect_mapping(loaded, name, errs)

    def parse(name: str, parser, default):
        doc = docs[name]
        return default if doc is None else parser(doc, errs)

    config = StudyConfig(
        scenario=parse(SCENARIO_FILE, _parse_scenario, ScenarioSpec(steps=())),
        tasks=parse(TASKS_FILE, _parse_tasks, {}),
        surveys=parse(SURVEYS_FILE, _parse_surveys, {}),
        settings=parse(SETTINGS_FILE, _parse_settings, FeatureToggles()),
        activity_policy=parse(ACTIVITY_FILE, _parse_activity, ActivityPolicy()),
        tracking_policy=parse(TRACKING_FILE, _parse_tracking, TrackingPolicy()),
        metadata=parse(RESEARCH_FILE, _parse_research, ResearchMetadata()),
    )
    _cross_validate(config, errs)
    if errs.errors:
        raise ConfigValidationError(errs.errors)
    return config


# ---------------------------------------------------------------------------
# Serialization (the parse -> serialize -> parse fixed point)


def to_documents(config: StudyConfig) -> dict:
    """Render a StudyConfig back into the seven YAML document bodies."""
    steps = []
    for step in config.scenario.steps:
        if step.kind == STEP_TASK:
            steps.append({STEP_TASK: step.task_ids[0]})
        elif step.kind in (STEP_GROUP, STEP_CHOICE):
            steps.append({step.kind: list(step.task_ids)})
        elif step.kind == STEP_SURVEY:
            steps.append({STEP_SURVEY: step.survey_id})
        else:
            steps.append({STEP_INFO: step.text})

    tasks = []
    for task in config.tasks.values():
        entry: dict = {"id": task.id, "description": task.description}
        files = []
        for f in task.files:
            fe: dict = {"relative-path": f.relative_path, "internal": f.internal}
            if f.template is not None:
                fe["template"] = f.template
            files.append(fe)
        entry["files"] = files
        tasks.append(entry)

    surveys = []
    for survey in config.surveys.values():
        surveys.append({
            "id": survey.id,
            "questions": [
                {
                    "kind": q.kind,
                    "text": q.text,
                    "required": q.required,
                    "options": list(q.options),
                }
                for q in survey.questions
            ],
        })

    trigger: dict = {"kind": config.tracking_policy.trigger}
    if config.tracking_policy.trigger == TRIGGER_EVERY_CHANGE:
        trigger["debounce-ms"] = config.tracking_policy.debounce_ms
    elif config.tracking_policy.trigger == TRIGGER_INTERVAL:
        trigger["interval-s"] = config.tracking_policy.interval_s

    return {
        SCENARIO_FILE: {"steps": steps},
        TASKS_FILE: {"tasks": tasks},
        SURVEYS_FILE: {"surveys": surveys},
        SETTINGS_FILE: {"features": dict(config.settings.values)},
        ACTIVITY_FILE: {
            "excluded": sorted(config.activity_policy.excluded),
            "min-interval-ms": dict(config.activity_policy.min_interval_ms),
        },
        TRACKING_FILE: {"trigger": trigger, "content-mode": config.tracking_policy.content_mode},
        RESEARCH_FILE: {
            "title": config.metadata.title,
            "description": config.metadata.description,
            "consent-url": config.metadata.consent_url,
            "server-url": config.metadata.server_url,
            "third-party-files": list(config.metadata.third_party_files),
        },
    }


def write_study_config(config: StudyConfig, directory: Path | str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, body in to_documents(config).items():
        (directory / name).write_text(
            yaml.safe_dump(body, sort_keys=False, allow_unicode=True), encoding="utf-8"
        )
