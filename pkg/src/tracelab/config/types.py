"""Domain types for the seven study configuration documents."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

# Step kinds
STEP_TASK = "task"
STEP_GROUP = "group"
STEP_CHOICE = "choice"
STEP_SURVEY = "survey"
STEP_INFO = "info"

# Question kinds
Q_SINGLE = "single-choice"
Q_MULTIPLE = "multiple-choice"
Q_OPEN = "open-ended"
QUESTION_KINDS = (Q_SINGLE, Q_MULTIPLE, Q_OPEN)

# Snapshot triggers
TRIGGER_EVERY_CHANGE = "every-change"
TRIGGER_ON_SAVE = "on-save"
TRIGGER_INTERVAL = "interval"

CONTENT_FULL = "full"
CONTENT_SIGNATURES = "signatures-only"

# Feature toggles the reference client knows about. Unknown names are
# rejected at validation so typos do not silently become no-ops.
KNOWN_FEATURES = (
    "completion",
    "quality-inspections",
    "parameter-hints",
    "color-theme",
)
TOGGLE_VALUES = ("enabled", "disabled", "default")


@dataclass(frozen=True)
class ScenarioStep:
    kind: str
    # task: single id; group/choice: all member ids; survey: survey id
    task_ids: tuple[str, ...] = ()
    survey_id: str = ""
    text: str = ""


@dataclass(frozen=True)
class ScenarioSpec:
    steps: tuple[ScenarioStep, ...]


@dataclass(frozen=True)
class TaskFile:
    relative_path: str
    template: Optional[str] = None
    internal: bool = False


@dataclass(frozen=True)
class TaskSpec:
    id: str
    description: str = ""
    files: tuple[TaskFile, ...] = ()


@dataclass(frozen=True)
class Question:
    kind: str
    text: str
    required: bool = False
    options: tuple[str, ...] = ()


@dataclass(frozen=True)
class SurveySpec:
    id: str
    questions: tuple[Question, ...] = ()


@dataclass(frozen=True)
class FeatureToggles:
    values: dict = field(default_factory=dict)  # feature-name -> value string

    def get(self, name: str) -> str:
        return self.values.get(name, "default")


@dataclass(frozen=True)
class ActivityPolicy:
    excluded: frozenset = frozenset()
    min_interval_ms: dict = field(default_factory=dict)  # category -> ms


@dataclass(frozen=True)
class TrackingPolicy:
    trigger: str = TRIGGER_EVERY_CHANGE
    debounce_ms: int = 200
    interval_s: int = 30
    content_mode: str = CONTENT_FULL


@dataclass(frozen=True)
class ResearchMetadata:
    title: str = ""
    description: str = ""
    consent_url: str = ""
    server_url: str = ""
    third_party_files: tuple[str, ...] = ()


@dataclass(frozen=True)
class StudyConfig:
    scenario: ScenarioSpec
    tasks: dict  # task-id -> TaskSpec
    surveys: dict  # survey-id -> SurveySpec
    settings: FeatureToggles
    activity_policy: ActivityPolicy
    tracking_policy: TrackingPolicy
    metadata: ResearchMetadata

    def tracked_files(self) -> list[str]:
        """All workspace-relative paths the capture layer may touch."""
        paths: list[str] = []
        for task in self.tasks.values():
            for f in task.files:
                if f.relative_path not in paths:
                    paths.append(f.relative_path)
        for p in self.metadata.third_party_files:
            if p not in paths:
                paths.append(p)
        return paths
