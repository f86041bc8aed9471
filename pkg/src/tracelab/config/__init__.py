from .types import (
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
from .parse import (
    ConfigError,
    ConfigValidationError,
    parse_study_config,
    to_documents,
    write_study_config,
)
from .resolve import IoFailure, PathEscapeError, ResolvedFile, resolve_task_files

__all__ = [
    "ActivityPolicy",
    "ConfigError",
    "ConfigValidationError",
    "FeatureToggles",
    "IoFailure",
    "PathEscapeError",
    "Question",
    "ResearchMetadata",
    "ResolvedFile",
    "ScenarioSpec",
    "ScenarioStep",
    "StudyConfig",
    "SurveySpec",
    "TaskFile",
    "TaskSpec",
    "TrackingPolicy",
    "parse_study_config",
    "resolve_task_files",
    "to_documents",
    "write_study_config",
]
