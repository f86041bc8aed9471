from __future__ import annotations

import textwrap
from pathlib import Path

import pytest

from tracelab.config import parse_study_config

# The running example: task, two-task group in arbitrary order, choice of
# one from two, final survey.
WALKTHROUGH_DOCS = {
    "scenario.yaml": """
        steps:
          - task: isEvenNumberProblem
          - group: [taskA, taskB]
          - choice: [taskC, taskD]
          - survey: final
    """,
    "tasks.yaml": """
        tasks:
          - id: isEvenNumberProblem
            description: "Check whether a number is even."
            files:
              - relative-path: src/IsEven.kt
                template: "fun main() {}\\n"
                internal: false
          - id: taskA
            description: "Task A"
            files:
              - relative-path: src/TaskA.kt
          - id: taskB
            description: "Task B"
            files:
              - relative-path: src/TaskB.kt
          - id: taskC
            description: "Task C"
            files:
              - relative-path: src/TaskC.kt
          - id: taskD
            description: "Task D"
            files:
              - relative-path: src/TaskD.kt
    """,
    "surveys.yaml": """
        surveys:
          - id: final
            questions:
              - kind: single-choice
                text: "How difficult was it?"
                required: true
                options: [easy, medium, hard]
              - kind: multiple-choice
                text: "Which tools did you use?"
                required: false
                options: [debugger, completion, search]
              - kind: open-ended
                text: "Any comments?"
                required: false
    """,
    "settings.yaml": """
        features:
          completion: enabled
          quality-inspections: disabled
    """,
    "activity.yaml": """
        excluded: [SecretAction]
        min-interval-ms:
          ui: 0
    """,
    "tracking.yaml": """
        trigger:
          kind: every-change
          debounce-ms: 200
        content-mode: full
    """,
    "research.yaml": """
        title: "walkthrough-study"
        description: "Scenario walk-through study"
        consent-url: "https://example.org/consent"
        server-url: ""
        third-party-files: [logs/extra.log]
    """,
}


def write_docs(directory: Path, docs: dict) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for name, body in docs.items():
        (directory / name).write_text(textwrap.dedent(body).lstrip("\n"), encoding="utf-8")
    return directory


@pytest.fixture
def walkthrough_dir(tmp_path: Path) -> Path:
    return write_docs(tmp_path / "config", WALKTHROUGH_DOCS)


@pytest.fixture
def walkthrough_config(walkthrough_dir: Path):
    return parse_study_config(walkthrough_dir)
