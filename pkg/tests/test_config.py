from __future__ import annotations

import os
from pathlib import Path

import pytest

from tracelab.config import (
    ConfigValidationError,
    PathEscapeError,
    parse_study_config,
    resolve_task_files,
    write_study_config,
)
from tracelab.config.parse import (
    E_DANGLING,
    E_DUPLICATE,
    E_MALFORMED,
    E_PATH_ESCAPE,
    contains_escape,
)
from tracelab.config.types import TaskFile, TaskSpec

from conftest import WALKTHROUGH_DOCS, write_docs


def test_walkthrough_scenario_parses_to_expected_steps(walkthrough_config):
    steps = walkthrough_config.scenario.steps
    assert [s.kind for s in steps] == ["task", "group", "choice", "survey"]
    assert steps[0].task_ids == ("isEvenNumberProblem",)
    assert steps[1].task_ids == ("taskA", "taskB")
    assert steps[2].task_ids == ("taskC", "taskD")
    assert steps[3].survey_id == "final"


def test_parse_serialize_parse_is_fixed_point(walkthrough_config, tmp_path):
    out = tmp_path / "rewritten"
    write_study_config(walkthrough_config, out)
    assert parse_study_config(out) == walkthrough_config


def test_dangling_survey_reference(tmp_path):
    docs = dict(WALKTHROUGH_DOCS)
    docs["scenario.yaml"] = "steps:\n  - task: isEvenNumberProblem\n  - survey: s9\n"
    with pytest.raises(ConfigValidationError) as exc:
        parse_study_config(write_docs(tmp_path / "c", docs))
    kinds = {e.kind for e in exc.value.errors}
    assert kinds == {E_DANGLING}
    assert any("s9" in e.detail for e in exc.value.errors)


def test_path_escape_rejected(tmp_path):
    docs = dict(WALKTHROUGH_DOCS)
    docs["tasks.yaml"] = (
        "tasks:\n  - id: t\n    files:\n      - relative-path: ../outside.txt\n"
    )
    docs["scenario.yaml"] = "steps:\n  - task: t\n"
    with pytest.raises(ConfigValidationError) as exc:
        parse_study_config(write_docs(tmp_path / "c", docs))
    assert any(e.kind == E_PATH_ESCAPE for e in exc.value.errors)


def test_errors_are_collected_not_fail_fast(tmp_path):
    docs = dict(WALKTHROUGH_DOCS)
    # two independent problems: a dangling survey and a path escape
    docs["scenario.yaml"] = "steps:\n  - task: isEvenNumberProblem\n  - survey: nope\n"
    docs["research.yaml"] = WALKTHROUGH_DOCS["research.yaml"].replace(
        "logs/extra.log", "/etc/passwd")
    with pytest.raises(ConfigValidationError) as exc:
        parse_study_config(write_docs(tmp_path / "c", docs))
    kinds = [e.kind for e in exc.value.errors]
    assert E_DANGLING in kinds and E_PATH_ESCAPE in kinds


def test_missing_optional_documents_default(tmp_path):
    docs = {k: WALKTHROUGH_DOCS[k] for k in ("scenario.yaml", "tasks.yaml", "research.yaml")}
    docs["scenario.yaml"] = "steps:\n  - task: isEvenNumberProblem\n"
    config = parse_study_config(write_docs(tmp_path / "c", docs))
    assert config.surveys == {}
    assert config.settings.values == {}
    assert config.activity_policy.excluded == frozenset()
    assert config.tracking_policy.trigger == "every-change"


def test_missing_required_document(tmp_path):
    docs = {k: v for k, v in WALKTHROUGH_DOCS.items() if k != "scenario.yaml"}
    with pytest.raises(ConfigValidationError) as exc:
        parse_study_config(write_docs(tmp_path / "c", docs))
    assert any(e.kind == E_MALFORMED and e.file == "scenario.yaml"
               for e in exc.value.errors)


def test_duplicate_task_id(tmp_path):
    docs = dict(WALKTHROUGH_DOCS)
    docs["tasks.yaml"] = (
        "tasks:\n  - id: t\n    files: []\n  - id: t\n    files: []\n"
    )
    docs["scenario.yaml"] = "steps:\n  - task: t\n"
    with pytest.raises(ConfigValidationError) as exc:
        parse_study_config(write_docs(tmp_path / "c", docs))
    assert any(e.kind == E_DUPLICATE for e in exc.value.errors)


def test_validation_is_total_on_garbage_bytes(tmp_path):
    directory = tmp_path / "c"
    write_docs(directory, WALKTHROUGH_DOCS)
    (directory / "scenario.yaml").write_bytes(b"\x00\xff{]:not yaml\n\t- ::")
    with pytest.raises(ConfigValidationError):
        parse_study_config(directory)


@pytest.mark.parametrize("path,escapes", [
    ("src/Main.kt", False),
    ("a/../b.txt", False),
    ("../outside.txt", True),
    ("a/../../outside", True),
    ("/etc/passwd", True),
    ("", True),
    ("nested/./ok.py", False),
])
def test_contains_escape(path, escapes):
    assert contains_escape(path) is escapes


# -- resolve_task_files -------------------------------------------------------


def _task(*files: TaskFile) -> TaskSpec:
    return TaskSpec(id="t", files=tuple(files))


def test_resolve_creates_missing_file_with_template(tmp_path):
    task = _task(TaskFile(relative_path="src/Main.kt", template="fun main() {}"))
    resolved = resolve_task_files(task, tmp_path)
    assert resolved[0].created is True
    assert (tmp_path / "src/Main.kt").read_text() == "fun main() {}"


def test_resolve_missing_file_without_template_is_empty(tmp_path):
    task = _task(TaskFile(relative_path="empty.txt"))
    resolve_task_files(task, tmp_path)
    assert (tmp_path / "empty.txt").read_text() == ""


def test_resolve_never_overwrites_existing(tmp_path):
    target = tmp_path / "keep.kt"
    target.write_bytes(b"original bytes \xe2\x9c\x93")
    for internal in (True, False):
        task = _task(TaskFile(relative_path="keep.kt", template="new", internal=internal))
        resolved = resolve_task_files(task, tmp_path)
        assert resolved[0].created is False
        assert target.read_bytes() == b"original bytes \xe2\x9c\x93"


def test_resolve_is_idempotent(tmp_path):
    task = _task(TaskFile(relative_path="a.txt", template="x"),
                 TaskFile(relative_path="dir/b.txt"))
    first = resolve_task_files(task, tmp_path)
    second = resolve_task_files(task, tmp_path)
    assert all(r.created for r in first)
    assert all(not r.created for r in second)


def test_resolve_rejects_symlink_escape(tmp_path):
    workspace = tmp_path / "ws"
    outside = tmp_path / "outside"
    workspace.mkdir()
    outside.mkdir()
    os.symlink(outside, workspace / "link")
    task = _task(TaskFile(relative_path="link/evil.txt", template="x"))
    with pytest.raises(PathEscapeError):
        resolve_task_files(task, workspace)


@pytest.mark.parametrize("bad", ["../x", "/abs", "a/../../b"])
def test_resolve_rejects_lexical_escapes(tmp_path, bad):
    with pytest.raises(PathEscapeError):
        resolve_task_files(_task(TaskFile(relative_path=bad)), tmp_path)
