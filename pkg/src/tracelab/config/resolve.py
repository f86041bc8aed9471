"""Materialize task files inside a participant workspace."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .parse import contains_escape
from .types import TaskSpec


class PathEscapeError(Exception):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"path escapes the workspace root: {path}")


class IoFailure(Exception):
    def __init__(self, path: str, cause: OSError):
        self.path = path
        super().__init__(f"io failure at {path}: {cause}")


@dataclass(frozen=True)
class ResolvedFile:
    path: Path
    created: bool


def _checked_target(workspace_root: Path, relative_path: str) -> Path:
    if contains_escape(relative_path):
        raise PathEscapeError(relative_path)
    target = workspace_root / relative_path
    # Lexical check above; this second check catches symlinked escapes.
    resolved_parent = target.parent.resolve()
    root = workspace_root.resolve()
    if resolved_parent != root and root not in resolved_parent.parents:
        raise PathEscapeError(relative_path)
    return target


def resolve_task_files(task: TaskSpec, workspace_root: Path | str) -> list[ResolvedFile]:
    """Create missing task files; never overwrite existing ones.

    Existing files (internal or not) are left byte-for-byte untouched.
    Missing files are created with the template content, or empty.
    Idempotent: a second call reports created=False everywhere.
    """
    workspace_root = Path(workspace_root)
    resolved: list[ResolvedFile] = []
    for task_file in task.files:
        target = _checked_target(workspace_root, task_file.relative_path)
        if target.exists():
            resolved.append(ResolvedFile(path=target, created=False))
            continue
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(task_file.template or "", encoding="utf-8")
        except OSError as exc:
            raise IoFailure(str(target), exc) from exc
        resolved.append(ResolvedFile(path=target, created=True))
    return resolved
