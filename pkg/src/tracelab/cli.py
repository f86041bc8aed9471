"""Operator and student entry points.

Exit codes: 0 success, 1 domain error (validation failures, unknown
study, ...), 2 usage error (click's default).
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__, progsnap2, stats as stats_mod
from .config import ConfigValidationError, parse_study_config
from .config.types import STEP_CHOICE, STEP_GROUP, STEP_INFO, STEP_SURVEY, STEP_TASK
from .simulate import simulate_study
from .server.store import Store, UnknownResearch

DEFAULT_ADDR = "127.0.0.1:8750"
DEFAULT_SERVER_ADDR = "0.0.0.0:8800"


def _parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError(f"bad address {addr!r}, expected host:port")
    return host, int(port)


def _load_config(config_dir: str):
    try:
        return parse_study_config(config_dir)
    except ConfigValidationError as exc:
        for error in exc.errors:
            click.echo(f"error: {error}", err=True)
        sys.exit(1)


def _scenario_plan(config) -> list[str]:
    plan = ["consent gate"]
    for step in config.scenario.steps:
        if step.kind == STEP_TASK:
            plan.append(f"task {step.task_ids[0]}")
        elif step.kind == STEP_GROUP:
            plan.append(f"group of {len(step.task_ids)} tasks, any order: "
                        + ", ".join(step.task_ids))
        elif step.kind == STEP_CHOICE:
            plan.append(f"choice of 1 from {len(step.task_ids)}: " + ", ".join(step.task_ids))
        elif step.kind == STEP_SURVEY:
            plan.append(f"survey {step.survey_id}")
        elif step.kind == STEP_INFO:
            plan.append("info page")
    return plan


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """tracelab: programming-process data collection pipeline."""


@main.command()
@click.option("--config", "config_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
def validate(config_dir: str) -> None:
    """Validate a study configuration directory."""
    config = _load_config(config_dir)
    plan = _scenario_plan(config)
    click.echo(f"configuration OK: {len(plan)}-step plan")
    for i, line in enumerate(plan):
        click.echo(f"  {i}. {line}")


@main.command()
@click.option("--config", "config_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--workspace", required=True, type=click.Path(file_okay=False))
@click.option("--addr", default=DEFAULT_ADDR, show_default=True)
@click.option("--headless", is_flag=True, help="Serve the API without the web UI.")
def run(config_dir: str, workspace: str, addr: str, headless: bool) -> None:
    """Start the local study daemon over a workspace."""
    import uvicorn

    from .daemon import DaemonSession, create_daemon_app

    config = _load_config(config_dir)
    Path(workspace).mkdir(parents=True, exist_ok=True)
    server_url = os.environ.get("TRACELAB_SERVER_URL", "")
    session = DaemonSession(config, workspace, server_url=server_url)
    ui_dir = None
    if not headless:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if candidate.is_dir():
            ui_dir = candidate
    app = create_daemon_app(session, ui_dir=ui_dir)
    host, port = _parse_addr(addr)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        session.shutdown()


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--addr", default=None, help="Listen address (env TRACELAB_ADDR).")
def serve(data_dir: str, addr: str | None) -> None:
    """Start the ingestion server."""
    import uvicorn

    from .server import create_app

    addr = addr or os.environ.get("TRACELAB_ADDR", DEFAULT_SERVER_ADDR)
    store = Store(Path(data_dir) / "tracelab.db")
    dashboard = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(store, dashboard_dir=dashboard if dashboard.is_dir() else None)
    host, port = _parse_addr(addr)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--data", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--study", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def convert(data_dir: str, study: str, out_dir: str) -> None:
    """Convert a stored study into a ProgSnap2 bundle."""
    store = Store(Path(data_dir) / "tracelab.db")
    try:
        sessions = [
            (s["participant_id"], store.records_for_session(s["token"]))
            for s in store.sessions_for_study(study)
        ]
        if not sessions:
            raise UnknownResearch(study)
    except UnknownResearch:
        click.echo(f"error: unknown study {study!r}", err=True)
        sys.exit(1)
    bundle = progsnap2.convert(sessions)
    progsnap2.write_bundle(bundle, out_dir)
    violations = progsnap2.validate_bundle(bundle)
    click.echo(f"wrote {len(bundle.main_rows)} events, "
               f"{len(bundle.code_states)} code states to {out_dir}")
    if violations:
        for v in violations:
            click.echo(f"violation: {v}", err=True)
        sys.exit(1)


@main.command(name="stats")
@click.option("--data", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--study", required=True)
@click.option("--json", "as_json", is_flag=True)
def stats_cmd(data_dir: str, study: str, as_json: bool) -> None:
    """Print summary statistics for a study."""
    store = Store(Path(data_dir) / "tracelab.db")
    try:
        pairs = store.records_for_study(study)
    except UnknownResearch:
        click.echo(f"error: unknown study {study!r}", err=True)
        sys.exit(1)
    summary = stats_mod.study_summary(pairs)
    if as_json:
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
        return
    click.echo(f"participants: {summary['participants']}")
    click.echo(f"activities:   {summary['activities']} "
               f"(actions {summary['actions']}, hotkeys {summary['hotkeys']}, "
               f"run/debug {summary['run_debug']}, ui {summary['ui']})")
    click.echo(f"snapshots:    {summary['snapshots']}")
    if summary["top_hotkeys"]:
        click.echo("top hotkeys:")
        for entry in summary["top_hotkeys"]:
            click.echo(f"  {entry['event_id']:<24} {entry['count']}")
    if summary["focus_time_by_file"]:
        click.echo("focus time by file (ms):")
        for file, ms in summary["focus_time_by_file"].items():
            click.echo(f"  {file:<32} {ms}")


@main.command()
@click.option("--config", "config_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--sessions", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def simulate(config_dir: str, sessions: int, seed: int, out_dir: str) -> None:
    """Generate deterministic synthetic session journals."""
    config = _load_config(config_dir)
    results = simulate_study(config, sessions, seed, out_dir)
    click.echo(f"wrote {len(results)} synthetic sessions to {out_dir}")


@main.command()
@click.option("--data", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--dest", required=True, type=click.Path(dir_okay=False))
def backup(data_dir: str, dest: str) -> None:
    """Point-in-time backup of the server database."""
    store = Store(Path(data_dir) / "tracelab.db")
    manifest = store.backup(dest)
    click.echo(json.dumps(manifest, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
