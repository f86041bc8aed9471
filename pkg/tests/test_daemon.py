"""Study-client daemon: consent gating, the local API, and crash recovery."""
import pytest
from fastapi.testclient import TestClient

from tracelab.daemon.app import create_daemon_app
from tracelab.daemon.session import DaemonSession, NotConsented
from tracelab.server.app import create_app
from tracelab.server.store import Store


class FakeClock:
    def __init__(self, start=1_700_000_000_000):
        self.now = start

    def __call__(self):
        self.now += 100
        return self.now


class InProcessTransport:
    """Routes the daemon's uploads into an in-process ingestion server."""

    def __init__(self, client):
        self.client = client

    def post(self, path, body, headers):
        response = self.client.post(path, content=body, headers=headers)
        try:
            return response.status_code, response.json()
        except ValueError:
            return response.status_code, {}


@pytest.fixture
def workspace(tmp_path):
    ws = tmp_path / "workspace"
    ws.mkdir()
    return ws


def make_session(walkthrough_config, workspace, transport=None, clock=None):
    return DaemonSession(walkthrough_config, workspace, transport=transport,
                         clock=clock or FakeClock(), start_watcher=False)


@pytest.fixture
def api(walkthrough_config, workspace):
    session = make_session(walkthrough_config, workspace)
    with TestClient(create_daemon_app(session)) as client:
        yield client, session
    session.shutdown(flush=False)


def test_everything_is_gated_until_consent(api, workspace):
    client, _ = api
    view = client.get("/v1/scenario").json()
    assert view["consent"] == "pending"
    assert view["step"] is None
    assert [a["kind"] for a in view["available_actions"]] == \
        ["grant-consent", "decline-consent"]

    response = client.post("/v1/events", json={
        "category": "activity", "activity_category": "ui",
        "event_id": "EditorUp"})
    assert response.status_code == 403
    assert not (workspace / ".tracelab").exists()


def test_granting_consent_materializes_tasks_and_journal(api, workspace):
    client, session = api
    view = client.post("/v1/scenario/advance", json={"kind": "grant-consent"}).json()
    assert view["consent"] == "granted"
    assert view["step"]["kind"] == "task"
    assert view["step"]["task"]["id"] == "isEvenNumberProblem"
    assert (workspace / "src" / "IsEven.kt").read_text() == "fun main() {}\n"
    assert (workspace / "src" / "TaskD.kt").exists()
    assert (workspace / ".tracelab" / "journal").is_dir()
    assert session.journal is not None


def test_event_submission_and_policy_filtering(api):
    client, _ = api
    client.post("/v1/scenario/advance", json={"kind": "grant-consent"})

    accepted = client.post("/v1/events", json={
        "category": "activity", "activity_category": "ui", "event_id": "EditorUp"})
    assert accepted.status_code == 202
    assert accepted.json()["seq"] >= 1

    excluded = client.post("/v1/events", json={
        "category": "activity", "activity_category": "action",
        "event_id": "SecretAction"})
    assert excluded.status_code == 422
    assert "excluded" in excluded.json()["reason"]

    unknown = client.post("/v1/events", json={"category": "nonsense"})
    assert unknown.status_code == 422

    focus = client.post("/v1/events", json={
        "category": "focus", "file": "src/IsEven.kt", "kind": "focus"})
    assert focus.status_code == 202


def test_full_scenario_walkthrough_over_the_api(api):
    client, session = api
    client.post("/v1/scenario/advance", json={"kind": "grant-consent"})
    client.post("/v1/scenario/advance",
                json={"kind": "complete-task", "task_id": "isEvenNumberProblem"})

    # group: order is free, completing both moves on
    view = client.post("/v1/scenario/advance",
                       json={"kind": "complete-task", "task_id": "taskB"}).json()
    assert view["step"]["kind"] == "group"
    done = {t["id"]: t["done"] for t in view["step"]["tasks"]}
    assert done == {"taskA": True, "taskB": False} or done == {"taskA": False, "taskB": True}
    view = client.post("/v1/scenario/advance",
                       json={"kind": "complete-task", "task_id": "taskA"}).json()
    assert view["step"]["kind"] == "choice"

    # choice: pick one, then complete it
    client.post("/v1/scenario/advance", json={"kind": "pick-choice", "task_id": "taskD"})
    view = client.post("/v1/scenario/advance",
                       json={"kind": "complete-task", "task_id": "taskD"}).json()
    assert view["step"]["kind"] == "survey"
    assert view["step"]["survey"]["id"] == "final"

    # the required question is enforced
    missing = client.post("/v1/survey/final", json={"answers": {}})
    assert missing.status_code == 422
    assert missing.json()["detail"]["question_id"] == "q0"

    view = client.post("/v1/survey/final", json={"answers": {"q0": "easy"}}).json()
    assert view["finished"] is True
    assert view["step"] is None

    # the response was journaled for upload
    surveys = [r for r in session.journal.read_all()
               if getattr(r, "survey_id", None) == "final"]
    assert len(surveys) == 1 and surveys[0].answers == {"q0": "easy"}


def test_illegal_actions_are_rejected_not_applied(api):
    client, _ = api
    response = client.post("/v1/scenario/advance",
                           json={"kind": "complete-task", "task_id": "taskA"})
    assert response.status_code == 409
    client.post("/v1/scenario/advance", json={"kind": "grant-consent"})
    response = client.post("/v1/scenario/advance",
                           json={"kind": "complete-task", "task_id": "taskB"})
    assert response.status_code == 409
    response = client.post("/v1/survey/final", json={"answers": {"q0": "easy"}})
    assert response.status_code == 409


def test_declining_consent_leaves_no_trace(api, workspace):
    client, session = api
    view = client.post("/v1/scenario/advance", json={"kind": "decline-consent"}).json()
    assert view["available_actions"] == []
    assert not (workspace / ".tracelab").exists()
    assert session.declined


def test_session_survives_a_hard_kill(walkthrough_config, workspace):
    clock = FakeClock()
    first = make_session(walkthrough_config, workspace, clock=clock)
    first.apply_action({"kind": "grant-consent"})
    first.apply_action({"kind": "complete-task", "task_id": "isEvenNumberProblem"})
    first.submit_event({"category": "activity", "activity_category": "ui",
                        "event_id": "EditorUp"})
    nonce = first.client_nonce
    # no shutdown: simulate the process dying without cleanup
    del first

    resumed = make_session(walkthrough_config, workspace, clock=clock)
    try:
        view = resumed.scenario_view()
        assert view["consent"] == "granted"
        assert view["cursor"] == 1
        assert resumed.client_nonce == nonce
        assert any(getattr(r, "event_id", None) == "EditorUp"
                   for r in resumed.journal.read_all())
    finally:
        resumed.shutdown(flush=False)


def test_pause_and_submit_flush_to_the_server(walkthrough_config, workspace, tmp_path):
    store = Store(tmp_path / "server.db")
    server = TestClient(create_app(store))
    session = make_session(walkthrough_config, workspace,
                           transport=InProcessTransport(server))
    try:
        session.apply_action({"kind": "grant-consent"})
        session.submit_event({"category": "activity", "activity_category": "ui",
                              "event_id": "EditorUp"})
        session.apply_action({"kind": "pause"})
        token = session.session_token
        assert token
        uploaded = store.records_for_session(token)
        assert any(getattr(r, "event_id", None) == "EditorUp" for r in uploaded)
        assert session.journal.read_pending() == []

        # a second pause with nothing new pending uploads nothing extra
        session.apply_action({"kind": "pause"})
        assert store.records_for_session(token) == uploaded
    finally:
        session.shutdown(flush=False)
        store.close()


def test_flush_failure_never_breaks_the_scenario(walkthrough_config, workspace, monkeypatch):
    class DownTransport:
        def post(self, path, body, headers):
            raise ConnectionError("no route to host")

    # skip the real retry backoff so the failure path runs instantly
    import tracelab.daemon.session as session_module
    from tracelab.sync import SyncClient

    monkeypatch.setattr(
        session_module, "SyncClient",
        lambda transport: SyncClient(transport, sleep=lambda s: None, max_attempts=2))

    session = DaemonSession(walkthrough_config, workspace, transport=DownTransport(),
                            clock=FakeClock(), start_watcher=False)
    try:
        session.apply_action({"kind": "grant-consent"})
        session.submit_event({"category": "activity", "activity_category": "ui",
                              "event_id": "EditorUp"})
        view = session.apply_action({"kind": "pause"})  # flush fails inside
        assert view["consent"] == "granted"
        assert len(session.journal.read_pending()) == 1
    finally:
        session.shutdown(flush=False)


def test_events_before_consent_raise(walkthrough_config, workspace):
    session = make_session(walkthrough_config, workspace)
    try:
        with pytest.raises(NotConsented):
            session.submit_event({"category": "activity",
                                  "activity_category": "ui", "event_id": "X"})
    finally:
        session.shutdown(flush=False)
