"""Synthetic-session generator: legality, determinism, ratio shaping."""
import json

from tracelab import scenario as sm
from tracelab.journal import Journal
from tracelab.records import ActivityRecord, SnapshotRecord
from tracelab.simulate import simulate_study
from tracelab.stats import summary_counts


def test_recorded_action_scripts_replay_legally(walkthrough_config, tmp_path):
    # every simulated session logs the scenario actions it took; replaying
    # that script through the state machine must reach the finished state
    sessions = simulate_study(walkthrough_config, 5, seed=3, out_dir=tmp_path)
    for sim in sessions:
        script = json.loads(sim.actions_file.read_text())
        state = sm.init(walkthrough_config)
        for doc in script["actions"]:
            state = sm.advance(state, sm.StepAction.from_doc(doc), walkthrough_config, now_ms=0)
        assert state.finished(walkthrough_config)


def test_journals_are_readable_and_ordered(walkthrough_config, tmp_path):
    sessions = simulate_study(walkthrough_config, 2, seed=1, out_dir=tmp_path)
    for sim in sessions:
        journal = Journal(sim.directory, durable=False)
        records = journal.read_all()
        journal.close()
        assert not journal.last_corrupt_rows
        assert [r.seq for r in records] == list(range(1, len(records) + 1))
        timestamps = [r.timestamp for r in records]
        assert timestamps == sorted(timestamps)


def test_category_mix_follows_the_requested_shape(walkthrough_config, tmp_path):
    sessions = simulate_study(walkthrough_config, 4, seed=9, out_dir=tmp_path)
    pairs = []
    for sim in sessions:
        journal = Journal(sim.directory, durable=False)
        pairs.extend((sim.client_nonce, r) for r in journal.read_all())
        journal.close()
    counts = summary_counts(pairs)
    assert counts["participants"] == 4
    assert counts["activities"] > counts["snapshots"] > counts["hotkeys"] \
        > counts["run_debug"] > 0


def test_custom_ratios_are_respected(walkthrough_config, tmp_path):
    sessions = simulate_study(walkthrough_config, 1, seed=0, out_dir=tmp_path,
                              ratios={"ui": 4, "action": 4, "hotkey": 4,
                                      "run_debug": 4, "snapshots": 4})
    journal = Journal(sessions[0].directory, durable=False)
    records = journal.read_all()
    journal.close()
    snapshots = sum(isinstance(r, SnapshotRecord) for r in records)
    activities = sum(isinstance(r, ActivityRecord) for r in records)
    # four task-bearing steps at one record per category per step
    assert snapshots == 4
    assert activities >= 12
