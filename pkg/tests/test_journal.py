from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from tracelab.journal import FILES, Journal
from tracelab.records import (
    ActivityRecord,
    FocusRecord,
    SnapshotRecord,
    SurveyResponseRecord,
    ToolWindowRecord,
    content_digest,
)


def snapshot(content: str, ts: int = 0, file: str = "a.kt") -> SnapshotRecord:
    return SnapshotRecord(seq=0, timestamp=ts, file=file, content=content,
                          digest=content_digest(content))


def sample_records():
    return [
        snapshot('a,"b"\nc', ts=1),
        ActivityRecord(seq=0, timestamp=2, category="hotkey", event_id="Undo",
                       detail={"keys": "ctrl+z"}),
        FocusRecord(seq=0, timestamp=3, file="a.kt", kind="focus"),
        ToolWindowRecord(seq=0, timestamp=4, window_id="Build", kind="opened"),
        SurveyResponseRecord(seq=0, timestamp=5, survey_id="s1", answers={"q0": "easy"}),
    ]


def test_append_assigns_increasing_seq(tmp_path):
    journal = Journal(tmp_path)
    seqs = [journal.append(r) for r in sample_records()]
    assert seqs == [1, 2, 3, 4, 5]


def test_rfc4180_content_round_trips_byte_exact(tmp_path):
    journal = Journal(tmp_path)
    tricky = 'a,"b"\nc'
    journal.append(snapshot(tricky))
    journal.close()
    reopened = Journal(tmp_path)
    (record,) = reopened.read_pending()
    assert record.content == tricky
    assert record.digest == content_digest(tricky)


def test_category_separation(tmp_path):
    journal = Journal(tmp_path)
    for record in sample_records():
        journal.append(record)
    journal.close()
    for name in FILES.values():
        lines = (tmp_path / name).read_text().strip().splitlines()
        assert len(lines) >= 2  # header + exactly one record


def test_read_pending_order_matches_append_order(tmp_path):
    journal = Journal(tmp_path)
    expected = []
    rng = random.Random(1)
    pool = sample_records()
    for i in range(500):
        record = rng.choice(pool)
        seq = journal.append(record)
        expected.append(seq)
    pending = journal.read_pending()
    assert [r.seq for r in pending] == expected
    assert len(pending) == 500


def test_mark_flushed_excludes_prefix(tmp_path):
    journal = Journal(tmp_path)
    for record in sample_records() * 20:
        journal.append(record)
    journal.mark_flushed(50)
    pending = journal.read_pending()
    assert [r.seq for r in pending] == list(range(51, 101))


def test_mark_flushed_zero_is_noop(tmp_path):
    journal = Journal(tmp_path)
    journal.mark_flushed(0)
    assert journal.read_pending() == []


def test_mark_flushed_beyond_max_rejected(tmp_path):
    journal = Journal(tmp_path)
    journal.append(snapshot("x"))
    with pytest.raises(ValueError):
        journal.mark_flushed(99)


def test_watermark_never_regresses(tmp_path):
    journal = Journal(tmp_path)
    for record in sample_records():
        journal.append(record)
    journal.mark_flushed(4)
    journal.mark_flushed(2)
    assert journal.flush_watermark() == 4


def test_seq_continues_after_reopen_without_gaps(tmp_path):
    journal = Journal(tmp_path)
    for record in sample_records():
        journal.append(record)
    journal.close()
    reopened = Journal(tmp_path)
    assert reopened.append(snapshot("later")) == 6


def test_crash_between_append_and_flush_resurfaces_record(tmp_path):
    journal = Journal(tmp_path)
    journal.append(snapshot("x"))
    journal.close()  # "crash" before mark_flushed
    reopened = Journal(tmp_path)
    assert len(reopened.read_pending()) == 1


def test_flush_survives_reopen(tmp_path):
    journal = Journal(tmp_path)
    journal.append(snapshot("x"))
    journal.mark_flushed(1)
    journal.close()
    assert Journal(tmp_path).read_pending() == []


def test_corrupt_row_skipped_and_reported(tmp_path):
    journal = Journal(tmp_path)
    for i in range(100):
        journal.append(ActivityRecord(seq=0, timestamp=i, category="action",
                                      event_id=f"e{i}", detail={}))
    journal.close()
    path = tmp_path / "activity.csv"
    lines = path.read_text().splitlines(keepends=True)
    lines[50] = "not,a,valid,row\n"
    path.write_text("".join(lines))
    reopened = Journal(tmp_path)
    pending = reopened.read_pending()
    assert len(pending) == 99
    assert len(reopened.last_corrupt_rows) == 1
    assert reopened.last_corrupt_rows[0].file == "activity.csv"
    assert reopened.last_corrupt_rows[0].line == 51


def test_partial_tail_row_is_sealed_and_reported(tmp_path):
    journal = Journal(tmp_path)
    journal.append(snapshot("first"))
    journal.append(snapshot("second"))
    journal.close()
    path = tmp_path / "snapshots.csv"
    data = path.read_bytes()
    path.write_bytes(data[:-7])  # truncate inside the last row
    reopened = Journal(tmp_path)
    pending = reopened.read_pending()
    assert [r.content for r in pending] == ["first"]
    # the sealed partial row must not block further appends
    assert reopened.append(snapshot("third")) == 2
    assert [r.content for r in reopened.read_pending()] == ["first", "third"]


@settings(max_examples=50, deadline=None)
@given(content=st.text(), event=st.text(min_size=1).filter(lambda s: s.strip()),
       detail_value=st.text())
def test_unicode_round_trip_property(tmp_path_factory, content, event, detail_value):
    directory = tmp_path_factory.mktemp("journal")
    journal = Journal(directory, durable=False)
    journal.append(snapshot(content))
    journal.append(ActivityRecord(seq=0, timestamp=0, category="ui", event_id=event,
                                  detail={"v": detail_value}))
    journal.close()
    reopened = Journal(directory)
    records = reopened.read_pending()
    assert reopened.last_corrupt_rows == []
    assert records[0].content == content
    assert records[1].event_id == event
    assert records[1].detail == {"v": detail_value}
