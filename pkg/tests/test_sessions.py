import csv

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clickstream.features import USER_ACTION
from clickstream.sessions import (
    Session,
    browser_hash,
    idle_times,
    segment_sessions,
    sessions_by_browser,
    think_times,
    write_sessions_csv,
)
from clickstream.trace import BrowserId, HttpRecord

T0 = 1372636800000
MIN = 60_000


def test_think_times_examples():
    assert think_times([T0, T0 + 60_000, T0 + 90_000]) == [60.0, 30.0]
    assert think_times([T0]) == []
    with pytest.raises(ValueError):
        think_times([T0 + 5, T0])


def test_segment_examples():
    s = segment_sessions([T0, T0 + 10 * MIN, T0 + 50 * MIN])
    assert [x.action_count for x in s] == [2, 1]
    assert len(segment_sessions([T0, T0 + 30 * MIN])) == 1
    (one,) = segment_sessions([T0])
    assert one.duration == 0.0 and one.start_ts == one.end_ts
    assert segment_sessions([]) == []


@pytest.mark.parametrize("gap_ms,n_sessions", [(30 * MIN - 1000, 1), (30 * MIN, 1), (30 * MIN + 1000, 2)])
def test_boundary(gap_ms, n_sessions):
    assert len(segment_sessions([T0, T0 + gap_ms])) == n_sessions


def test_idle_times():
    a = Session(BrowserId("h", "u"), T0, T0, 1)
    b = Session(BrowserId("h", "u"), T0 + 3 * 3600_000, T0 + 3 * 3600_000, 1)
    assert idle_times([a, b]) == [10800.0]
    assert idle_times([a]) == []
    with pytest.raises(ValueError):
        idle_times([b, a])


def test_session_validation():
    with pytest.raises(ValueError):
        Session(BrowserId("h", "u"), 10, 5, 1)
    with pytest.raises(ValueError):
        Session(BrowserId("h", "u"), 10, 10, 0)


gaps = st.lists(st.integers(0, 4000_000), max_size=40)


def _times(deltas):
    ts, t = [T0], T0
    for d in deltas:
        t += d
        ts.append(t)
    return ts


@given(gaps, st.sampled_from([600.0, 1800.0, 3600.0]))
def test_segmentation_invariants(deltas, gap):
    ts = _times(deltas)
    sessions = segment_sessions(ts, gap)
    assert sum(s.action_count for s in sessions) == len(ts)
    pos = 0
    for s in sessions:
        members = ts[pos:pos + s.action_count]
        assert members[0] == s.start_ts and members[-1] == s.end_ts
        assert all(b - a <= gap * 1000 for a, b in zip(members, members[1:]))
        # re-running on a session's own actions leaves it whole
        assert segment_sessions(members, gap) == [s]
        pos += s.action_count
    assert all(idle > gap for idle in idle_times(sessions))


def test_sessions_by_browser_and_csv(tmp_path):
    def act(hh, t):
        return HttpRecord(T0 + t, hh, "Mozilla/5.0 (iPad)", "http://a.com/")
    acts = [act("b", 5), act("a", 0), act("a", 40 * MIN), act("b", 1)]
    out = sessions_by_browser(acts)
    assert [len(v) for v in out.values()] == [2, 1]
    assert list(out) == sorted(out)
    path = tmp_path / "s.csv"
    write_sessions_csv(path, [s for v in out.values() for s in v])
    rows = list(csv.DictReader(path.open()))
    assert rows[0]["device_class"] == "Tablet"
    assert rows[0]["user_agent_hash"] == browser_hash(BrowserId("a", "Mozilla/5.0 (iPad)"))
    assert [int(r["action_count"]) for r in rows] == [1, 1, 2]


def test_synthetic_think_times_mostly_short(default_trace):
    acts = [r for r, lab in zip(default_trace.records, default_trace.labels) if lab == USER_ACTION]
    deltas = []
    for browser_acts in _group(acts).values():
        deltas += think_times(browser_acts)
    assert sum(d < 60 for d in deltas) / len(deltas) > 0.6


def _group(acts):
    out: dict = {}
    for a in acts:
        out.setdefault(a.browser, []).append(a)
    return out
