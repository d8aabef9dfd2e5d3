"""Think-times, 30-minute browsing sessions and inter-session idle time."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .trace import BrowserId, DeviceClass, HttpRecord, classify_device

DEFAULT_GAP = 1800.0


@dataclass(frozen=True)
class Session:
    browser: BrowserId
    start_ts: int
    end_ts: int
    action_count: int

    def __post_init__(self):
        if self.end_ts < self.start_ts:
            raise ValueError("session ends before it starts")
        if self.action_count < 1:
            raise ValueError("a session holds at least one action")

    @property
    def duration(self) -> float:
        """Seconds; a single-action session lasts 0 s."""
        return (self.end_ts - self.start_ts) / 1000.0


def _timestamps(actions: Sequence) -> list[int]:
    return [a.timestamp if isinstance(a, HttpRecord) else int(a) for a in actions]


def think_times(actions: Sequence) -> list[float]:
    """Seconds between consecutive user-actions (records or epoch-ms ints)."""
    ts = _timestamps(actions)
    out = []
    for prev, cur in zip(ts, ts[1:]):
        if cur < prev:
            raise ValueError("actions not sorted by timestamp")
        out.append((cur - prev) / 1000.0)
    return out


def segment_sessions(actions: Sequence, gap: float = DEFAULT_GAP,
                     browser: BrowserId | None = None) -> list[Session]:
    """Split one browser's sorted actions wherever the think-time exceeds ``gap`` seconds.

    A think-time of exactly ``gap`` keeps the session going.
    """
    if not actions:
        return []
    if browser is None:
        first = actions[0]
        browser = first.browser if isinstance(first, HttpRecord) else BrowserId("", "")
    ts = _timestamps(actions)
    gap_ms = gap * 1000.0
    sessions = []
    start = prev = ts[0]
    count = 1
    for t in ts[1:]:
        if t < prev:
            raise ValueError("actions not sorted by timestamp")
        if t - prev > gap_ms:
            sessions.append(Session(browser, start, prev, count))
            start, count = t, 0
        count += 1
        prev = t
    sessions.append(Session(browser, start, prev, count))
    return sessions


def idle_times(sessions: Sequence[Session]) -> list[float]:
    """Seconds from the end of each session to the start of the next."""
    out = []
    for prev, cur in zip(sessions, sessions[1:]):
        if cur.start_ts < prev.start_ts:
            raise ValueError("sessions not sorted by start")
        out.append((cur.start_ts - prev.end_ts) / 1000.0)
    return out


def sessions_by_browser(actions: Iterable[HttpRecord], gap: float = DEFAULT_GAP) -> dict[BrowserId, list[Session]]:
    """Sessions for every browser, computed over each browser's full timeline."""
    groups: dict[BrowserId, list[HttpRecord]] = {}
    for a in actions:
        groups.setdefault(a.browser, []).append(a)
    out = {}
    for browser in sorted(groups):
        acts = sorted(groups[browser], key=lambda r: r.timestamp)
        out[browser] = segment_sessions(acts, gap, browser)
    return out


def browser_hash(browser: BrowserId) -> str:
    text = browser.household_id + "\t" + browser.user_agent
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]


def write_sessions_csv(path, sessions: Iterable[Session], device_rules=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["household_id", "user_agent_hash", "device_class", "start_ts", "end_ts", "action_count"])
        for s in sessions:
            device: DeviceClass = classify_device(s.browser.user_agent, device_rules)
            writer.writerow([s.browser.household_id, browser_hash(s.browser), device.value,
                             s.start_ts, s.end_ts, s.action_count])
