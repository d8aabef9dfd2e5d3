"""Label log records as user-actions by matching browser-history exports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .features import AUTOMATIC, USER_ACTION
from .trace import HttpRecord, normalize_url

DEFAULT_TOLERANCE = 10.0


@dataclass(frozen=True)
class HistoryEntry:
    timestamp: int
    url: str
    transition: str | None = None

    def __post_init__(self):
        if self.timestamp <= 0:
            raise ValueError("history timestamp must be positive")
        if not self.url:
            raise ValueError("history url must be non-empty")


@dataclass
class MatchReport:
    matched: int = 0
    unmatched_history: list[int] = field(default_factory=list)
    via_redirect: int = 0
    pairs: list[tuple[int, int]] = field(default_factory=list)  # (history index, record index)


def _is_redirect(status: int | None) -> bool:
    return status is not None and 300 <= status < 400


def redirect_successors(records: Sequence[HttpRecord], tolerance: float) -> list[int | None]:
    """Index of the next request in a redirection chain, per record.

    A 3xx record continues to the first later record within ``tolerance``
    seconds whose referer equals the 3xx record's referer or URL (web-page
    level). A record without a status code continues only to the immediately
    following record, and only when that record cites it as referer.
    """
    tol_ms = tolerance * 1000.0
    pages = [normalize_url(r.url) for r in records]
    refs = [normalize_url(r.referer) if r.referer else None for r in records]
    succ: list[int | None] = [None] * len(records)
    for i, rec in enumerate(records):
        if _is_redirect(rec.status_code):
            for j in range(i + 1, len(records)):
                if records[j].timestamp - rec.timestamp > tol_ms:
                    break
                if refs[j] is not None and refs[j] in (refs[i], pages[i]) or refs[j] is None and refs[i] is None:
                    succ[i] = j
                    break
        elif rec.status_code is None and i + 1 < len(records):
            j = i + 1
            if records[j].timestamp - rec.timestamp <= tol_ms and refs[j] == pages[i]:
                succ[i] = j
    return succ


def chain_terminal(succ: list[int | None], i: int) -> int:
    seen = {i}
    while succ[i] is not None and succ[i] not in seen:
        i = succ[i]
        seen.add(i)
    return i


def match_history(history: Sequence[HistoryEntry], records: Sequence[HttpRecord],
                  tolerance: float = DEFAULT_TOLERANCE) -> tuple[list[str], MatchReport]:
    """Label each record ``user_action`` or ``automatic``.

    A history entry matches a record when their web pages are equal and their
    timestamps differ by at most ``tolerance`` seconds. When the matched
    record starts or sits inside a redirection chain, the label goes to the
    chain's last request. Each history entry labels at most one record and
    each record is claimed at most once; the nearest pairs in time win.
    """
    _check_sorted([h.timestamp for h in history], "history")
    _check_sorted([r.timestamp for r in records], "records")
    tol_ms = tolerance * 1000.0
    succ = redirect_successors(records, tolerance)
    by_page: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        by_page.setdefault(normalize_url(rec.url), []).append(i)

    candidates = []
    for h_idx, h in enumerate(history):
        for i in by_page.get(normalize_url(h.url), ()):
            delta = abs(records[i].timestamp - h.timestamp)
            if delta <= tol_ms:
                term = chain_terminal(succ, i)
                candidates.append((delta, h_idx, term, term != i))
    candidates.sort()

    labels = [AUTOMATIC] * len(records)
    report = MatchReport()
    used_h: set[int] = set()
    used_r: set[int] = set()
    for delta, h_idx, term, redirected in candidates:
        if h_idx in used_h or term in used_r:
            continue
        used_h.add(h_idx)
        used_r.add(term)
        labels[term] = USER_ACTION
        report.pairs.append((h_idx, term))
        report.matched += 1
        report.via_redirect += redirected
    report.pairs.sort()
    report.unmatched_history = [i for i in range(len(history)) if i not in used_h]
    return labels, report


def _check_sorted(ts: list[int], what: str) -> None:
    for a, b in zip(ts, ts[1:]):
        if b < a:
            raise ValueError(f"{what} not sorted by timestamp")


def parse_history_line(line: str, lineno: int | None = None) -> HistoryEntry:
    cols = line.rstrip("\r\n").split("\t")
    if len(cols) not in (2, 3):
        raise ValueError(f"line {lineno}: history needs timestamp_ms, url[, transition]")
    transition = cols[2] if len(cols) == 3 and cols[2] not in ("", "-") else None
    return HistoryEntry(int(cols[0]), cols[1], transition)


def read_history(path) -> list[HistoryEntry]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip() and not line.startswith("#"):
                out.append(parse_history_line(line, lineno))
    return out


def write_history(path, entries: Sequence[HistoryEntry]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h in entries:
            fh.write(f"{h.timestamp}\t{h.url}\t{h.transition or '-'}\n")
