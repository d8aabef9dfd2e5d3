"""Parent/child/sibling linking and the 17 per-request features."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .trace import HttpRecord, normalize_url

USER_ACTION = "user_action"
AUTOMATIC = "automatic"
LABELS = (AUTOMATIC, USER_ACTION)

MISSING_CATEGORY = "MISSING"
DEFAULT_WINDOW = 30.0

# Feature name -> kind; order is the canonical column order.
FEATURE_KINDS = {
    "num_children": "numeric",
    "content_type": "categorical",
    "dt_prev_request": "numeric",
    "status_code": "categorical",
    "url_length": "numeric",
    "dt_sibling": "numeric",
    "ads_in_url": "boolean",
    "dt_parent": "numeric",
    "content_length": "numeric",
    "parent_status_code": "categorical",
    "has_referer": "boolean",
    "max_dt_child": "numeric",
    "parent_content_type": "categorical",
    "ads_in_referer": "boolean",
    "max_length_child": "numeric",
    "min_dt_child": "numeric",
    "parent_content_length": "numeric",
}
FEATURE_NAMES = tuple(FEATURE_KINDS)


@dataclass(eq=False)
class LinkedRequest:
    record: HttpRecord
    parent: LinkedRequest | None = None
    children: list[LinkedRequest] = field(default_factory=list)
    prev_request_ts: int | None = None
    prev_sibling_ts: int | None = None

    def __repr__(self):
        return (f"LinkedRequest({self.record.url!r}, t={self.record.timestamp}, "
                f"parent={self.parent.record.url if self.parent else None!r}, "
                f"children={len(self.children)})")


@dataclass(frozen=True)
class FeatureVector:
    """Numeric fields use ``None`` for MISSING; categorical ones use ``"MISSING"``."""

    num_children: int
    content_type: str
    dt_prev_request: float | None
    status_code: str
    url_length: int
    dt_sibling: float | None
    ads_in_url: bool
    dt_parent: float | None
    content_length: int | None
    parent_status_code: str
    has_referer: bool
    max_dt_child: float | None
    parent_content_type: str
    ads_in_referer: bool
    max_length_child: int | None
    min_dt_child: float | None
    parent_content_length: int | None
    label: str | None = None

    def values(self) -> tuple:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    def with_label(self, label: str | None) -> FeatureVector:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["label"] = label
        return FeatureVector(**data)


@dataclass(frozen=True)
class AdBlacklist:
    terms: frozenset[str]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("ad blacklist must not be empty")
        object.__setattr__(self, "terms", frozenset(t.lower() for t in self.terms))

    def matches(self, text: str | None) -> bool:
        if text is None:
            return False
        lowered = text.lower()
        return any(term in lowered for term in self.terms)

    @classmethod
    def load(cls, path=None) -> AdBlacklist:
        if path is None:
            text = resources.files("clickstream").joinpath("data/ad_terms.txt").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        terms = [t.strip() for t in text.splitlines() if t.strip() and not t.startswith("#")]
        return cls(frozenset(terms))


def link_requests(records: Sequence[HttpRecord], window: float = DEFAULT_WINDOW) -> list[LinkedRequest]:
    """Resolve parent, children and sibling relations for one browser.

    ``records`` must be sorted by timestamp. The parent of a request is the
    most recent earlier request whose web page equals the request's referer
    page. A request only counts as a child of its parent when it arrives
    within ``window`` seconds of it.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    window_ms = window * 1000.0
    linked = [LinkedRequest(rec) for rec in records]
    last_by_page: dict[str, int] = {}
    last_child: dict[int, int] = {}
    prev_ts = None
    for i, rec in enumerate(records):
        if prev_ts is not None and rec.timestamp < prev_ts:
            raise ValueError(f"records not sorted by timestamp at position {i}")
        node = linked[i]
        node.prev_request_ts = prev_ts
        if rec.referer is not None:
            p = last_by_page.get(normalize_url(rec.referer))
            if p is not None:
                parent = linked[p]
                node.parent = parent
                s = last_child.get(p)
                if s is not None:
                    node.prev_sibling_ts = records[s].timestamp
                last_child[p] = i
                if rec.timestamp - parent.record.timestamp <= window_ms:
                    parent.children.append(node)
        # registered after parent lookup so a request never parents itself
        last_by_page[normalize_url(rec.url)] = i
        prev_ts = rec.timestamp
    return linked


def _seconds(later: int, earlier: int | None) -> float | None:
    return None if earlier is None else (later - earlier) / 1000.0


def _category(value) -> str:
    return MISSING_CATEGORY if value is None else str(value)


def extract_features(linked: Sequence[LinkedRequest], ads: AdBlacklist | None = None) -> list[FeatureVector]:
    if ads is None:
        ads = DEFAULT_ADS
    out = []
    for node in linked:
        rec = node.record
        ts = rec.timestamp
        parent = node.parent.record if node.parent is not None else None
        child_dts = [(c.record.timestamp - ts) / 1000.0 for c in node.children]
        child_lens = [len(c.record.url) for c in node.children]
        out.append(FeatureVector(
            num_children=len(node.children),
            content_type=_category(rec.content_type),
            dt_prev_request=_seconds(ts, node.prev_request_ts),
            status_code=_category(rec.status_code),
            url_length=len(rec.url),
            dt_sibling=_seconds(ts, node.prev_sibling_ts),
            ads_in_url=ads.matches(rec.url),
            dt_parent=_seconds(ts, parent.timestamp if parent else None),
            content_length=rec.content_length,
            parent_status_code=_category(parent.status_code if parent else None),
            has_referer=rec.referer is not None,
            max_dt_child=max(child_dts) if child_dts else None,
            parent_content_type=_category(parent.content_type if parent else None),
            ads_in_referer=ads.matches(rec.referer),
            max_length_child=max(child_lens) if child_lens else None,
            min_dt_child=min(child_dts) if child_dts else None,
            parent_content_length=parent.content_length if parent else None,
        ))
    return out


DEFAULT_ADS = AdBlacklist.load()


def features_for_records(records: Sequence[HttpRecord], ads: AdBlacklist | None = None,
                         window: float = DEFAULT_WINDOW,
                         labels: Sequence[str] | None = None) -> list[FeatureVector]:
    """Feature vectors for a mixed-browser trace, returned in input order."""
    out: list[FeatureVector | None] = [None] * len(records)
    for idx in browser_partitions(records).values():
        vectors = extract_features(link_requests([records[i] for i in idx], window), ads)
        for i, vec in zip(idx, vectors):
            out[i] = vec if labels is None else vec.with_label(labels[i])
    return out  # type: ignore[return-value]


def browser_partitions(records: Sequence[HttpRecord]) -> dict:
    """Indices of each browser's records, sorted by (timestamp, input order)."""
    groups: dict = {}
    for i, rec in enumerate(records):
        groups.setdefault(rec.browser, []).append(i)
    for idx in groups.values():
        idx.sort(key=lambda i: records[i].timestamp)
    return groups


# --------------------------------------------------------------------------
# CSV dump
# --------------------------------------------------------------------------

def _cell(value) -> str:
    if value is None or value == MISSING_CATEGORY:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(text: str, kind: str):
    if kind == "categorical":
        return text or MISSING_CATEGORY
    if kind == "boolean":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean cell {text!r}")
        return text == "true"
    if text == "":
        return None
    return float(text) if any(c in text for c in ".eEn") else int(text)


def write_feature_csv(path, vectors: Iterable[FeatureVector]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURE_NAMES + ("label",))
        for vec in vectors:
            writer.writerow([_cell(v) for v in vec.values()] + [vec.label or ""])


def read_feature_csv(path) -> list[FeatureVector]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[:len(FEATURE_NAMES)]) != FEATURE_NAMES:
            raise ValueError("feature CSV header does not match the feature set")
        out = []
        for row in reader:
            values = {name: _parse_cell(cell, FEATURE_KINDS[name]) for name, cell in zip(FEATURE_NAMES, row)}
            label = row[len(FEATURE_NAMES)] if len(row) > len(FEATURE_NAMES) else ""
            out.append(FeatureVector(**values, label=label or None))
        return out
