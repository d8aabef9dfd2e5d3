"""HTTP log records: parsing, URL/domain normalization, device classes.

The on-disk log is a flat tab-separated file, one request per line::

    timestamp_ms  household_id  user_agent  url  referer  content_type  content_length  status_code

Optional columns use ``-`` for "absent". Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import enum
import functools
import ipaddress
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence
from urllib.parse import urlsplit

ABSENT = "-"
LOG_COLUMNS = (
    "timestamp_ms",
    "household_id",
    "user_agent",
    "url",
    "referer",
    "content_type",
    "content_length",
    "status_code",
)


class LogParseError(ValueError):
    """A log line could not be parsed. ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


class BrowserId(NamedTuple):
    household_id: str
    user_agent: str


@dataclass(frozen=True)
class HttpRecord:
    timestamp: int
    household_id: str
    user_agent: str
    url: str
    referer: str | None = None
    content_type: str | None = None
    content_length: int | None = None
    status_code: int | None = None

    def __post_init__(self):
        if self.timestamp <= 0:
            raise ValueError(f"timestamp must be positive, got {self.timestamp}")
        if not self.url:
            raise ValueError("url must be non-empty")
        if self.referer is not None and not self.referer:
            raise ValueError("referer, when present, must be non-empty")
        if self.content_length is not None and self.content_length < 0:
            raise ValueError("content_length must be non-negative")
        if self.status_code is not None and not 100 <= self.status_code <= 599:
            raise ValueError(f"status_code out of range: {self.status_code}")

    @property
    def browser(self) -> BrowserId:
        return BrowserId(self.household_id, self.user_agent)


class DeviceClass(str, enum.Enum):
    PC = "PC"
    SMARTPHONE = "Smartphone"
    TABLET = "Tablet"
    OTHER = "Other"


# --------------------------------------------------------------------------
# Log format
# --------------------------------------------------------------------------

def _optional(text: str) -> str | None:
    return None if text in ("", ABSENT) else text


def _optional_int(text: str, column: str, lineno: int | None) -> int | None:
    text = _optional(text)
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        raise LogParseError(f"non-integer {column}: {text!r}", lineno) from None


def parse_log_line(line: str, schema: Sequence[str] = LOG_COLUMNS, lineno: int | None = None) -> HttpRecord:
    """Parse one tab-separated log line into an :class:`HttpRecord`.

    ``schema`` gives the column order; it must be a permutation of
    :data:`LOG_COLUMNS`.
    """
    cols = line.rstrip("\r\n").split("\t")
    if len(cols) != len(schema):
        raise LogParseError(f"expected {len(schema)} columns, got {len(cols)}", lineno)
    raw = dict(zip(schema, cols))
    try:
        ts = int(raw["timestamp_ms"])
    except ValueError:
        raise LogParseError(f"malformed timestamp: {raw['timestamp_ms']!r}", lineno) from None
    if _optional(raw["url"]) is None:
        raise LogParseError("url is required", lineno)
    try:
        return HttpRecord(
            timestamp=ts,
            household_id=raw["household_id"],
            user_agent=raw["user_agent"],
            url=raw["url"],
            referer=_optional(raw["referer"]),
            content_type=_optional(raw["content_type"]),
            content_length=_optional_int(raw["content_length"], "content_length", lineno),
            status_code=_optional_int(raw["status_code"], "status_code", lineno),
        )
    except LogParseError:
        raise
    except ValueError as exc:
        raise LogParseError(str(exc), lineno) from None


# text columns where the absent marker is read back as None
_NULLABLE_TEXT = ("url", "referer", "content_type")


def format_log_line(record: HttpRecord, schema: Sequence[str] = LOG_COLUMNS) -> str:
    """Serialize a record to one log line (no trailing newline)."""
    values = {
        "timestamp_ms": str(record.timestamp),
        "household_id": record.household_id,
        "user_agent": record.user_agent,
        "url": record.url,
        "referer": ABSENT if record.referer is None else record.referer,
        "content_type": ABSENT if record.content_type is None else record.content_type,
        "content_length": ABSENT if record.content_length is None else str(record.content_length),
        "status_code": ABSENT if record.status_code is None else str(record.status_code),
    }
    out = []
    for col in schema:
        text = values[col]
        if "\t" in text or "\n" in text or "\r" in text:
            raise ValueError(f"{col} contains a tab or newline and cannot be serialized")
        if text == ABSENT and col in _NULLABLE_TEXT and getattr(record, col) is not None:
            raise ValueError(f"{col} value {ABSENT!r} would read back as absent")
        out.append(text)
    return "\t".join(out)


def iter_log(lines: Iterable[str], schema: Sequence[str] = LOG_COLUMNS,
             errors: str = "raise", labels: bool = False) -> Iterator[tuple[int, HttpRecord, str | None]]:
    """Yield ``(lineno, record, label)`` for each data line.

    With ``labels=True`` a trailing label column is accepted (and required).
    ``errors="skip"`` drops malformed lines instead of raising; the caller can
    compare line numbers to count skips.
    """
    width = len(schema)
    for lineno, line in enumerate(lines, start=1):
        stripped = line.rstrip("\r\n")
        if not stripped or stripped.startswith("#"):
            continue
        label = None
        try:
            if labels:
                body, sep, label = stripped.rpartition("\t")
                if not sep or body.count("\t") != width - 1:
                    raise LogParseError(f"expected {width} columns plus a label", lineno)
                stripped = body
            record = parse_log_line(stripped, schema, lineno)
        except LogParseError:
            if errors == "skip":
                continue
            raise
        yield lineno, record, label


def read_log(path, schema: Sequence[str] = LOG_COLUMNS, errors: str = "raise") -> list[HttpRecord]:
    with open(path, encoding="utf-8") as fh:
        return [rec for _, rec, _ in iter_log(fh, schema, errors)]


def read_labeled_log(path, schema: Sequence[str] = LOG_COLUMNS) -> tuple[list[HttpRecord], list[str]]:
    records, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for _, rec, label in iter_log(fh, schema, labels=True):
            records.append(rec)
            labels.append(label)
    return records, labels


def write_log(path, records: Iterable[HttpRecord], labels: Iterable[str] | None = None,
              schema: Sequence[str] = LOG_COLUMNS) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if labels is None:
            for rec in records:
                fh.write(format_log_line(rec, schema) + "\n")
        else:
            for rec, label in zip(records, labels, strict=True):
                fh.write(format_log_line(rec, schema) + "\t" + label + "\n")


# --------------------------------------------------------------------------
# URLs and domains
# --------------------------------------------------------------------------

def normalize_url(url: str) -> str:
    """Web page of a URL: everything before the first ``?`` or ``#``."""
    if not url:
        raise ValueError("url must be non-empty")
    cut = len(url)
    for ch in "?#":
        pos = url.find(ch)
        if pos != -1 and pos < cut:
            cut = pos
    return url[:cut]


def _read_entries(lines: Iterable[str]) -> list[str]:
    out = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def load_suffix_list(path=None) -> frozenset[str]:
    """Public suffixes, one per line. ``None`` loads the bundled list."""
    if path is None:
        text = resources.files("clickstream").joinpath("data/public_suffixes.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(s.lower().strip(".") for s in _read_entries(text.splitlines()))


DEFAULT_SUFFIXES = load_suffix_list()


def url_host(url: str) -> str:
    """Lower-cased host of ``url`` without port or trailing dot."""
    parts = urlsplit(url)
    if not parts.netloc and "://" not in url:
        parts = urlsplit("//" + url)
    try:
        host = parts.hostname
    except ValueError:
        host = None
    if not host:
        raise ValueError(f"no host component in {url!r}")
    return host.rstrip(".")


def _is_address(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
    except ValueError:
        return False
    return True


@functools.lru_cache(maxsize=65536)
def _host_domain(host: str, suffixes: frozenset[str]) -> str:
    if _is_address(host):
        return host
    labels = host.split(".")
    if len(labels) < 2:
        return host
    # longest matching suffix first
    for i in range(len(labels)):
        if ".".join(labels[i:]) in suffixes:
            return ".".join(labels[i - 1:]) if i > 0 else host
    return ".".join(labels[-2:])


def extract_domain(url: str, suffixes: Iterable[str] | None = None) -> str:
    """Registrable domain of ``url`` (public suffix plus one label).

    IP literals and single-label hosts come back verbatim. With an empty
    suffix list the last two labels are used.
    """
    if suffixes is None:
        suffixes = DEFAULT_SUFFIXES
    elif not isinstance(suffixes, frozenset):
        suffixes = frozenset(suffixes)
    return _host_domain(url_host(url), suffixes)


def domain_of(url: str, suffixes: Iterable[str] | None = None) -> str:
    """Like :func:`extract_domain` but never raises: hostless text maps to itself."""
    try:
        return extract_domain(url, suffixes)
    except ValueError:
        return url


# --------------------------------------------------------------------------
# Device classes
# --------------------------------------------------------------------------

DeviceRules = list[tuple["re.Pattern[str]", DeviceClass]]


def parse_device_rules(lines: Iterable[str]) -> DeviceRules:
    rules = []
    for entry in _read_entries(lines):
        pattern, sep, cls = entry.rpartition("\t")
        if not sep:
            raise ValueError(f"device rule needs '<regex>\\t<class>': {entry!r}")
        rules.append((re.compile(pattern), DeviceClass(cls.strip())))
    return rules


def load_device_rules(path=None) -> DeviceRules:
    if path is None:
        text = resources.files("clickstream").joinpath("data/device_rules.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_device_rules(text.splitlines())


DEFAULT_DEVICE_RULES = load_device_rules()


def classify_device(user_agent: str, rules: Sequence[tuple] | None = None) -> DeviceClass:
    """First rule whose pattern is found in ``user_agent`` wins; else Other.

    Rules are ``(pattern, class)`` pairs; patterns may be strings (treated as
    regular expressions) or compiled patterns.
    """
    if rules is None:
        rules = DEFAULT_DEVICE_RULES
    for pattern, cls in rules:
        if isinstance(pattern, str):
            found = re.search(pattern, user_agent) is not None
        else:
            found = pattern.search(user_agent) is not None
        if found:
            return DeviceClass(cls)
    return DeviceClass.OTHER


# --------------------------------------------------------------------------
# Per-browser grouping and referer artifacts
# --------------------------------------------------------------------------

def group_by_browser(records: Iterable[HttpRecord]) -> dict[BrowserId, list[HttpRecord]]:
    """Partition records by browser, each partition sorted by (timestamp, input order)."""
    groups: dict[BrowserId, list[HttpRecord]] = {}
    for rec in records:
        groups.setdefault(rec.browser, []).append(rec)
    for key, recs in groups.items():
        # sort() is stable, so equal timestamps keep input order
        recs.sort(key=lambda r: r.timestamp)
    return groups


def referer_missing_ratio(records: Sequence[HttpRecord]) -> float:
    if not records:
        raise ValueError("referer_missing_ratio of an empty sequence")
    missing = sum(1 for r in records if r.referer is None)
    return missing / len(records)


def filter_abnormal_browsers(records: Sequence[HttpRecord], threshold: float = 0.5
                             ) -> tuple[list[HttpRecord], dict[BrowserId, float]]:
    """Drop browsers whose missing-referer ratio is at or above ``threshold``.

    Returns the surviving records (input order kept) and a report mapping each
    removed browser to its ratio.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    groups: dict[BrowserId, list[HttpRecord]] = {}
    for rec in records:
        groups.setdefault(rec.browser, []).append(rec)
    removed = {}
    for browser, recs in groups.items():
        ratio = referer_missing_ratio(recs)
        if ratio >= threshold:
            removed[browser] = ratio
    kept = [r for r in records if r.browser not in removed]
    return kept, removed
