"""Synthetic labeled HTTP traces with known user-actions and clickstreams.

Each browser runs a sequence of sessions. A session is a chain of page
visits (user-actions); each visit fans out into embedded objects, some of
which are HTML frames with their own objects. Sessions may start on a search
engine or social network page and then follow links inside a content
domain. Everything is derived from one seed.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import AUTOMATIC, USER_ACTION
from .graph import ClickstreamGraph, build_graphs
from .groundtruth import HistoryEntry
from .trace import BrowserId, DeviceClass, HttpRecord, domain_of, normalize_url

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BASE_EPOCH_MS = 1372636800000  # 2013-07-01T00:00:00Z

USER_AGENTS = {
    DeviceClass.PC: (
        "Mozilla/5.0 (Windows NT 6.1; WOW64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/27.0.1453.116 Safari/537.36",
        "Mozilla/5.0 (Windows NT 6.1; rv:22.0) Gecko/20100101 Firefox/22.0",
        "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_8_4) AppleWebKit/536.30.1 (KHTML, like Gecko) Version/6.0.5 Safari/536.30.1",
        "Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:22.0) Gecko/20100101 Firefox/22.0",
    ),
    DeviceClass.SMARTPHONE: (
        "Mozilla/5.0 (iPhone; CPU iPhone OS 6_1_4 like Mac OS X) AppleWebKit/536.26 (KHTML, like Gecko) Version/6.0 Mobile/10B350 Safari/8536.25",
        "Mozilla/5.0 (Linux; Android 4.2.2; Nexus 4 Build/JDQ39) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/27.0.1453.90 Mobile Safari/537.36",
    ),
    DeviceClass.TABLET: (
        "Mozilla/5.0 (iPad; CPU OS 6_1_3 like Mac OS X) AppleWebKit/536.26 (KHTML, like Gecko) Version/6.0 Mobile/10B329 Safari/8536.25",
        "Mozilla/5.0 (Linux; Android 4.2.2; Nexus 7 Build/JDQ39) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/27.0.1453.90 Safari/537.36",
    ),
    DeviceClass.OTHER: (
        "Mozilla/5.0 (SMART-TV; NetCast) AppleWebKit/534.26 (KHTML, like Gecko) Version/5.0 Safari/534.26",
        "Opera/9.80 (Nintendo Wii; U; ; 3642; en) Presto/2.9.168 Version/11.50",
    ),
}

# (landing URL prefix, query template); the token is appended
SEARCH_ENGINES = (
    ("http://www.google.com/search", "?q="),
    ("http://www.bing.com/search", "?q="),
    ("http://search.yahoo.com/search", "?p="),
)
SOCIAL_NETWORKS = (
    ("http://www.facebook.com/", ""),
    ("http://twitter.com/", ""),
    ("http://www.reddit.com/r/news/", ""),
)

OBJECT_TYPES = (
    # content type, extension, median bytes, weight
    ("image/jpeg", "jpg", 18000, 0.38),
    ("image/png", "png", 6000, 0.17),
    ("image/gif", "gif", 900, 0.08),
    ("text/css", "css", 12000, 0.08),
    ("application/javascript", "js", 25000, 0.17),
    ("application/json", "json", 1500, 0.07),
    ("font/woff", "woff", 30000, 0.05),
)


@dataclass
class GenConfig:
    """Generator parameters. Counts marked geometric are means of geometric laws."""

    seed: int = 0
    n_browsers: int = 40
    start_ms: int = BASE_EPOCH_MS
    device_mix: dict = field(default_factory=lambda: {"PC": 0.5, "Smartphone": 0.3, "Tablet": 0.15, "Other": 0.05})
    sessions_per_browser: float = 3.0  # geometric, >= 1
    actions_per_session: float = 9.0  # geometric, >= 1
    children_mean: float = 49.0  # geometric, >= 0, includes frame objects
    frame_prob: float = 0.04  # share of objects that are HTML frames
    frame_children_mean: float = 4.0  # geometric, >= 0
    child_delay_median: float = 1.5  # seconds, log-normal
    child_delay_sigma: float = 1.0
    max_child_delay: float = 25.0  # keeps every object inside the linking window
    think_time_median: float = 40.0  # seconds, log-normal
    think_time_sigma: float = 0.7
    max_think_time: float = 1700.0  # below the session gap
    idle_time_median: float = 7200.0  # extra seconds beyond the session gap, log-normal
    idle_time_sigma: float = 1.0
    session_gap: float = 1800.0
    promoter_prob: float = 0.35  # session (or jump) starts on a search engine / social network
    search_share: float = 0.6  # search engine vs social network
    jump_prob: float = 0.12  # mid-session move to a promoter or another content domain
    external_link_prob: float = 0.5  # jump follows a link (keeps the referer) rather than restarting
    redirect_prob: float = 0.05
    ad_fraction: float = 0.12
    not_modified_prob: float = 0.08  # 304 answers on objects
    poll_prob: float = 0.08  # late background requests from a page
    revisit_prob: float = 0.02  # back-navigation with few objects
    n_domains: int = 150
    zipf_exponent: float = 1.0
    pages_per_domain: int = 60
    https_domains: dict = field(default_factory=dict)  # domain -> keeps emitting referers
    history_jitter: float = 2.0  # seconds

    def validate(self) -> None:
        if self.n_browsers < 1:
            raise ValueError("n_browsers must be >= 1")
        if self.n_domains < 2 or self.pages_per_domain < 1:
            raise ValueError("need at least two content domains with one page each")
        for name in ("frame_prob", "promoter_prob", "search_share", "jump_prob", "external_link_prob",
                     "redirect_prob", "ad_fraction", "not_modified_prob", "poll_prob", "revisit_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        for name in ("sessions_per_browser", "actions_per_session"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("children_mean", "frame_children_mean", "child_delay_sigma", "think_time_sigma",
                     "idle_time_sigma", "zipf_exponent"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("child_delay_median", "max_child_delay", "think_time_median", "max_think_time",
                     "idle_time_median", "session_gap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_think_time >= self.session_gap:
            raise ValueError("max_think_time must stay below session_gap")
        mix = np.array(list(self.device_mix.values()), dtype=float)
        if mix.size == 0 or np.any(mix < 0) or not np.isclose(mix.sum(), 1.0):
            raise ValueError("device_mix must be non-negative fractions summing to 1")
        unknown = set(self.device_mix) - {d.value for d in DeviceClass}
        if unknown:
            raise ValueError(f"unknown device classes {sorted(unknown)}")

    def replace(self, **changes) -> GenConfig:
        return dataclasses.replace(self, **changes)


def load_config(path=None, **overrides) -> GenConfig:
    """Read a TOML config; keys not given keep their defaults."""
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    known = {f.name for f in dataclasses.fields(GenConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    config = GenConfig(**data)
    config.validate()
    return config


@dataclass
class SynthTrace:
    records: list[HttpRecord]
    labels: list[str]
    actions: list[HttpRecord]  # every true user-action, including hidden HTTPS ones
    truth_graphs: dict
    histories: dict  # BrowserId -> list[HistoryEntry]
    fanout: list  # generated direct-object count per record (None for objects)

    @property
    def action_fraction(self) -> float:
        return self.labels.count(USER_ACTION) / len(self.labels) if self.labels else 0.0


# --------------------------------------------------------------------------
# World: content domains and their pages
# --------------------------------------------------------------------------

class _World:
    def __init__(self, config: GenConfig, rng: np.random.Generator):
        self.config = config
        tlds = (".com", ".net", ".org", ".co.uk", ".it")
        self.domains = [f"site{k:03d}{tlds[k % len(tlds)]}" for k in range(config.n_domains)]
        ranks = np.arange(1, config.n_domains + 1, dtype=float)
        weights = ranks ** -config.zipf_exponent
        self.popularity = weights / weights.sum()
        rng.shuffle(self.domains)
        self.cdns = [f"cdn{k}.static-net.com" for k in range(4)]
        self.adnets = ("ads.adnet-one.com", "pagead.bannerhub.net", "tracker.metricsly.com")

    def page(self, rng: np.random.Generator, domain: str) -> str:
        k = int(rng.integers(self.config.pages_per_domain))
        url = f"http://www.{domain}/section{k % 7}/article{k}.html"
        if rng.random() < 0.2:
            url += f"?from=nav{int(rng.integers(5))}"
        return url

    def pick_domain(self, rng: np.random.Generator, exclude: str | None = None) -> str:
        while True:
            d = self.domains[int(rng.choice(len(self.domains), p=self.popularity))]
            if d != exclude:
                return d

    def promoter_page(self, rng: np.random.Generator) -> str:
        if rng.random() < self.config.search_share:
            base, query = SEARCH_ENGINES[int(rng.integers(len(SEARCH_ENGINES)))]
            return base + query + f"term{int(rng.integers(100000))}"
        base, _ = SOCIAL_NETWORKS[int(rng.integers(len(SOCIAL_NETWORKS)))]
        return base


# --------------------------------------------------------------------------
# Per-browser generation
# --------------------------------------------------------------------------

def _geometric(rng: np.random.Generator, mean: float, minimum: int) -> int:
    """Geometric count with the given mean on {minimum, minimum+1, ...}."""
    extra = mean - minimum
    if extra <= 0:
        return minimum
    return minimum + int(rng.geometric(1.0 / (extra + 1.0))) - 1


def _lognormal(rng: np.random.Generator, median: float, sigma: float) -> float:
    return float(median * np.exp(sigma * rng.standard_normal()))


@dataclass
class _Event:
    ts: int
    url: str
    referer: str | None
    content_type: str | None
    content_length: int | None
    status: int | None
    label: str
    hidden: bool
    fanout: int | None = None


class _BrowserGen:
    def __init__(self, world: _World, config: GenConfig, rng: np.random.Generator, browser: BrowserId):
        self.w = world
        self.c = config
        self.rng = rng
        self.browser = browser
        self.events: list[_Event] = []
        self.actions: list[_Event] = []

    def _is_https(self, url: str) -> bool:
        return domain_of(url) in self.c.https_domains

    def _emit_referer(self, referer: str | None) -> str | None:
        if referer is None:
            return None
        d = domain_of(normalize_url(referer))
        if d in self.c.https_domains and not self.c.https_domains[d]:
            return None
        return referer

    def _object(self, page_url: str, domain: str) -> tuple[str, str, int]:
        rng = self.rng
        if rng.random() < self.c.ad_fraction:
            host = self.w.adnets[int(rng.integers(len(self.w.adnets)))]
            return f"http://{host}/serve/{int(rng.integers(10**6))}.gif", "image/gif", 43
        ctype, ext, median, _ = OBJECT_TYPES[int(rng.choice(len(OBJECT_TYPES), p=_OBJ_P))]
        host = f"static.{domain}" if rng.random() < 0.6 else self.w.cdns[int(rng.integers(len(self.w.cdns)))]
        name = int(rng.integers(80))
        length = max(1, int(_lognormal(rng, median, 0.8)))
        return f"http://{host}/assets/{ext}/obj{name}.{ext}", ctype, length

    def _children(self, parent_ts: int, parent_url: str, n: int, hidden: bool, depth: int) -> int:
        """Emit ``n`` objects for a page or frame; returns the count emitted."""
        rng = self.rng
        domain = domain_of(parent_url)
        for _ in range(n):
            delay = min(_lognormal(rng, self.c.child_delay_median, self.c.child_delay_sigma), self.c.max_child_delay)
            ts = parent_ts + max(5, int(delay * 1000))
            if depth == 0 and rng.random() < self.c.frame_prob:
                url = f"http://widgets.{domain}/frame/w{int(rng.integers(10**6))}.html"
                k = _geometric(rng, self.c.frame_children_mean, 0)
                self.events.append(_Event(ts, url, parent_url, "text/html", max(200, int(_lognormal(rng, 4000, 0.7))),
                                          200, AUTOMATIC, hidden, k))
                # frame objects must still land within the window of the frame
                self._children(ts, url, k, hidden, depth + 1)
                continue
            url, ctype, length = self._object(parent_url, domain)
            status: int | None = 200
            if rng.random() < self.c.not_modified_prob:
                status, length = 304, 0
            self.events.append(_Event(ts, url, parent_url, ctype, length, status, AUTOMATIC, hidden))
        return n

    def _visit(self, ts: int, url: str, referer: str | None, few_objects: bool = False) -> None:
        rng = self.rng
        hidden = self._is_https(url)
        if rng.random() < self.c.redirect_prob:
            # the link points at a bare host that answers with a redirect
            lead = max(50, int(rng.uniform(0.05, 0.8) * 1000))
            if "://www." in url:
                src = url.replace("http://www.", "http://", 1)
            else:
                src = f"http://t.co/{int(rng.integers(10**8)):x}"
            self.events.append(_Event(ts - lead, src, referer, "text/html", 0, 301, AUTOMATIC, hidden))
        if few_objects:
            # cached revisit: at most two objects, none when pages carry none
            n = min(int(rng.integers(0, 3)), math.ceil(self.c.children_mean))
        else:
            n = _geometric(rng, self.c.children_mean, 0)
        ev = _Event(ts, url, referer, "text/html", max(500, int(_lognormal(rng, 40000, 0.8))), 200,
                    USER_ACTION, hidden, n)
        self.events.append(ev)
        self.actions.append(ev)
        self._children(ts, url, n, hidden, 0)
        if rng.random() < self.c.poll_prob:
            for _ in range(int(rng.integers(1, 4))):
                late = ts + int(rng.uniform(self.c.max_child_delay + 10, 300) * 1000)
                self.events.append(_Event(late, f"http://www.{domain_of(url)}/api/update?n={int(rng.integers(1000))}",
                                          url, "application/json", int(rng.integers(50, 2000)), 200, AUTOMATIC, hidden))

    def _session(self, start: int) -> int:
        rng = self.rng
        n_actions = _geometric(rng, self.c.actions_per_session, 1)
        ts = start
        current: str | None = None
        domain: str | None = None
        history: list[str] = []
        for i in range(n_actions):
            if i > 0:
                think = min(_lognormal(rng, self.c.think_time_median, self.c.think_time_sigma), self.c.max_think_time)
                ts += max(1000, int(think * 1000))
            few = False
            if current is None:
                if rng.random() < self.c.promoter_prob:
                    url, referer, domain = self.w.promoter_page(rng), None, None
                else:
                    domain = self.w.pick_domain(rng)
                    url, referer = self.w.page(rng, domain), None
            elif domain is None:
                # leaving a promoter page for a content domain
                domain = self.w.pick_domain(rng)
                url, referer = self.w.page(rng, domain), current
            elif len(history) > 1 and rng.random() < self.c.revisit_prob:
                url, referer, few = history[-2], None, True
            elif rng.random() < self.c.jump_prob:
                if rng.random() < self.c.external_link_prob:
                    domain = self.w.pick_domain(rng, exclude=domain)
                    url, referer = self.w.page(rng, domain), current
                elif rng.random() < self.c.promoter_prob:
                    url, referer, domain = self.w.promoter_page(rng), None, None
                else:
                    domain = self.w.pick_domain(rng, exclude=domain)
                    url, referer = self.w.page(rng, domain), None
            else:
                url, referer = self.w.page(rng, domain), current
                if normalize_url(url) == normalize_url(current):
                    referer = None  # a reload carries no referer
            self._visit(ts, url, referer, few)
            current = url
            history.append(url)
        return ts

    def run(self) -> None:
        rng = self.rng
        ts = self.c.start_ms + int(rng.uniform(0, 6 * 3600) * 1000)
        for s in range(_geometric(rng, self.c.sessions_per_browser, 1)):
            if s > 0:
                idle = self.c.session_gap + 1 + _lognormal(rng, self.c.idle_time_median, self.c.idle_time_sigma)
                ts += int(idle * 1000)
            ts = self._session(ts)

    def records(self) -> list[tuple[HttpRecord, _Event]]:
        hh, ua = self.browser
        out = []
        for ev in self.events:
            if ev.hidden:
                continue
            rec = HttpRecord(ev.ts, hh, ua, ev.url, self._emit_referer(ev.referer), ev.content_type,
                             ev.content_length, ev.status)
            out.append((rec, ev))
        return out

    def truth_actions(self) -> list[HttpRecord]:
        hh, ua = self.browser
        return [HttpRecord(ev.ts, hh, ua, ev.url, ev.referer, ev.content_type, ev.content_length, ev.status)
                for ev in self.actions]

    def history(self) -> list[HistoryEntry]:
        rng = self.rng
        j = self.c.history_jitter
        out = []
        for ev in self.actions:
            shift = int(rng.uniform(-j, j) * 1000)
            transition = "link" if ev.referer is not None else "typed"
            out.append(HistoryEntry(max(1, ev.ts + shift), ev.url, transition))
        out.sort(key=lambda h: h.timestamp)
        return out


_OBJ_P = np.array([t[3] for t in OBJECT_TYPES])
_OBJ_P = _OBJ_P / _OBJ_P.sum()


def _devices(config: GenConfig, rng: np.random.Generator) -> list[DeviceClass]:
    names = list(config.device_mix)
    p = np.array([config.device_mix[n] for n in names], dtype=float)
    return [DeviceClass(names[i]) for i in rng.choice(len(names), size=config.n_browsers, p=p / p.sum())]


def generate(config: GenConfig | None = None) -> SynthTrace:
    """Deterministic labeled trace for ``config`` (defaults when omitted)."""
    config = config or GenConfig()
    config.validate()
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_browsers + 1)
    world_rng = np.random.default_rng(seeds[0])
    world = _World(config, world_rng)
    devices = _devices(config, world_rng)
    merged = []
    actions: list[HttpRecord] = []
    histories = {}
    for b, device in enumerate(devices):
        rng = np.random.default_rng(seeds[b + 1])
        uas = USER_AGENTS[device]
        browser = BrowserId(f"hh{b // 2:04d}", uas[int(rng.integers(len(uas)))])
        if browser in histories:
            browser = BrowserId(f"hh{b // 2:04d}b", browser.user_agent)
        gen = _BrowserGen(world, config, rng, browser)
        gen.run()
        merged.extend(gen.records())
        actions.extend(gen.truth_actions())
        histories[browser] = gen.history()
    # stable sort keeps per-browser generation order among equal timestamps
    merged.sort(key=lambda pair: pair[0].timestamp)
    actions.sort(key=lambda r: r.timestamp)
    records = [r for r, _ in merged]
    labels = [ev.label for _, ev in merged]
    fanout = [ev.fanout if ev.label == USER_ACTION else None for _, ev in merged]
    return SynthTrace(records, labels, actions, build_graphs(actions), histories, fanout)


def generate_groups(config: GenConfig, n_groups: int) -> list[SynthTrace]:
    """``n_groups`` independent traces from one distribution (seeds derived from ``config.seed``)."""
    seeds = np.random.SeedSequence(config.seed).generate_state(n_groups)
    return [generate(config.replace(seed=int(s))) for s in seeds]


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------

def write_truth(path, labels: Sequence[str]) -> None:
    """One ``line_number<TAB>label`` row per record line (1-based)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, label in enumerate(labels, start=1):
            fh.write(f"{i}\t{label}\n")


def read_truth(path) -> list[str]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for expected, line in enumerate(fh, start=1):
            num, label = line.rstrip("\r\n").split("\t")
            if int(num) != expected or label not in (USER_ACTION, AUTOMATIC):
                raise ValueError(f"bad truth line {expected}: {line!r}")
            labels.append(label)
    return labels


def history_filename(browser: BrowserId) -> str:
    from .sessions import browser_hash
    return f"{browser_hash(browser)}.history.tsv"


def write_histories(directory, histories: dict) -> list[Path]:
    from .groundtruth import write_history
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for browser in sorted(histories):
        p = directory / history_filename(browser)
        write_history(p, histories[browser])
        paths.append(p)
    return paths


def truth_graph_list(trace: SynthTrace) -> list[ClickstreamGraph]:
    return list(trace.truth_graphs.values())
