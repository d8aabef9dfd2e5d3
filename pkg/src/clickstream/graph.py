"""Per-(browser, day) clickstream graphs and their path/component metrics."""

from __future__ import annotations

import datetime as dt
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .sessions import browser_hash
from .trace import BrowserId, HttpRecord, classify_device, domain_of, normalize_url


def utc_day(timestamp_ms: int) -> dt.date:
    return dt.datetime.fromtimestamp(timestamp_ms / 1000.0, tz=dt.timezone.utc).date()


@dataclass
class ClickstreamGraph:
    """Directed graph of web pages.

    ``visit_count`` holds every vertex; a count of 0 marks a referer-only
    vertex (cited as referer but never itself observed as a visit).
    """

    browser: BrowserId
    day: dt.date
    visit_count: dict[str, int] = field(default_factory=dict)
    edges: set[tuple[str, str]] = field(default_factory=set)

    @property
    def vertices(self) -> set[str]:
        return set(self.visit_count)

    def visited(self) -> list[str]:
        return sorted(v for v, c in self.visit_count.items() if c > 0)

    def successors(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {v: [] for v in self.visit_count}
        for u, v in sorted(self.edges):
            adj[u].append(v)
        return adj

    def __eq__(self, other):
        if not isinstance(other, ClickstreamGraph):
            return NotImplemented
        return (self.browser == other.browser and self.day == other.day
                and self.visit_count == other.visit_count and self.edges == other.edges)


def build_graph(actions: Sequence[HttpRecord], browser: BrowserId | None = None,
                day: dt.date | None = None) -> ClickstreamGraph:
    """Graph of one browser's user-actions on one UTC day.

    Each action adds its web page as a vertex; a referer adds an edge from the
    referer's web page (added as a referer-only vertex when not visited).
    Self-loops are dropped.
    """
    if not actions and (browser is None or day is None):
        raise ValueError("cannot infer browser/day from an empty action list")
    if browser is None:
        browser = actions[0].browser
    if day is None:
        day = utc_day(actions[0].timestamp)
    visits: dict[str, int] = {}
    edges: set[tuple[str, str]] = set()
    referers: list[str] = []
    for a in actions:
        if a.browser != browser or utc_day(a.timestamp) != day:
            raise ValueError("actions span more than one (browser, day)")
        page = normalize_url(a.url)
        visits[page] = visits.get(page, 0) + 1
        if a.referer is not None:
            src = normalize_url(a.referer)
            if src and src != page:
                edges.add((src, page))
                referers.append(src)
    for src in referers:
        visits.setdefault(src, 0)
    # canonical vertex order keeps exports deterministic
    visit_count = {v: visits[v] for v in sorted(visits)}
    return ClickstreamGraph(browser, day, visit_count, edges)


def build_graphs(actions: Iterable[HttpRecord]) -> dict[tuple[BrowserId, dt.date], ClickstreamGraph]:
    groups: dict[tuple[BrowserId, dt.date], list[HttpRecord]] = {}
    for a in actions:
        groups.setdefault((a.browser, utc_day(a.timestamp)), []).append(a)
    return {key: build_graph(groups[key], *key) for key in sorted(groups)}


# --------------------------------------------------------------------------
# Paths and components
# --------------------------------------------------------------------------

def _bfs(adj: dict[str, list[str]], source: str) -> dict[str, str | None]:
    parent: dict[str, str | None] = {source: None}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                queue.append(v)
    return parent


def longest_path_length(graph: ClickstreamGraph) -> tuple[int, list[str]]:
    """Longest finite directed shortest path, counted in vertices, with a witness.

    A graph with vertices but no edges gives 1; an empty graph gives 0.
    """
    adj = graph.successors()
    best_len, best_path = 0, []
    for source in sorted(adj):
        parent = _bfs(adj, source)
        # BFS discovery order means the last discovered vertex is a farthest one
        dist = {source: 1}
        far = source
        for v in parent:
            if v != source:
                dist[v] = dist[parent[v]] + 1
                if dist[v] > dist[far]:
                    far = v
        if dist[far] > best_len:
            path = [far]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            best_len, best_path = dist[far], path[::-1]
    return best_len, best_path


def domains_in_path(path: Sequence[str], suffixes=None) -> int:
    if not path:
        raise ValueError("empty path")
    return len({domain_of(v, suffixes) for v in path})


def wcc_partition(graph: ClickstreamGraph) -> list[set[str]]:
    """Weakly connected components, largest first (ties by smallest vertex)."""
    undirected: dict[str, list[str]] = {v: [] for v in graph.visit_count}
    for u, v in graph.edges:
        undirected[u].append(v)
        undirected[v].append(u)
    seen: set[str] = set()
    parts = []
    for start in sorted(undirected):
        if start in seen:
            continue
        comp = set(_bfs(undirected, start))
        seen |= comp
        parts.append(comp)
    parts.sort(key=lambda c: (-len(c), min(c)))
    return parts


def biggest_wcc_ratio(graph: ClickstreamGraph) -> float:
    if not graph.visit_count:
        raise ValueError("biggest_wcc_ratio of an empty graph")
    parts = wcc_partition(graph)
    return len(parts[0]) / len(graph.visit_count)


# --------------------------------------------------------------------------
# Consumption and per-graph metric rows
# --------------------------------------------------------------------------

def daily_consumption(graphs: Iterable[ClickstreamGraph], suffixes=None, device_rules=None) -> list[dict]:
    """Pages, domains, actions and revisit ratio per browser-day.

    Referer-only vertices are not pages; days without visited pages are omitted.
    """
    out = []
    for g in graphs:
        pages = g.visited()
        if not pages:
            continue
        actions = sum(g.visit_count[p] for p in pages)
        out.append({
            "browser": g.browser,
            "day": g.day,
            "device": classify_device(g.browser.user_agent, device_rules).value,
            "pages": len(pages),
            "domains": len({domain_of(p, suffixes) for p in pages}),
            "actions": actions,
            "revisit_ratio": actions / len(pages),
        })
    return out


def graph_metrics(graph: ClickstreamGraph, suffixes=None) -> dict:
    """All per-graph metrics in one row."""
    length, path = longest_path_length(graph)
    pages = graph.visited()
    return {
        "vertices": len(graph.visit_count),
        "edges": len(graph.edges),
        "pages": len(pages),
        "actions": sum(graph.visit_count.values()),
        "domains": len({domain_of(p, suffixes) for p in pages}),
        "longest_path": length,
        "path_domains": domains_in_path(path, suffixes) if path else 0,
        "n_wcc": len(wcc_partition(graph)) if graph.visit_count else 0,
        "biggest_wcc_ratio": biggest_wcc_ratio(graph) if graph.visit_count else None,
    }


# --------------------------------------------------------------------------
# Edge-list files
# --------------------------------------------------------------------------
# "# <browser_hash> <day>" starts a graph; "#browser" and "#v" comment lines
# carry the browser identity and per-vertex visit counts.

def format_graph(graph: ClickstreamGraph) -> str:
    lines = [f"# {browser_hash(graph.browser)} {graph.day.isoformat()}",
             f"#browser\t{graph.browser.household_id}\t{graph.browser.user_agent}"]
    for v, c in graph.visit_count.items():
        lines.append(f"#v\t{v}\t{c}")
    touched = set()
    for u, v in sorted(graph.edges):
        lines.append(f"{u}\t{v}")
        touched.update((u, v))
    for v in graph.visit_count:
        if v not in touched:
            lines.append(v)
    return "\n".join(lines) + "\n"


def parse_graphs(text: str) -> list[ClickstreamGraph]:
    graphs = []
    cur = None
    for raw in text.splitlines():
        line = raw.rstrip("\r")
        if not line:
            continue
        if line.startswith("# "):
            _, _hash, day = line.split(" ", 2)
            cur = {"day": dt.date.fromisoformat(day.strip()), "browser": BrowserId("", _hash),
                   "visits": {}, "counted": False, "edges": set(), "isolated": []}
            graphs.append(cur)
            continue
        if cur is None:
            raise ValueError("graph data before header line")
        if line.startswith("#browser\t"):
            _, hh, ua = line.split("\t", 2)
            cur["browser"] = BrowserId(hh, ua)
        elif line.startswith("#v\t"):
            _, v, c = line.rsplit("\t", 2)
            cur["visits"][v] = int(c)
            cur["counted"] = True
        elif line.startswith("#"):
            continue
        elif "\t" in line:
            u, v = line.split("\t", 1)
            cur["edges"].add((u, v))
        else:
            cur["isolated"].append(line)
    out = []
    for g in graphs:
        visits = dict(g["visits"])
        if not g["counted"]:
            for u, v in g["edges"]:
                visits.setdefault(u, 1)
                visits.setdefault(v, 1)
            for v in g["isolated"]:
                visits.setdefault(v, 1)
        visit_count = {v: visits[v] for v in sorted(visits)}
        out.append(ClickstreamGraph(g["browser"], g["day"], visit_count, g["edges"]))
    return out


def write_graphs(directory, graphs: Iterable[ClickstreamGraph]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for g in graphs:
        path = directory / f"{g.day.isoformat()}_{browser_hash(g.browser)}.edges"
        path.write_text(format_graph(g), encoding="utf-8")
        paths.append(path)
    return paths


def read_graphs(path) -> list[ClickstreamGraph]:
    """Graphs from one edge-list file or every ``*.edges`` file in a directory."""
    path = Path(path)
    files = sorted(path.glob("*.edges")) if path.is_dir() else [path]
    out = []
    for f in files:
        out.extend(parse_graphs(f.read_text(encoding="utf-8")))
    return out
