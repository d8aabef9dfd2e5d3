"""Content promoters: domain out-degree ranking and direct/reachable page fractions."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .graph import ClickstreamGraph
from .trace import domain_of


@dataclass(frozen=True)
class PromoterConfig:
    search_engines: frozenset[str]
    social_networks: frozenset[str]
    min_pages_per_graph: int = 20

    def __post_init__(self):
        object.__setattr__(self, "search_engines", frozenset(self.search_engines))
        object.__setattr__(self, "social_networks", frozenset(self.social_networks))
        if self.search_engines & self.social_networks:
            raise ValueError("search engine and social network lists overlap")
        if self.min_pages_per_graph < 1:
            raise ValueError("min_pages_per_graph must be >= 1")

    @property
    def all_domains(self) -> frozenset[str]:
        return self.search_engines | self.social_networks


def parse_promoter_config(text: str, min_pages_per_graph: int = 20) -> PromoterConfig:
    """``[search_engines]`` / ``[social_networks]`` sections, one domain per line."""
    sections: dict[str, set[str]] = {"search_engines": set(), "social_networks": set()}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in sections:
                raise ValueError(f"unknown promoter section [{current}]")
            continue
        if current is None:
            raise ValueError(f"domain {line!r} outside any section")
        sections[current].add(line.lower())
    return PromoterConfig(frozenset(sections["search_engines"]), frozenset(sections["social_networks"]),
                          min_pages_per_graph)


def load_promoter_config(path=None, min_pages_per_graph: int = 20) -> PromoterConfig:
    if path is None:
        text = resources.files("clickstream").joinpath("data/promoters.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_promoter_config(text, min_pages_per_graph)


def promoted_pairs(graph: ClickstreamGraph, suffixes=None) -> set[tuple[str, str]]:
    """(source domain, destination domain) pairs of inter-domain edges."""
    pairs = set()
    for u, v in graph.edges:
        du, dv = domain_of(u, suffixes), domain_of(v, suffixes)
        if du != dv:
            pairs.add((du, dv))
    return pairs


def promoter_ranking(graphs: Iterable[ClickstreamGraph], suffixes=None) -> list[tuple[str, float]]:
    """Every parent domain with the fraction of all observed domains it promoted.

    A parent domain is any domain that is the source of at least one edge;
    only edges into a different domain count as promotion. Sorted by fraction
    (descending), then domain name.
    """
    promoted: dict[str, set[str]] = {}
    universe: set[str] = set()
    for g in graphs:
        universe.update(domain_of(v, suffixes) for v in g.visit_count)
        for u, v in g.edges:
            du, dv = domain_of(u, suffixes), domain_of(v, suffixes)
            dests = promoted.setdefault(du, set())
            if du != dv:
                dests.add(dv)
    if not universe:
        return []
    ranking = [(d, len(dests) / len(universe)) for d, dests in promoted.items()]
    ranking.sort(key=lambda r: (-r[1], r[0]))
    return ranking


def _reachable(adj: dict[str, list[str]], sources: list[str]) -> set[str]:
    seen = set(sources)
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def promoter_fractions(graph: ClickstreamGraph, config: PromoterConfig, suffixes=None) -> dict[str, float]:
    """Fractions of visited non-promoter pages directly linked / reachable from SEs and OSNs."""
    domain = {v: domain_of(v, suffixes) for v in graph.visit_count}
    promoters = {v for v, d in domain.items() if d in config.all_domains}
    targets = [v for v, c in graph.visit_count.items() if c > 0 and v not in promoters]
    adj = graph.successors()
    out = {}
    for tag, domains in (("se", config.search_engines), ("osn", config.social_networks)):
        sources = sorted(v for v in promoters if domain[v] in domains)
        direct = {v for s in sources for v in adj[s]}
        reach = _reachable(adj, sources) - set(sources) if sources else set()
        n = len(targets)
        out[f"direct_{tag}"] = sum(v in direct for v in targets) / n if n else 0.0
        out[f"reachable_{tag}"] = sum(v in reach for v in targets) / n if n else 0.0
    return out


def promoter_fraction_table(graphs: Iterable[ClickstreamGraph], config: PromoterConfig,
                            suffixes=None) -> tuple[list[dict], list[ClickstreamGraph]]:
    """Fractions for every graph with enough visited pages, plus the graphs filtered out."""
    rows, excluded = [], []
    for g in graphs:
        if len(g.visited()) < config.min_pages_per_graph:
            excluded.append(g)
            continue
        rows.append({"browser": g.browser, "day": g.day, **promoter_fractions(g, config, suffixes)})
    return rows, excluded


def write_ranking_csv(path, ranking: list[tuple[str, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "domain", "fraction"])
        for i, (d, f) in enumerate(ranking, start=1):
            writer.writerow([i, d, repr(f)])
