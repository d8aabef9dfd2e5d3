"""What-if HTTPS migration: drop whole domains from the corpus and recompute metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .graph import ClickstreamGraph, build_graphs, graph_metrics
from .promoters import PromoterConfig, load_promoter_config, promoter_fractions
from .sessions import BrowserId, Session, sessions_by_browser
from .trace import HttpRecord, domain_of, normalize_url

DEFAULT_CHECKPOINTS = (0.15, 0.30, 0.45)


def domain_action_counts(graphs: Iterable[ClickstreamGraph], suffixes=None) -> dict[str, int]:
    counts: dict[str, int] = {}
    for g in graphs:
        for v, c in g.visit_count.items():
            if c:
                d = domain_of(v, suffixes)
                counts[d] = counts.get(d, 0) + c
    return counts


def migration_order(graphs: Sequence[ClickstreamGraph], suffixes=None) -> list[str]:
    """Domains by total user-action count, most popular first; ties lexicographic."""
    if not graphs:
        raise ValueError("migration_order needs at least one graph")
    counts = domain_action_counts(graphs, suffixes)
    return sorted(counts, key=lambda d: (-counts[d], d))


def choose_domains(counts: dict[str, int], order: Sequence[str], target: float) -> tuple[list[str], float]:
    """Walk ``order`` until the removed share reaches ``target``; returns (domains, achieved)."""
    if not 0.0 <= target <= 1.0:
        raise ValueError("target must be in [0, 1]")
    total = sum(counts.values())
    if total == 0:
        raise ValueError("corpus has no user-actions to migrate")
    chosen, removed = [], 0
    for d in order:
        if removed / total >= target:
            break
        chosen.append(d)
        removed += counts.get(d, 0)
    return chosen, removed / total


def default_retention(config: PromoterConfig | None = None) -> frozenset[str]:
    """Domains that keep emitting referers after migrating (the content promoters)."""
    return (config or load_promoter_config()).all_domains


def degrade_graph(graph: ClickstreamGraph, migrated: set[str], retain: set[str], suffixes=None) -> ClickstreamGraph:
    """Remove every vertex of a migrated domain and its incident edges.

    A migrated vertex whose domain is in ``retain`` and that links to a
    surviving vertex stays as a referer-only vertex with those edges.
    Referer-only vertices left without any outgoing edge are dropped.
    """
    dom = {v: domain_of(v, suffixes) for v in graph.visit_count}
    gone = {v for v, d in dom.items() if d in migrated}
    if not gone:
        return ClickstreamGraph(graph.browser, graph.day, dict(graph.visit_count), set(graph.edges))
    edges = set()
    for u, v in graph.edges:
        if v in gone:
            continue
        if u in gone and dom[u] not in retain:
            continue
        edges.add((u, v))
    sources = {u for u, _ in edges}
    visits = {}
    for v, c in graph.visit_count.items():
        if v in gone:
            c = 0
        if c > 0 or v in sources:
            visits[v] = c
    return ClickstreamGraph(graph.browser, graph.day, visits, edges)


def degrade_actions(actions: Iterable[HttpRecord], migrated: set[str], retain: set[str],
                    suffixes=None) -> list[HttpRecord]:
    """Surviving user-actions; referers into non-retaining migrated domains are dropped."""
    out = []
    for a in actions:
        if domain_of(a.url, suffixes) in migrated:
            continue
        if a.referer is not None:
            rd = domain_of(normalize_url(a.referer), suffixes)
            if rd in migrated and rd not in retain:
                a = replace(a, referer=None)
        out.append(a)
    return out


# --------------------------------------------------------------------------
# Metric suite
# --------------------------------------------------------------------------

def _mean(xs) -> float | None:
    return float(np.mean(xs)) if len(xs) else None


def _median(xs) -> float | None:
    return float(np.median(xs)) if len(xs) else None


def metric_suite(graphs: Sequence[ClickstreamGraph], sessions: dict[BrowserId, list[Session]] | None = None,
                 config: PromoterConfig | None = None, suffixes=None) -> dict:
    """Corpus-level aggregates of every graph, promoter and (optionally) session metric."""
    config = config or load_promoter_config()
    rows = [graph_metrics(g, suffixes) for g in graphs if g.visit_count]
    fractions = [promoter_fractions(g, config, suffixes) for g in graphs
                 if len(g.visited()) >= config.min_pages_per_graph]
    out = {
        "graphs": len(rows),
        "actions": int(sum(r["actions"] for r in rows)),
        "pages": int(sum(r["pages"] for r in rows)),
        "edges": int(sum(r["edges"] for r in rows)),
        "pages_per_graph_median": _median([r["pages"] for r in rows]),
        "domains_per_graph_median": _median([r["domains"] for r in rows]),
        "longest_path_mean": _mean([r["longest_path"] for r in rows]),
        "longest_path_median": _median([r["longest_path"] for r in rows]),
        "path_domains_mean": _mean([r["path_domains"] for r in rows]),
        "n_wcc_mean": _mean([r["n_wcc"] for r in rows]),
        "biggest_wcc_ratio_mean": _mean([r["biggest_wcc_ratio"] for r in rows]),
        "promoter_graphs": len(fractions),
    }
    for key in ("direct_se", "reachable_se", "direct_osn", "reachable_osn"):
        out[f"{key}_mean"] = _mean([f[key] for f in fractions])
    if sessions is not None:
        flat = [s for ss in sessions.values() for s in ss]
        out["sessions"] = len(flat)
        out["session_duration_median"] = _median([s.duration for s in flat])
        out["actions_per_session_median"] = _median([s.action_count for s in flat])
    return out


def metric_deltas(baseline: dict, current: dict) -> dict:
    deltas = {}
    for k, v in current.items():
        b = baseline.get(k)
        deltas[k] = None if v is None or b is None else v - b
    return deltas


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------

@dataclass
class MigrationResult:
    target: float
    migrated: list[str]
    achieved: float
    graphs: list[ClickstreamGraph]
    metrics: dict
    sessions: dict | None = None
    actions: list[HttpRecord] | None = field(default=None, repr=False)

    def report(self, baseline: dict | None = None) -> dict:
        out = {"target": self.target, "achieved": self.achieved, "migrated": list(self.migrated),
               "metrics": self.metrics}
        if baseline is not None:
            out["deltas"] = metric_deltas(baseline, self.metrics)
        return out


def simulate_migration(graphs: Sequence[ClickstreamGraph], order: Sequence[str] | None, target: float,
                       retain: Iterable[str] | None = None, actions: Sequence[HttpRecord] | None = None,
                       config: PromoterConfig | None = None, suffixes=None) -> MigrationResult:
    """Migrate domains in ``order`` until ``target`` of all user-actions is removed.

    With ``actions`` (the user-actions the graphs were built from), graphs and
    sessions are rebuilt from the surviving actions; otherwise each graph is
    degraded in place and sessions are not reported.
    """
    graphs = list(graphs)
    config = config or load_promoter_config()
    retain = default_retention(config) if retain is None else frozenset(retain)
    counts = domain_action_counts(graphs, suffixes)
    if order is None:
        order = migration_order(graphs, suffixes)
    migrated, achieved = choose_domains(counts, order, target)
    gone = set(migrated)
    if actions is not None:
        survivors = degrade_actions(actions, gone, retain, suffixes)
        degraded = list(build_graphs(survivors).values())
        sessions = sessions_by_browser(survivors)
    else:
        survivors = None
        degraded = [degrade_graph(g, gone, retain, suffixes) for g in graphs]
        sessions = None
    metrics = metric_suite(degraded, sessions, config, suffixes)
    return MigrationResult(target, migrated, achieved, degraded, metrics, sessions, survivors)


def simulate_checkpoints(graphs: Sequence[ClickstreamGraph], targets: Sequence[float] = DEFAULT_CHECKPOINTS,
                         retain: Iterable[str] | None = None, actions: Sequence[HttpRecord] | None = None,
                         config: PromoterConfig | None = None, suffixes=None) -> dict:
    """Baseline plus one migration run per target, as a JSON-ready report."""
    graphs = list(graphs)
    config = config or load_promoter_config()
    order = migration_order(graphs, suffixes)
    base_sessions = sessions_by_browser(actions) if actions is not None else None
    baseline = metric_suite(graphs, base_sessions, config, suffixes)
    runs = [simulate_migration(graphs, order, t, retain, actions, config, suffixes) for t in targets]
    return {"order": order, "baseline": baseline, "checkpoints": [r.report(baseline) for r in runs]}


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
