"""Brute-force reference implementations used by the property tests."""

import datetime as dt
import math

import numpy as np

from clickstream.graph import ClickstreamGraph
from clickstream.trace import BrowserId

DAY = dt.date(2013, 7, 1)
BROWSER = BrowserId("H", "UA")


def entropy(counts):
    n = sum(counts)
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def contingency_ig(values, labels):
    """Brute-force IG from a value x label count table."""
    table: dict = {}
    for v, y in zip(values, labels):
        table.setdefault(v, {}).setdefault(y, 0)
        table[v][y] += 1
    n = len(values)
    h = entropy([labels.count(c) for c in set(labels)])
    cond = sum(sum(row.values()) / n * entropy(list(row.values())) for row in table.values())
    return h - cond


def make_graph(n_vertices, edges, counts=None):
    names = [f"http://v{i}.com/" for i in range(n_vertices)]
    visit_count = {v: (1 if counts is None else counts[i]) for i, v in enumerate(names)}
    return ClickstreamGraph(BROWSER, DAY, visit_count, {(names[u], names[v]) for u, v in edges})


def random_graph(rng, max_vertices=12):
    n = int(rng.integers(1, max_vertices + 1))
    p = rng.uniform(0.0, 0.5)
    edges = [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < p]
    return make_graph(n, edges)


def floyd_warshall_longest(graph):
    """Longest finite shortest path in vertices, from the all-pairs distance matrix."""
    names = sorted(graph.visit_count)
    if not names:
        return 0
    index = {v: i for i, v in enumerate(names)}
    n = len(names)
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0)
    for u, v in graph.edges:
        d[index[u], index[v]] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return int(d[np.isfinite(d)].max()) + 1


def union_find_partition(graph):
    parent = {v: v for v in graph.visit_count}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in graph.edges:
        parent[find(u)] = find(v)
    groups: dict = {}
    for v in graph.visit_count:
        groups.setdefault(find(v), set()).add(v)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: (-len(g), min(g)))


def is_shortest_path_witness(graph, path):
    """The witness is a real path and no shorter path joins its ends."""
    if len(path) == 1:
        return True
    if any((u, v) not in graph.edges for u, v in zip(path, path[1:])):
        return False
    adj: dict = {}
    for u, v in graph.edges:
        adj.setdefault(u, []).append(v)
    frontier, seen, steps = {path[0]}, {path[0]}, 0
    while frontier and path[-1] not in frontier:
        frontier = {w for u in frontier for w in adj.get(u, ()) if w not in seen}
        seen |= frontier
        steps += 1
    return steps == len(path) - 1


PROMOTER_HOSTS = ["http://www.google.com/", "http://www.bing.com/", "http://www.facebook.com/",
                  "http://twitter.com/", "http://a.com/", "http://b.com/", "http://c.org/", "http://d.net/"]


def random_promoter_graph(rng, max_vertices=12):
    """Random graph whose vertices spread over two SEs, two OSNs and four content domains."""
    n = int(rng.integers(1, max_vertices + 1))
    names = [f"{PROMOTER_HOSTS[int(rng.integers(len(PROMOTER_HOSTS)))]}p{i}" for i in range(n)]
    counts = {v: int(rng.integers(0, 3)) for v in names}
    p = rng.uniform(0.0, 0.4)
    edges = {(u, v) for u in names for v in names if u != v and rng.random() < p}
    return ClickstreamGraph(BROWSER, DAY, counts, edges)


def fractions_oracle(graph, config, domain_of):
    """Direct/reachable fractions from a transitive-closure matrix."""
    names = sorted(graph.visit_count)
    index = {v: i for i, v in enumerate(names)}
    n = len(names)
    reach = np.zeros((n, n), dtype=bool)
    for u, v in graph.edges:
        reach[index[u], index[v]] = True
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    promoters = {v for v in names if domain_of(v) in config.all_domains}
    targets = [v for v in names if graph.visit_count[v] > 0 and v not in promoters]
    out = {}
    for tag, domains in (("se", config.search_engines), ("osn", config.social_networks)):
        src = [index[v] for v in names if domain_of(v) in domains]
        direct = sum(any((names[s], t) in graph.edges for s in src) for t in targets)
        reachable = sum(any(reach[s, index[t]] for s in src) for t in targets)
        out[f"direct_{tag}"] = direct / len(targets) if targets else 0.0
        out[f"reachable_{tag}"] = reachable / len(targets) if targets else 0.0
    return out
