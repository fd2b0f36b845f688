"""Concept co-occurrence graphs.

Each session yields a :class:`LocalGraph` whose edge values are running maxima
of per-query evidence, so repeated or reformulated queries never add up.  The
global :class:`CoGraph` sums local edge evidence over sessions.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Union

from .interpret import QueryInterpretation

__all__ = [
    "CoGraph",
    "LocalGraph",
    "PruneReport",
    "WeightDistribution",
    "build_global_graph",
    "build_local_graph",
    "edge_key",
    "merge_graphs",
    "merge_into_global",
    "prune",
    "read_graph",
    "weight_distribution",
    "write_graph",
]

Number = Union[float, Fraction]
Edge = tuple[str, str]


def edge_key(a: str, b: str) -> Edge:
    if a == b:
        raise ValueError(f"self-loop on {a!r}")
    return (a, b) if a < b else (b, a)


@dataclass
class LocalGraph:
    node_evidence: dict[str, Fraction] = field(default_factory=dict)
    edge_evidence: dict[Edge, Fraction] = field(default_factory=dict)

    def add_query(self, q: QueryInterpretation) -> None:
        factors = q.factors()
        if not factors:
            return
        nodes = self.node_evidence
        for c, f in factors.items():
            if f > nodes.get(c, 0):
                nodes[c] = f
        edges = self.edge_evidence
        for a in factors:
            ev_a = nodes[a]
            for b, ev_b in nodes.items():
                if b == a:
                    continue
                key = (a, b) if a < b else (b, a)
                val = ev_a if ev_a < ev_b else ev_b
                if val > edges.get(key, 0):
                    edges[key] = val


def build_local_graph(interpretations: Iterable[QueryInterpretation]) -> LocalGraph:
    """Fold a session's interpreted queries (in order) into its evidence graph.

    For each query, referenced concepts first raise their node evidence to the
    query's factor (1/|group|).  Then every pair (a, b) with ``a`` referenced
    in the query and ``b`` already in the graph is raised to
    ``min(evidence(a), evidence(b))``.
    """
    g = LocalGraph()
    for q in interpretations:
        g.add_query(q)
    return g


@dataclass
class CoGraph:
    nodes: set[str] = field(default_factory=set)
    edges: dict[Edge, Number] = field(default_factory=dict)
    exact: bool = False

    def copy(self) -> "CoGraph":
        return CoGraph(set(self.nodes), dict(self.edges), self.exact)

    def weight(self, a: str, b: str) -> Number:
        return self.edges.get(edge_key(a, b), 0)

    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = float(w)
            adj[b][a] = float(w)
        return adj

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges


def merge_into_global(graph: CoGraph, local: LocalGraph) -> CoGraph:
    """Add a session's edge evidence to ``graph`` in place and return it."""
    graph.nodes.update(local.node_evidence)
    edges = graph.edges
    if graph.exact:
        for k, v in local.edge_evidence.items():
            edges[k] = edges.get(k, 0) + v
    else:
        for k, v in local.edge_evidence.items():
            edges[k] = edges.get(k, 0.0) + v.numerator / v.denominator
    return graph


def merge_graphs(a: CoGraph, b: CoGraph) -> CoGraph:
    """Sum two partial graphs (the reduction step of a parallel fold)."""
    out = CoGraph(a.nodes | b.nodes, dict(a.edges), a.exact and b.exact)
    for k, v in b.edges.items():
        out.edges[k] = out.edges.get(k, 0) + v
    if not out.exact:
        out.edges = {k: float(v) for k, v in out.edges.items()}
    return out


def build_global_graph(sessions: Iterable[Iterable[QueryInterpretation]], exact: bool = False) -> CoGraph:
    graph = CoGraph(exact=exact)
    for interps in sessions:
        merge_into_global(graph, build_local_graph(interps))
    return graph


@dataclass
class WeightDistribution:
    weights: list[float]
    # (lower bucket bound, count); bucket k holds weights in [10**k, 10**(k+1))
    histogram: list[tuple[float, int]]


def weight_distribution(graph: CoGraph) -> WeightDistribution:
    weights = sorted(float(w) for w in graph.edges.values())
    buckets: Counter[int] = Counter()
    for w in weights:
        if w > 0:
            buckets[math.floor(math.log10(w) + 1e-12)] += 1
    return WeightDistribution(weights, [(10.0**k, buckets[k]) for k in sorted(buckets)])


@dataclass
class PruneReport:
    threshold: float
    edges_before: int
    edges_after: int
    isolated_nodes: list[str]
    weight_histogram: list[tuple[float, int]]
    max_weight: float = 0.0

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "edges_before": self.edges_before,
            "edges_after": self.edges_after,
            "max_weight": self.max_weight,
            "isolated_nodes": self.isolated_nodes,
            "weight_histogram": [[lo, n] for lo, n in self.weight_histogram],
        }


def prune(graph: CoGraph, threshold: float) -> tuple[CoGraph, PruneReport]:
    """Drop edges lighter than ``threshold`` (an edge at the threshold stays); keep all nodes."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    kept = {k: w for k, w in graph.edges.items() if w >= threshold}
    out = CoGraph(set(graph.nodes), kept, graph.exact)
    touched = {n for k in kept for n in k}
    report = PruneReport(
        threshold=float(threshold),
        edges_before=len(graph.edges),
        edges_after=len(kept),
        isolated_nodes=sorted(out.nodes - touched),
        weight_histogram=weight_distribution(graph).histogram,
        max_weight=float(max(graph.edges.values(), default=0.0)),
    )
    return out, report


def write_graph(graph: CoGraph, path: str | Path) -> None:
    lines = ["#nodes:\t" + "\t".join(sorted(graph.nodes))]
    for (a, b) in sorted(graph.edges):
        lines.append(f"{a}\t{b}\t{float(graph.edges[(a, b)]):.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path: str | Path) -> CoGraph:
    graph = CoGraph()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#nodes:"):
                graph.nodes.update(n for n in line[len("#nodes:"):].split("\t") if n)
                continue
            if line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'a<TAB>b<TAB>weight'")
            a, b, w = parts
            graph.edges[edge_key(a, b)] = float(w)
            graph.nodes.update((a, b))
    return graph
