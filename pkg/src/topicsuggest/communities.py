"""Overlapping community detection by weighted label propagation (COPRA).

Every vertex carries a map ``label -> belonging coefficient``.  Each update
replaces a vertex's map with the edge-weight-normalised average of its
neighbours' maps, deletes labels whose coefficient is below ``1/v`` and
renormalises.  A vertex whose labels all fall below the cut keeps its single
strongest label (random choice among ties).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean
from typing import Iterable, Sequence

from .cograph import CoGraph

__all__ = [
    "ClusterSet",
    "ClusterStats",
    "cluster_stats",
    "connected_components",
    "detect_communities",
    "propagate_labels",
    "read_clusters",
    "write_clusters",
]

# Relative slack for coefficient comparisons, so that rescaling the edge weights
# cannot flip a threshold or tie decision through rounding.
_EPS = 1e-12


@dataclass
class ClusterSet:
    clusters: list[frozenset[str]]
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __getitem__(self, i: int) -> frozenset[str]:
        return self.clusters[i]

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "seed": self.params.get("seed"),
            "clusters": [sorted(c) for c in self.clusters],
        }


def _sort_key(cluster: Iterable[str]) -> tuple[int, list[str]]:
    members = sorted(cluster)
    return (len(members), members)


def connected_components(adj: dict[str, dict[str, float]], within: Iterable[str]) -> list[set[str]]:
    members = set(within)
    seen: set[str] = set()
    out = []
    for start in sorted(members):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in members and y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        out.append(comp)
    return out


def propagate_labels(
    adj: dict[str, dict[str, float]],
    v: int,
    rng: random.Random,
    max_iters: int = 100,
    synchronous: bool = False,
) -> tuple[dict[str, dict[str, float]], int]:
    """Run COPRA rounds; returns the final label state and the round count.

    By default each round visits the vertices in a fresh seeded random order
    and updates them in place.  ``synchronous=True`` computes every vertex from
    the previous round's frozen state instead; on weighted cliques that variant
    falls into period-2 label swaps and splits small communities.
    """
    nodes = sorted(adj)
    labels: dict[str, dict[str, float]] = {n: {n: 1.0} for n in nodes}
    cut = 1.0 / v
    prev_min: dict[str, int] | None = None
    prev_ids: set[str] | None = None
    rounds = 0
    for rounds in range(1, max_iters + 1):
        if synchronous:
            order, src, new = nodes, labels, {}
        else:
            order = list(nodes)
            rng.shuffle(order)
            new = dict(labels)
            src = new
        for x in order:
            nbrs = adj[x]
            if not nbrs:
                new[x] = labels[x]
                continue
            total = sum(nbrs.values())
            acc: dict[str, float] = {}
            for y, w in nbrs.items():
                share = w / total
                for lab, b in src[y].items():
                    acc[lab] = acc.get(lab, 0.0) + share * b
            kept = {lab: b for lab, b in acc.items() if b >= cut * (1 - _EPS)}
            if not kept:
                top = max(acc.values())
                ties = sorted(lab for lab, b in acc.items() if b >= top * (1 - _EPS))
                kept = {rng.choice(ties) if len(ties) > 1 else ties[0]: 1.0}
            norm = sum(kept.values())
            new[x] = {lab: b / norm for lab, b in kept.items()}
        settled = all(new[x].keys() == labels[x].keys() for x in nodes)
        labels = new
        # Stop once no label's minimum vertex count decreases.
        # It is only trusted on rounds where no vertex changed its label set,
        # since labels can rotate around a clique while every count stays put.
        counts: dict[str, int] = {}
        for m in labels.values():
            for lab in m:
                counts[lab] = counts.get(lab, 0) + 1
        ids = set(counts)
        if prev_ids is not None and ids == prev_ids and prev_min is not None:
            mins = {lab: min(prev_min[lab], counts[lab]) for lab in ids}
            if mins == prev_min and settled:
                break
        else:
            mins = counts
        prev_ids, prev_min = ids, mins
    return labels, rounds


def detect_communities(
    graph: CoGraph, v: int = 2, seed: int = 0, max_iters: int = 100, synchronous: bool = False
) -> ClusterSet:
    """Overlapping clusters of ``graph`` (normally already pruned).

    Label communities are split into connected components, communities
    contained in another are dropped, and isolated vertices come out as
    singletons.  Clusters are ordered by size, then by sorted member ids.
    """
    if v < 1:
        raise ValueError("v (maximum labels per vertex) must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if any(w <= 0 for w in graph.edges.values()):
        raise ValueError("edge weights must be positive")
    adj = graph.adjacency()
    labels, rounds = propagate_labels(adj, v, random.Random(seed), max_iters, synchronous)

    by_label: dict[str, set[str]] = {}
    for x in sorted(labels):
        for lab in labels[x]:
            by_label.setdefault(lab, set()).add(x)
    candidates: set[frozenset[str]] = set()
    for members in by_label.values():
        for comp in connected_components(adj, members):
            candidates.add(frozenset(comp))
    for x, nbrs in adj.items():
        if not nbrs:
            candidates.add(frozenset({x}))
    ordered = sorted(candidates, key=lambda c: (-len(c), sorted(c)))
    maximal: list[frozenset[str]] = []
    for c in ordered:
        if not any(c <= m for m in maximal):
            maximal.append(c)
    maximal.sort(key=_sort_key)
    params = {
        "v": v,
        "seed": seed,
        "max_iters": max_iters,
        "iterations": rounds,
        "update": "synchronous" if synchronous else "asynchronous",
    }
    return ClusterSet(maximal, params)


@dataclass
class ClusterStats:
    count: int
    min_size: int
    mean_size: float
    max_size: int
    overlap: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min_size": self.min_size,
            "mean_size": self.mean_size,
            "max_size": self.max_size,
            "overlap": dict(sorted(self.overlap.items())),
        }


def cluster_stats(clusters: Sequence[Iterable[str]] | ClusterSet) -> ClusterStats:
    sets = [frozenset(c) for c in clusters]
    if not sets:
        return ClusterStats(0, 0, 0.0, 0, {})
    sizes = [len(c) for c in sets]
    overlap: dict[str, int] = {}
    for c in sets:
        for x in c:
            overlap[x] = overlap.get(x, 0) + 1
    return ClusterStats(len(sets), min(sizes), mean(sizes), max(sizes), overlap)


def write_clusters(clusters: ClusterSet, path: str | Path) -> None:
    text = json.dumps(clusters.to_dict(), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_clusters(path: str | Path) -> ClusterSet:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or not isinstance(doc.get("clusters"), list):
        raise ValueError(f"{path}: expected an object with a 'clusters' array")
    clusters = []
    for i, c in enumerate(doc["clusters"]):
        if not isinstance(c, list) or not c or not all(isinstance(x, str) for x in c):
            raise ValueError(f"{path}: cluster {i} must be a non-empty array of concept ids")
        clusters.append(frozenset(c))
    return ClusterSet(clusters, doc.get("params", {}))
