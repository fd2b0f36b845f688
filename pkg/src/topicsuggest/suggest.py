"""Cluster-based concept suggestion (Sugg@i) for the observed part of a session."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .interpret import SessionConceptSet

__all__ = [
    "Strategy",
    "Suggestion",
    "degree_of_matching",
    "suggest",
    "suggest_slack",
    "suggest_slack_selective",
    "suggest_strict",
]


class Strategy(str, enum.Enum):
    SLACK = "slack"
    SLACK_SELECTIVE = "slack-selective"
    STRICT = "strict"

    @classmethod
    def parse(cls, name: "str | Strategy") -> "Strategy":
        if isinstance(name, Strategy):
            return name
        key = name.strip().lower().replace("_", "-")
        for s in cls:
            if s.value == key:
                return s
        raise ValueError(f"unknown strategy {name!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class Suggestion:
    concepts: frozenset[str]
    selected_clusters: tuple[int, ...]
    strategy: Strategy
    n_best: int | None = None

    def __bool__(self) -> bool:
        return bool(self.concepts)


def degree_of_matching(cluster: Iterable[str], c_at_i: SessionConceptSet) -> Fraction:
    """Overlap of a cluster with C@i; ambiguous members count 1/|AMB|."""
    return sum((c_at_i.contribution(c) for c in cluster), Fraction(0))


def _union_minus(clusters: Sequence[frozenset[str]], picked: Sequence[int], seen: frozenset[str]) -> frozenset[str]:
    return frozenset().union(*(clusters[i] for i in picked)) - seen


def suggest_slack(clusters: Sequence[Iterable[str]], c_at_i: SessionConceptSet) -> Suggestion:
    cls = [frozenset(c) for c in clusters]
    seen = c_at_i.flatten()
    picked = tuple(i for i, c in enumerate(cls) if c & seen)
    return Suggestion(_union_minus(cls, picked, seen), picked, Strategy.SLACK)


def suggest_slack_selective(
    clusters: Sequence[Iterable[str]], c_at_i: SessionConceptSet, n_best: int = 1
) -> Suggestion:
    """Use only the ``n_best`` clusters with the highest positive degree of matching.

    Ties prefer the smaller cluster, then the smaller first concept id.
    """
    if n_best < 1:
        raise ValueError("n_best must be >= 1")
    cls = [frozenset(c) for c in clusters]
    seen = c_at_i.flatten()
    scored = []
    for i, c in enumerate(cls):
        d = degree_of_matching(c, c_at_i)
        if d > 0:
            scored.append((-d, len(c), min(c), sorted(c), i))
    scored.sort()
    picked = tuple(sorted(entry[-1] for entry in scored[:n_best]))
    return Suggestion(_union_minus(cls, picked, seen), picked, Strategy.SLACK_SELECTIVE, n_best)


def suggest_strict(clusters: Sequence[Iterable[str]], c_at_i: SessionConceptSet) -> Suggestion:
    """Use clusters containing every concept of C@i, ambiguous members included.

    An empty C@i selects nothing rather than every cluster.
    """
    cls = [frozenset(c) for c in clusters]
    seen = c_at_i.flatten()
    picked = tuple(i for i, c in enumerate(cls) if seen and seen <= c)
    return Suggestion(_union_minus(cls, picked, seen), picked, Strategy.STRICT)


def suggest(
    clusters: Sequence[Iterable[str]],
    c_at_i: SessionConceptSet,
    strategy: Strategy | str = Strategy.SLACK,
    n_best: int = 1,
) -> Suggestion:
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.SLACK:
        return suggest_slack(clusters, c_at_i)
    if strategy is Strategy.SLACK_SELECTIVE:
        return suggest_slack_selective(clusters, c_at_i, n_best)
    return suggest_strict(clusters, c_at_i)
