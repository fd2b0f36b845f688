"""Shared fixtures-as-functions and independent oracles for the test suite."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from topicsuggest.interpret import QueryInterpretation
from topicsuggest.ontology import Concept, Ontology


def civic_ontology() -> Ontology:
    """Small city-services ontology used by the interpretation examples."""
    return Ontology.from_concepts(
        [
            Concept("kindergarten", "Kindergarten", "kindergarten",
                    frozenset({"nursery", "pre school"}), frozenset({"child", "educational", "young"})),
            Concept("childcare_service", "Childcare Service", "childcare", frozenset(), frozenset({"child", "care"})),
            Concept("play_area", "Play Area", "playground", frozenset({"play area"}), frozenset({"child"})),
            Concept("school", "School", "school", frozenset({"public school"}), frozenset({"education"})),
            Concept("transport", "Local Public Transportation", "transportation",
                    frozenset({"public transport", "bus"}), frozenset()),
            Concept("library", "Library", "library", frozenset(), frozenset({"book"})),
        ]
    )


def eq2_oracle(session: list[QueryInterpretation]) -> dict[tuple[str, str], Fraction]:
    """Direct evaluation of the per-session evidence rule.

    ev_k(c) is the largest factor c received in queries 1..k.  Query k
    contributes min(ev_k(a), ev_k(b)) to a pair when it references a or b
    and both have been seen by then; the session value is the max over k.
    """
    factors = []
    for q in session:
        f: dict[str, Fraction] = {}
        for g in q.groups:
            for c in g.concepts:
                f[c] = max(f.get(c, Fraction(0)), Fraction(1, len(g.concepts)))
        factors.append(f)
    concepts = sorted({c for f in factors for c in f})
    out = {}
    for a, b in combinations(concepts, 2):
        best = Fraction(0)
        for k in range(len(session)):
            if a not in factors[k] and b not in factors[k]:
                continue
            ev_a = max((factors[j].get(a, Fraction(0)) for j in range(k + 1)))
            ev_b = max((factors[j].get(b, Fraction(0)) for j in range(k + 1)))
            if ev_a and ev_b:
                best = max(best, min(ev_a, ev_b))
        if best:
            out[(a, b)] = best
    return out


def _canonical_groups(used: int, max_concepts: int = 6, max_group: int = 3):
    # Groups over concepts 0..used-1 plus fresh ones numbered in order of first
    # use, so every session is generated once per relabelling class.
    for fresh in range(0, min(max_group, max_concepts - used) + 1):
        for old in range(0, max_group - fresh + 1):
            if fresh + old == 0:
                continue
            for picked in combinations(range(used), old):
                yield frozenset(picked) | frozenset(range(used, used + fresh)), used + fresh


def canonical_sessions(max_queries: int = 4):
    """All single-group-per-query sessions of 1..max_queries queries over <= 6
    concepts with group size <= 3, one representative per relabelling."""

    def rec(n, used):
        if n == 0:
            yield ()
            return
        for g, nxt in _canonical_groups(used):
            for rest in rec(n - 1, nxt):
                yield (g,) + rest

    for n in range(1, max_queries + 1):
        for s in rec(n, 0):
            yield [QueryInterpretation.of([f"c{x}" for x in g]) for g in s]
