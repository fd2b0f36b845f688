"""Query interpretation: tokens -> lemmas -> ontology concept references.

A query maps to a list of :class:`RefGroup`.  A group with one concept is an
unambiguous reference; a group with ``m`` concepts is an ambiguity set whose
members each receive evidence ``1/m``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .ontology import Ontology

__all__ = [
    "Lemmatizer",
    "QueryInterpretation",
    "RefGroup",
    "SessionConceptSet",
    "extend_session_set",
    "interpret_query",
    "lemmatize",
    "load_lemma_dictionary",
    "session_concept_set",
    "tokenize",
]

_NON_ALNUM = re.compile(r"[^0-9a-z]+")
_VOWELS = frozenset("aeiouy")

# Irregular forms the suffix rules get wrong.
_BUILTIN_LEMMAS = {
    "children": "child",
    "people": "person",
    "men": "man",
    "women": "woman",
    "feet": "foot",
    "teeth": "tooth",
    "mice": "mouse",
    "geese": "goose",
    "buses": "bus",
    "houses": "house",
    "courses": "course",
    "analyses": "analysis",
    "indices": "index",
    "criteria": "criterion",
    "data": "data",
    "news": "news",
    "series": "series",
    "species": "species",
}


def tokenize(text: str) -> list[str]:
    return [t for t in _NON_ALNUM.split(text.lower()) if t]


def _undouble(stem: str) -> str:
    if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in "aeioulsz":
        return stem[:-1]
    return stem


def _suffix_lemma(tok: str) -> str:
    n = len(tok)
    if tok.isdigit():
        return tok
    if n > 4 and tok.endswith("ies"):
        return tok[:-3] + "y"
    if n > 4 and tok.endswith(("sses", "shes", "ches", "xes", "zes")):
        return tok[:-2]
    if n > 3 and tok.endswith("s") and not tok.endswith(("ss", "us", "is")):
        return tok[:-1]
    if n > 5 and tok.endswith("ing"):
        stem = tok[:-3]
        if _VOWELS & set(stem):
            return _undouble(stem)
    if n > 4 and tok.endswith("ed") and not tok.endswith("eed"):
        stem = tok[:-2]
        if _VOWELS & set(stem):
            return _undouble(stem)
    return tok


class Lemmatizer:
    """Dictionary lookup with an English suffix-stripping fallback."""

    def __init__(self, dictionary: dict[str, str] | None = None, builtin: bool = True):
        self.dictionary: dict[str, str] = dict(_BUILTIN_LEMMAS) if builtin else {}
        if dictionary:
            self.dictionary.update({k.lower(): v.lower() for k, v in dictionary.items()})
        self._cached = lru_cache(maxsize=1 << 16)(self._lemma)

    def _lemma(self, token: str) -> str:
        hit = self.dictionary.get(token)
        return hit if hit is not None else _suffix_lemma(token)

    def __call__(self, token: str) -> str:
        return self._cached(token)


def load_lemma_dictionary(path: str | Path) -> dict[str, str]:
    """Read ``surface<TAB>lemma`` lines; blank lines and ``#`` comments are ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
            out[parts[0].strip().lower()] = parts[1].strip().lower()
    return out


_default_lemmatizer = Lemmatizer()


def lemmatize(token: str) -> str:
    return _default_lemmatizer(token)


@dataclass(frozen=True)
class RefGroup:
    concepts: frozenset[str]

    def __post_init__(self):
        if not self.concepts:
            raise ValueError("a reference group needs at least one concept")

    @property
    def factor(self) -> Fraction:
        return Fraction(1, len(self.concepts))

    @property
    def ambiguous(self) -> bool:
        return len(self.concepts) > 1


@dataclass(frozen=True)
class QueryInterpretation:
    groups: tuple[RefGroup, ...] = ()
    # ((first_token, end_token), group index) for every phrase that survived resolution
    matched_tokens: tuple[tuple[tuple[int, int], int], ...] = ()

    @classmethod
    def of(cls, *groups: Iterable[str]) -> "QueryInterpretation":
        """Build an interpretation from raw concept groups (used by tests and the synthesizer)."""
        return cls(tuple(RefGroup(frozenset(g)) for g in _resolve([frozenset(g) for g in groups])))

    def __bool__(self) -> bool:
        return bool(self.groups)

    def concepts(self) -> frozenset[str]:
        return frozenset().union(*(g.concepts for g in self.groups))

    def factors(self) -> dict[str, Fraction]:
        """Per-concept evidence; a concept in several groups keeps its largest factor."""
        out: dict[str, Fraction] = {}
        for g in self.groups:
            f = g.factor
            for c in g.concepts:
                if f > out.get(c, 0):
                    out[c] = f
        return out


def _resolve(raw: Sequence[frozenset[str]]) -> list[frozenset[str]]:
    # Drop concepts that the same query references unambiguously; a remainder of
    # one concept becomes a singleton, which may in turn shrink other groups.
    singles = {next(iter(g)) for g in raw if len(g) == 1}
    groups = list(raw)
    while True:
        changed = False
        out = []
        for g in groups:
            if len(g) > 1:
                r = g - singles
                if len(r) == 1:
                    singles |= r
                    changed = True
                g = r
            if g:
                out.append(g)
        groups = out
        if not changed:
            break
    seen: set[frozenset[str]] = set()
    unique = []
    for g in groups:
        if g not in seen:
            seen.add(g)
            unique.append(g)
    return unique


def interpret_query(ontology: Ontology, text: str, lemmatizer: Lemmatizer | None = None) -> QueryInterpretation:
    """Greedy longest-match of lemmatized token runs against the ontology index."""
    lem = lemmatizer or _default_lemmatizer
    tokens = [lem(t) for t in tokenize(text)]
    spans: list[tuple[tuple[int, int], frozenset[str]]] = []
    i, n = 0, len(tokens)
    while i < n:
        for length in range(min(ontology.max_phrase_len, n - i), 0, -1):
            hit = ontology.lemma_index.get(" ".join(tokens[i : i + length]))
            if hit:
                spans.append(((i, i + length), hit))
                i += length
                break
        else:
            i += 1
    if not spans:
        return QueryInterpretation()
    groups = _resolve([s for _, s in spans])
    # Re-attach each span to the resolved group that now holds its concepts.
    matched = []
    for span, concepts in spans:
        for gi, g in enumerate(groups):
            if g <= concepts:
                matched.append((span, gi))
                break
    return QueryInterpretation(tuple(RefGroup(g) for g in groups), tuple(matched))


@dataclass(frozen=True)
class SessionConceptSet:
    """C@i: unambiguous concepts plus ambiguity sets of size >= 2."""

    unambiguous: frozenset[str] = frozenset()
    ambiguity_sets: frozenset[frozenset[str]] = field(default_factory=frozenset)

    def flatten(self) -> frozenset[str]:
        return self.unambiguous.union(*self.ambiguity_sets)

    def __bool__(self) -> bool:
        return bool(self.unambiguous or self.ambiguity_sets)

    def contribution(self, concept: str) -> Fraction:
        """1 for unambiguous members, 1/|AMB| via the smallest containing set, else 0."""
        if concept in self.unambiguous:
            return Fraction(1)
        best = Fraction(0)
        for amb in self.ambiguity_sets:
            if concept in amb and Fraction(1, len(amb)) > best:
                best = Fraction(1, len(amb))
        return best

    def describe(self) -> str:
        parts = sorted(self.unambiguous)
        parts += ["{" + ", ".join(sorted(a)) + "}" for a in sorted(self.ambiguity_sets, key=sorted)]
        return "{" + ", ".join(parts) + "}"


def extend_session_set(
    current: SessionConceptSet, q: QueryInterpretation, promote: bool = True
) -> SessionConceptSet:
    """Fold one interpreted query into C@i.

    With ``promote`` (the default) an unambiguous reference removes its concept
    from every stored ambiguity set, and a set left with a single member
    promotes that member to unambiguous.  With ``promote=False`` stored sets are
    kept intact (the residual-ambiguity reading) unless all their members are
    unambiguous; the disjointness invariant then does not hold.
    """
    unamb = set(current.unambiguous)
    amb = list(current.ambiguity_sets)
    for g in q.groups:
        if g.ambiguous:
            amb.append(g.concepts)
        else:
            unamb |= g.concepts
    if not promote:
        kept = frozenset(a for a in amb if not a <= unamb)
        return SessionConceptSet(frozenset(unamb), kept)
    while True:
        changed = False
        reduced = set()
        for a in amb:
            r = a - unamb
            if len(r) >= 2:
                reduced.add(frozenset(r))
            elif len(r) == 1:
                unamb |= r
                changed = True
        amb = list(reduced)
        if not changed:
            break
    return SessionConceptSet(frozenset(unamb), frozenset(amb))


def session_concept_set(
    interpretations: Iterable[QueryInterpretation], promote: bool = True
) -> SessionConceptSet:
    out = SessionConceptSet()
    for q in interpretations:
        out = extend_session_set(out, q, promote=promote)
    return out
