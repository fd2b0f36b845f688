"""Domain ontology: concept records and the phrase index used for matching.

The document format is a JSON array of flat records::

    [{"id": "kindergarten", "label": "Kindergarten", "lemma": "kindergarten",
      "synonyms": ["nursery", "pre-school"], "keywords": ["child", "young"],
      "description": "An educational institution for young children."}]

Vocabulary entries are lowercased on load and separator runs (``-``, ``_``,
whitespace) are collapsed to a single space, so ``"pre-school"`` is stored as
the two-token phrase ``"pre school"``.  Entries are assumed to be lemmatized
already; the loader never re-lemmatizes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

__all__ = [
    "Concept",
    "Ontology",
    "OntologyError",
    "OntologyFormatError",
    "OntologyValidationError",
    "load_ontology",
    "lookup",
    "normalize_phrase",
    "save_ontology",
]

_SEPARATORS = re.compile(r"[^0-9a-z]+")
_LANG_TAG = re.compile(r"@[a-z]{2,3}(-[a-z0-9]+)?$")


class OntologyError(ValueError):
    pass


class OntologyFormatError(OntologyError):
    pass


class OntologyValidationError(OntologyError):
    pass


def normalize_phrase(text: str) -> str:
    """Lowercase, drop a trailing language tag and space-join alphanumeric runs."""
    text = text.strip().lower()
    text = _LANG_TAG.sub("", text.strip('"')).strip('"')
    return " ".join(t for t in _SEPARATORS.split(text) if t)


@dataclass(frozen=True)
class Concept:
    id: str
    label: str
    lemma: str
    synonyms: frozenset[str] = frozenset()
    keywords: frozenset[str] = frozenset()
    description: str = ""

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset({self.lemma}) | self.synonyms | self.keywords


@dataclass
class Ontology:
    concepts: dict[str, Concept]
    lemma_index: dict[str, frozenset[str]] = field(default_factory=dict)
    max_phrase_len: int = 1

    @classmethod
    def from_concepts(cls, concepts: Iterable[Concept]) -> "Ontology":
        by_id: dict[str, Concept] = {}
        for c in concepts:
            if c.id in by_id:
                raise OntologyValidationError(f"duplicate concept id {c.id!r}")
            if not c.label:
                raise OntologyValidationError(f"concept {c.id!r} has an empty label")
            if not c.lemma:
                raise OntologyValidationError(f"concept {c.id!r} has an empty lemma")
            by_id[c.id] = c
        if not by_id:
            raise OntologyValidationError("ontology contains no concepts")
        index: dict[str, set[str]] = {}
        for c in by_id.values():
            for phrase in c.vocabulary:
                index.setdefault(phrase, set()).add(c.id)
        longest = max(len(p.split()) for p in index)
        return cls(
            concepts=by_id,
            lemma_index={p: frozenset(ids) for p, ids in index.items()},
            max_phrase_len=longest,
        )

    def __contains__(self, concept_id: object) -> bool:
        return concept_id in self.concepts

    def __len__(self) -> int:
        return len(self.concepts)

    def lookup(self, phrase: str) -> frozenset[str]:
        return self.lemma_index.get(phrase, frozenset())

    def to_records(self) -> list[dict]:
        records = []
        for c in sorted(self.concepts.values(), key=lambda c: c.id):
            rec = {
                "id": c.id,
                "label": c.label,
                "lemma": c.lemma,
                "synonyms": sorted(c.synonyms),
                "keywords": sorted(c.keywords),
            }
            if c.description:
                rec["description"] = c.description
            records.append(rec)
        return records


def lookup(ontology: Ontology, phrase: str) -> frozenset[str]:
    """Return the ids of every concept whose vocabulary contains ``phrase``."""
    return ontology.lookup(phrase)


def _string_list(rec: dict, key: str, where: str) -> frozenset[str]:
    value = rec.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise OntologyFormatError(f"{where}: field {key!r} must be an array of strings")
    return frozenset(p for p in (normalize_phrase(v) for v in value) if p)


def _concept_from_record(rec: object, position: int) -> Concept:
    where = f"record {position}"
    if not isinstance(rec, dict):
        raise OntologyFormatError(f"{where}: expected an object, got {type(rec).__name__}")
    for key in ("id", "label", "lemma"):
        if not isinstance(rec.get(key), str):
            raise OntologyFormatError(f"{where}: missing or non-string field {key!r}")
    where = f"record {position} (id={rec['id']!r})"
    description = rec.get("description", "")
    if not isinstance(description, str):
        raise OntologyFormatError(f"{where}: field 'description' must be a string")
    lemma = normalize_phrase(rec["lemma"])
    if not lemma:
        raise OntologyValidationError(f"{where}: lemma is empty after normalization")
    return Concept(
        id=rec["id"],
        label=_LANG_TAG.sub("", rec["label"].strip()).strip('"'),
        lemma=lemma,
        synonyms=_string_list(rec, "synonyms", where),
        keywords=_string_list(rec, "keywords", where),
        description=description,
    )


def load_ontology(path: str | Path) -> Ontology:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise OntologyFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if isinstance(raw, dict) and "concepts" in raw:
        raw = raw["concepts"]
    if not isinstance(raw, list):
        raise OntologyFormatError(f"{path}: top-level value must be an array of records")
    try:
        return Ontology.from_concepts(_concept_from_record(r, i) for i, r in enumerate(raw))
    except OntologyError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def save_ontology(ontology: Ontology, path: str | Path) -> None:
    text = json.dumps(ontology.to_records(), indent=2, ensure_ascii=False, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
