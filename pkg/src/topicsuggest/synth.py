"""Seeded synthetic ontology + AOL-format log with planted concept clusters.

Every session samples its concepts from one planted cluster, so the planted
clusters are the ground truth that the graph -> communities pipeline should
recover.  Ambiguity is realised with keywords shared by small groups of
concepts (possibly from different clusters); noise queries reference a
concept drawn uniformly from the whole ontology.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Sequence

from .logs import HEADER, LogRecord, format_time
from .ontology import Concept, Ontology

__all__ = ["SyntheticData", "generate_synthetic_log", "write_bulk_log"]

_TEMPLATES = ("{t}", "{t} near me", "best {t}", "{t} in town", "cheap {t} info", "{t} opening hours")
_EPOCH = datetime(2006, 3, 1)


@dataclass
class SyntheticData:
    ontology: Ontology
    records: list[LogRecord]
    planted: list[frozenset[str]]
    # planted cluster index of every generated session, in generation order
    session_clusters: list[int]


def _concept_id(k: int, j: int) -> str:
    return f"c{k:02d}_{j:02d}"


def generate_synthetic_log(
    cluster_sizes: Sequence[int] = (4, 4),
    sessions_per_cluster: int = 200,
    queries_per_session: int | tuple[int, int] = (2, 6),
    ambiguity_rate: float = 0.0,
    noise_rate: float = 0.0,
    seed: int = 0,
    ambiguity_size: int = 3,
    click_rate: float = 0.3,
    sessions_per_user: int = 3,
) -> SyntheticData:
    if not cluster_sizes or any(s < 1 for s in cluster_sizes):
        raise ValueError("cluster sizes must be positive")
    if sessions_per_cluster < 1:
        raise ValueError("sessions_per_cluster must be positive")
    for name, rate in (("ambiguity_rate", ambiguity_rate), ("noise_rate", noise_rate), ("click_rate", click_rate)):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    if isinstance(queries_per_session, int):
        q_lo = q_hi = queries_per_session
    else:
        q_lo, q_hi = queries_per_session
    if not 1 <= q_lo <= q_hi:
        raise ValueError("queries_per_session must be positive")
    rng = random.Random(seed)

    planted = [[_concept_id(k, j) for j in range(size)] for k, size in enumerate(cluster_sizes)]
    all_ids = [c for cl in planted for c in cl]
    lemma = {c: "topic" + c[1:].replace("_", "x") for c in all_ids}
    shared: dict[str, str] = {}
    if ambiguity_rate > 0 and len(all_ids) >= 2:
        order = list(all_ids)
        rng.shuffle(order)
        size = max(2, ambiguity_size)
        chunks = [order[i : i + size] for i in range(0, len(order), size)]
        if len(chunks) > 1 and len(chunks[-1]) < 2:
            chunks[-2].extend(chunks.pop())
        for g, chunk in enumerate(chunks):
            for c in chunk:
                shared[c] = f"shared{g}"
    concepts = [
        Concept(
            id=c,
            label=f"Topic {c[1:]}",
            lemma=lemma[c],
            keywords=frozenset({shared[c]}) if c in shared else frozenset(),
        )
        for c in all_ids
    ]
    ontology = Ontology.from_concepts(concepts)

    records: list[LogRecord] = []
    session_clusters: list[int] = []
    n_sessions = sessions_per_cluster * len(planted)
    user_time: dict[int, datetime] = {}
    for s in range(n_sessions):
        k = s % len(planted)
        session_clusters.append(k)
        user_no = s // sessions_per_user
        t = user_time.get(user_no, _EPOCH + timedelta(minutes=rng.randrange(0, 60 * 24 * 30)))
        members = list(planted[k])
        rng.shuffle(members)
        length = rng.randint(q_lo, q_hi)
        for q in range(length):
            c = members[q % len(members)]
            if noise_rate and rng.random() < noise_rate:
                c = rng.choice(all_ids)
            term = shared[c] if c in shared and rng.random() < ambiguity_rate else lemma[c]
            text = rng.choice(_TEMPLATES).format(t=term)
            user = str(100000 + user_no)
            if click_rate and rng.random() < click_rate:
                for _ in range(rng.randint(1, 2)):
                    rank = float(rng.randint(1, 10))
                    records.append(LogRecord(user, text, t, rank, f"http://www.example{rng.randint(1, 99)}.com"))
            else:
                records.append(LogRecord(user, text, t))
            t += timedelta(seconds=rng.randint(20, 600))
        user_time[user_no] = t + timedelta(hours=2, minutes=rng.randint(0, 600))
    return SyntheticData(ontology, records, [frozenset(c) for c in planted], session_clusters)


def write_bulk_log(path: str | Path, lines: int, seed: int = 0, users: int = 200_000, grouped: bool = True) -> None:
    """Write a large AOL-format log quickly (scale tests).

    Rows are grouped by user like the AOL files, or with ``grouped=False``
    drawn for random users in global time order (interleaved).
    """
    rng = random.Random(seed)
    words = ["school", "park", "hospital", "library", "bus", "museum", "weather", "news", "map", "hotel"]
    gaps = (30, 90, 400, 2000, 5000)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(HEADER) + "\n")
        if not grouped:
            t = _EPOCH
            for _ in range(lines):
                t += timedelta(seconds=rng.choice((0, 1, 2)))
                fh.write(f"{rng.randrange(users)}\t{rng.choice(words)} {rng.choice(words)}\t{format_time(t)}\t\t\n")
            return
        per_user = max(1, lines // users)
        written = 0
        uid = 0
        while written < lines:
            uid += 1
            t = _EPOCH + timedelta(seconds=rng.randrange(0, 86400 * 60))
            n = min(per_user, lines - written)
            for _ in range(n):
                t += timedelta(seconds=rng.choice(gaps))
                fh.write(f"{uid}\t{rng.choice(words)} {rng.choice(words)}\t{format_time(t)}\t\t\n")
            written += n
