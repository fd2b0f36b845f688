"""Dataset distributions: queries per user, session lengths, sessions per user."""

from __future__ import annotations

import csv
import io
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .interpret import QueryInterpretation
from .logs import Session

__all__ = [
    "DistributionSummary",
    "concepts_per_query",
    "queries_per_user",
    "session_lengths",
    "sessions_per_user",
    "summarize",
    "summary_csv",
]


@dataclass(frozen=True)
class DistributionSummary:
    """Scalar summary plus ``(value, count)`` histogram.  ``stddev`` is the population one."""

    n: int
    min: float
    max: float
    mean: float
    median: float
    stddev: float
    histogram: tuple[tuple[float, int], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "count"])
        for x, c in self.histogram:
            w.writerow([_fmt(x), c])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "median": self.median,
            "stddev": self.stddev,
        }


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.6f}"


def summarize(values: Iterable[float]) -> DistributionSummary:
    data = list(values)
    if not data:
        return DistributionSummary(0, 0.0, 0.0, 0.0, 0.0, 0.0, ())
    hist = tuple(sorted(Counter(data).items()))
    return DistributionSummary(
        n=len(data),
        min=min(data),
        max=max(data),
        mean=statistics.fmean(data),
        median=statistics.median(data),
        stddev=statistics.pstdev(data),
        histogram=hist,
    )


def queries_per_user(sessions: Iterable[Session]) -> DistributionSummary:
    per_user: Counter[str] = Counter()
    for s in sessions:
        per_user[s.user] += len(s.queries)
    return summarize(per_user.values())


def session_lengths(sessions: Iterable[Session]) -> DistributionSummary:
    return summarize(len(s.queries) for s in sessions)


def sessions_per_user(sessions: Iterable[Session]) -> DistributionSummary:
    return summarize(Counter(s.user for s in sessions).values())


def concepts_per_query(interpretations: Iterable[QueryInterpretation]) -> DistributionSummary:
    """Distinct concepts referenced per query, over queries with at least one match."""
    return summarize(len(q.concepts()) for q in interpretations if q)


def summary_csv(summaries: Sequence[tuple[str, DistributionSummary]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["distribution", "n", "min", "max", "mean", "median", "stddev"])
    for name, s in summaries:
        w.writerow([name, s.n, _fmt(s.min), _fmt(s.max), f"{s.mean:.6f}", _fmt(s.median), f"{s.stddev:.6f}"])
    return buf.getvalue()
