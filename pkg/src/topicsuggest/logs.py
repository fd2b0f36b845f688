"""AOL-format query log parsing and sessionization.

Input lines are tab separated::

    AnonID  Query  QueryTime  ItemRank  ClickURL

Click-through events repeat the query row, so consecutive rows with the same
(query, time) pair collapse into one query.  A new session starts whenever
two consecutive queries of a user are more than 30 minutes apart.
"""

from __future__ import annotations

import heapq
import logging
import os
import tempfile
import zlib
from collections import OrderedDict
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .interpret import Lemmatizer, interpret_query
from .ontology import Ontology

__all__ = [
    "BotPolicy",
    "LogRecord",
    "ParseStats",
    "Query",
    "SESSION_GAP",
    "Session",
    "filter_relevant",
    "flag_bots",
    "is_bot_session",
    "parse_log",
    "parse_time",
    "read_sessions",
    "sessionize",
    "sessionize_file",
    "users_contiguous",
    "write_log",
    "write_sessions",
]

log = logging.getLogger(__name__)

SESSION_GAP = timedelta(seconds=1800)
HEADER = ("AnonID", "Query", "QueryTime", "ItemRank", "ClickURL")


@dataclass(frozen=True)
class LogRecord:
    anon_id: str
    query: str
    query_time: datetime
    item_rank: float | None = None
    click_url: str | None = None

    def to_line(self) -> str:
        rank = "" if self.item_rank is None else repr(float(self.item_rank))
        return "\t".join(
            (self.anon_id, self.query, format_time(self.query_time), rank, self.click_url or "")
        )


class Query(tuple):
    """(text, time) pair; a tuple so equality and hashing come for free."""

    __slots__ = ()

    def __new__(cls, text: str, time: datetime):
        return tuple.__new__(cls, (text, time))

    @property
    def text(self) -> str:
        return self[0]

    @property
    def time(self) -> datetime:
        return self[1]


@dataclass
class Session:
    user: str
    queries: list[Query]
    id: int = 0

    @property
    def texts(self) -> list[str]:
        return [q.text for q in self.queries]

    @property
    def duration(self) -> timedelta:
        return self.queries[-1].time - self.queries[0].time

    def __len__(self) -> int:
        return len(self.queries)


@dataclass
class ParseStats:
    lines: int = 0
    records: int = 0
    errors: int = 0
    examples: list[str] = field(default_factory=list)

    def error(self, lineno: int, msg: str) -> None:
        self.errors += 1
        if len(self.examples) < 20:
            self.examples.append(f"line {lineno}: {msg}")


def parse_time(text: str) -> datetime:
    # fromisoformat accepts "YYYY-MM-DD HH:MM:SS" and is much faster than strptime
    if len(text) != 19 or text[4] != "-" or text[10] != " ":
        raise ValueError(f"bad timestamp {text!r}")
    return datetime.fromisoformat(text)


def format_time(t: datetime) -> str:
    return t.strftime("%Y-%m-%d %H:%M:%S")


def _parse_line(line: str) -> LogRecord:
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) != 5:
        raise ValueError(f"expected 5 tab-separated fields, got {len(parts)}")
    anon, query, qtime, rank, url = parts
    if not anon:
        raise ValueError("empty AnonID")
    return LogRecord(
        anon_id=anon,
        query=query,
        query_time=parse_time(qtime),
        item_rank=float(rank) if rank else None,
        click_url=url or None,
    )


def parse_lines(lines: Iterable[str], stats: ParseStats | None = None) -> Iterator[LogRecord]:
    """Yield records from raw lines, skipping (and counting) malformed ones."""
    stats = stats if stats is not None else ParseStats()
    for lineno, line in enumerate(lines, 1):
        stats.lines += 1
        if lineno == 1 and line.startswith("AnonID"):
            continue
        if not line.strip():
            continue
        try:
            rec = _parse_line(line)
        except ValueError as exc:
            stats.error(lineno, str(exc))
            continue
        stats.records += 1
        yield rec


def parse_log(path: str | Path, stats: ParseStats | None = None) -> Iterator[LogRecord]:
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        yield from parse_lines(fh, stats)


def write_log(records: Iterable[LogRecord], out: TextIO) -> None:
    out.write("\t".join(HEADER) + "\n")
    for r in records:
        out.write(r.to_line() + "\n")


def _user_sessions(user: str, records: list[LogRecord]) -> list[Session]:
    records.sort(key=lambda r: r.query_time)  # stable: ties keep file order
    sessions: list[Session] = []
    current: list[Query] = []
    for r in records:
        q = Query(r.query, r.query_time)
        if current:
            if q == current[-1]:
                continue
            if q.time - current[-1].time > SESSION_GAP:
                sessions.append(Session(user, current, len(sessions)))
                current = []
        current.append(q)
    if current:
        sessions.append(Session(user, current, len(sessions)))
    return sessions


def sessionize(records: Iterable[LogRecord]) -> Iterator[Session]:
    """Group records by user (first-appearance order) and split on >30 min gaps."""
    by_user: OrderedDict[str, list[LogRecord]] = OrderedDict()
    for r in records:
        by_user.setdefault(r.anon_id, []).append(r)
    for user, recs in by_user.items():
        yield from _user_sessions(user, recs)


def _contiguous_sessions(records: Iterable[LogRecord]) -> Iterator[Session]:
    user: str | None = None
    buf: list[LogRecord] = []
    for r in records:
        if r.anon_id != user:
            if user is not None:
                yield from _user_sessions(user, buf)
            user, buf = r.anon_id, []
        buf.append(r)
    if user is not None:
        yield from _user_sessions(user, buf)


def users_contiguous(path: str | Path) -> bool:
    """True when every user's rows form one contiguous block (AOL files do)."""
    seen: set[str] = set()
    user = None
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        for line in fh:
            anon = line.split("\t", 1)[0]
            if anon != user:
                if anon in seen:
                    return False
                seen.add(anon)
                user = anon
    return True


def _partitioned_sessions(path: Path, partitions: int, stats: ParseStats) -> Iterator[Session]:
    """Hash-partition records by user into temp files, sessionize each partition,
    then merge partition outputs back into first-appearance user order."""
    with tempfile.TemporaryDirectory(prefix="sessionize-") as tmp:
        parts = [open(os.path.join(tmp, f"p{i}.tsv"), "w", encoding="utf-8") for i in range(partitions)]
        order: dict[str, int] = {}
        try:
            for r in parse_log(path, stats):
                rank = order.setdefault(r.anon_id, len(order))
                p = zlib.crc32(r.anon_id.encode()) % partitions
                parts[p].write(f"{rank}\t{r.to_line()}\n")
        finally:
            for fh in parts:
                fh.close()
        del order
        sorted_paths = []
        for i in range(partitions):
            src = os.path.join(tmp, f"p{i}.tsv")
            by_rank: dict[int, list[LogRecord]] = {}
            with open(src, encoding="utf-8") as fh:
                for line in fh:
                    rank, rest = line.split("\t", 1)
                    by_rank.setdefault(int(rank), []).append(_parse_line(rest))
            os.remove(src)
            dst = os.path.join(tmp, f"s{i}.tsv")
            with open(dst, "w", encoding="utf-8") as out:
                for rank in sorted(by_rank):
                    recs = by_rank[rank]
                    for s in _user_sessions(recs[0].anon_id, recs):
                        for q in s.queries:
                            out.write(f"{rank}\t{_session_line(s, q)}\n")
            del by_rank
            sorted_paths.append(dst)
        files = [open(p, encoding="utf-8") for p in sorted_paths]
        try:
            merged = heapq.merge(*files, key=lambda line: int(line.split("\t", 1)[0]))
            yield from _sessions_from_lines(line.split("\t", 1)[1] for line in merged)
        finally:
            for fh in files:
                fh.close()


def sessionize_file(path: str | Path, stats: ParseStats | None = None, partitions: int = 64) -> Iterator[Session]:
    """Sessionize a log file in bounded memory.

    Logs whose rows are grouped by user stream with memory proportional to one
    user's history.  Otherwise records are hash-partitioned by user into
    temporary files first.  Output order matches :func:`sessionize` either way.
    """
    stats = stats if stats is not None else ParseStats()
    if users_contiguous(path):
        yield from _contiguous_sessions(parse_log(path, stats))
    else:
        log.info("users are interleaved in %s; using %d hash partitions", path, partitions)
        yield from _partitioned_sessions(Path(path), partitions, stats)


def _session_line(s: Session, q: Query) -> str:
    return f"{s.user}\t{s.id}\t{format_time(q.time)}\t{q.text}"


def write_sessions(sessions: Iterable[Session], out: TextIO) -> int:
    """Write ``user<TAB>ordinal<TAB>time<TAB>query`` lines; returns the session count."""
    n = 0
    for s in sessions:
        for q in s.queries:
            out.write(_session_line(s, q) + "\n")
        n += 1
    return n


def _sessions_from_lines(lines: Iterable[str]) -> Iterator[Session]:
    cur: Session | None = None
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line:
            continue
        parts = line.split("\t", 3)
        if len(parts) != 4:
            raise ValueError(f"session file line {lineno}: expected 4 tab-separated fields")
        user, ordinal, qtime, text = parts
        key = (user, int(ordinal))
        q = Query(text, parse_time(qtime))
        if cur is None or (cur.user, cur.id) != key:
            if cur is not None:
                yield cur
            cur = Session(user, [q], key[1])
        else:
            cur.queries.append(q)
    if cur is not None:
        yield cur


def read_sessions(path: str | Path) -> Iterator[Session]:
    with open(path, encoding="utf-8") as fh:
        yield from _sessions_from_lines(fh)


def filter_relevant(
    sessions: Iterable[Session], ontology: Ontology, lemmatizer: Lemmatizer | None = None
) -> Iterator[Session]:
    """Keep whole sessions that contain at least one query matching the ontology."""
    for s in sessions:
        if any(interpret_query(ontology, q.text, lemmatizer) for q in s.queries):
            yield s


@dataclass(frozen=True)
class BotPolicy:
    max_queries: int = 20_000
    max_duration: timedelta = timedelta(days=6)


def is_bot_session(session: Session, policy: BotPolicy = BotPolicy()) -> bool:
    return len(session.queries) > policy.max_queries or session.duration > policy.max_duration


def flag_bots(sessions: Iterable[Session], policy: BotPolicy = BotPolicy()) -> set[str]:
    """Users owning at least one session over the query-count or duration limit."""
    return {s.user for s in sessions if is_bot_session(s, policy)}
