"""Offline evaluation: cluster validation, threshold selection and strategy scoring.

Sessions are handled as lists of :class:`QueryInterpretation` (one entry per
query, empty for queries that matched nothing).
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from statistics import mean
from typing import Iterable, Sequence

from .cograph import build_global_graph, prune
from .communities import ClusterSet, detect_communities
from .interpret import Lemmatizer, QueryInterpretation, interpret_query, session_concept_set
from .logs import Session
from .ontology import Ontology
from .suggest import Strategy, suggest

__all__ = [
    "EVAL1",
    "EVAL2",
    "EvalReport",
    "PRF",
    "PipelineConfig",
    "build_clusters",
    "cluster_set_f1",
    "cross_validate_strategies",
    "eval_strategies",
    "fold_indices",
    "interpret_sessions",
    "prf",
    "select_threshold",
    "session_truth",
    "trend",
    "trend_rows_to_csv",
    "validate_clusters",
]

EVAL1 = "eval1"
EVAL2 = "eval2"

InterpretedSession = Sequence[QueryInterpretation]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, p: float, r: float) -> "PRF":
        return cls(p, r, 2 * p * r / (p + r) if p + r > 0 else 0.0)

    @classmethod
    def mean(cls, values: Sequence["PRF"]) -> "PRF":
        if not values:
            return cls(0.0, 0.0, 0.0)
        return cls(
            mean(v.precision for v in values),
            mean(v.recall for v in values),
            mean(v.f1 for v in values),
        )

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def prf(predicted: Iterable[str], truth: Iterable[str]) -> PRF:
    """Set precision/recall/F1.  An empty prediction scores zero; empty truth is an error."""
    pred, true = set(predicted), set(truth)
    if not true:
        raise ValueError("truth set is empty; the session should be skipped")
    if not pred:
        return PRF(0.0, 0.0, 0.0)
    hit = len(pred & true)
    return PRF.from_pr(hit / len(pred), hit / len(true))


@dataclass
class PipelineConfig:
    threshold: float = 0.0
    v: int = 2
    seed: int = 0
    max_iters: int = 100
    folds: int = 10
    exact: bool = False

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "v": self.v,
            "seed": self.seed,
            "max_iters": self.max_iters,
            "folds": self.folds,
        }


def interpret_sessions(
    sessions: Iterable[Session], ontology: Ontology, lemmatizer: Lemmatizer | None = None
) -> list[list[QueryInterpretation]]:
    cache: dict[str, QueryInterpretation] = {}
    out = []
    for s in sessions:
        interps = []
        for q in s.queries:
            hit = cache.get(q.text)
            if hit is None:
                hit = cache[q.text] = interpret_query(ontology, q.text, lemmatizer)
            interps.append(hit)
        out.append(interps)
    return out


def build_clusters(sessions: Iterable[InterpretedSession], config: PipelineConfig) -> ClusterSet:
    graph = build_global_graph(sessions, exact=config.exact)
    pruned, _ = prune(graph, config.threshold)
    clusters = detect_communities(pruned, v=config.v, seed=config.seed, max_iters=config.max_iters)
    clusters.params["threshold"] = config.threshold
    return clusters


def session_truth(session: InterpretedSession) -> frozenset[str]:
    """Every concept the session references, ambiguous ones included."""
    return frozenset().union(*(q.concepts() for q in session))


def fold_indices(n: int, folds: int, seed: int = 0) -> list[list[int]]:
    """Seeded random partition of ``range(n)`` into ``folds`` near-equal test sets."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError(f"{n} sessions cannot be split into {folds} folds")
    perm = list(range(n))
    random.Random(seed).shuffle(perm)
    return [sorted(perm[k::folds]) for k in range(folds)]


def _split(sessions: Sequence[InterpretedSession], test: list[int]):
    test_set = set(test)
    learn = [s for i, s in enumerate(sessions) if i not in test_set]
    return learn, [sessions[i] for i in test]


def _range(values: Sequence[float]) -> dict[str, float]:
    if not values:
        return {"min": 0, "mean": 0.0, "max": 0}
    return {"min": min(values), "mean": mean(values), "max": max(values)}


@dataclass
class FoldResult:
    fold: int
    evaluated: int
    skipped: int
    prf: PRF
    success_rate: float | None = None
    successes: int = 0
    selected_clusters: list[int] = field(default_factory=list)
    suggestion_sizes: list[int] = field(default_factory=list)
    n_clusters: int | None = None


@dataclass
class EvalReport:
    kind: str
    config: dict
    folds: list[FoldResult]

    @property
    def evaluated(self) -> int:
        return sum(f.evaluated for f in self.folds)

    @property
    def skipped(self) -> int:
        return sum(f.skipped for f in self.folds)

    @property
    def aggregate(self) -> PRF:
        """Mean over folds of the per-fold session means (empty folds ignored)."""
        return PRF.mean([f.prf for f in self.folds if f.evaluated])

    @property
    def success_rate(self) -> float | None:
        rates = [f.success_rate for f in self.folds if f.evaluated and f.success_rate is not None]
        return mean(rates) if rates else None

    def to_dict(self) -> dict:
        sel = [x for f in self.folds for x in f.selected_clusters]
        sizes = [x for f in self.folds for x in f.suggestion_sizes]
        doc = {
            "kind": self.kind,
            "config": self.config,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "aggregate": self.aggregate.as_dict(),
            "folds": [
                {
                    "fold": f.fold,
                    "evaluated": f.evaluated,
                    "skipped": f.skipped,
                    **f.prf.as_dict(),
                    **({"success_rate": f.success_rate} if f.success_rate is not None else {}),
                    **({"n_clusters": f.n_clusters} if f.n_clusters is not None else {}),
                }
                for f in self.folds
            ],
        }
        if self.success_rate is not None:
            doc["success_rate"] = self.success_rate
            doc["selected_clusters"] = _range(sel)
            doc["suggested_concepts"] = _range(sizes)
        return doc

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "metric", "value"])
        for f in self.folds:
            rows = f.prf.as_dict()
            if f.success_rate is not None:
                rows["success_rate"] = f.success_rate
            for k, v in rows.items():
                w.writerow([f.fold, k, f"{v:.6f}"])
        agg = self.aggregate.as_dict()
        if self.success_rate is not None:
            agg["success_rate"] = self.success_rate
        for k, v in agg.items():
            w.writerow(["all", k, f"{v:.6f}"])
        return buf.getvalue()


def _score_clusters(
    test: Sequence[InterpretedSession], clusters: Sequence[frozenset[str]], mode: str
) -> tuple[list[PRF], int]:
    scores: list[PRF] = []
    skipped = 0
    for session in test:
        truth = session_truth(session)
        overlapping = [c for c in clusters if c & truth] if truth else []
        if not overlapping:
            skipped += 1
            continue
        results = [(prf(c, truth), c) for c in overlapping]
        if mode == EVAL1:
            best = max(results, key=lambda rc: (rc[0].f1, rc[0].recall, -len(rc[1])))
            scores.append(best[0])
        else:
            scores.append(PRF.mean([r for r, _ in results]))
    return scores, skipped


def validate_clusters(
    sessions: Sequence[InterpretedSession], mode: str = EVAL1, config: PipelineConfig | None = None
) -> EvalReport:
    """k-fold validation of clusters against the concepts of held-out sessions.

    Eval1 scores the best cluster per session (max F1, then recall, then the
    smaller cluster); Eval2 averages over every cluster sharing a concept with
    the session.  Sessions sharing no concept with any cluster are skipped.
    """
    config = config or PipelineConfig()
    mode = mode.lower()
    if mode not in (EVAL1, EVAL2):
        raise ValueError(f"unknown validation mode {mode!r}")
    folds = []
    for k, test_idx in enumerate(fold_indices(len(sessions), config.folds, config.seed)):
        learn, test = _split(sessions, test_idx)
        clusters = build_clusters(learn, config)
        scores, skipped = _score_clusters(test, clusters.clusters, mode)
        folds.append(FoldResult(k, len(scores), skipped, PRF.mean(scores), n_clusters=len(clusters)))
    return EvalReport(mode, {**config.as_dict(), "mode": mode}, folds)


def select_threshold(
    sessions: Sequence[InterpretedSession], candidates: Iterable[float], config: PipelineConfig | None = None
) -> tuple[float, list[tuple[float, PRF]]]:
    """Pick the pruning threshold with the best Eval1 F1 (ties go to the smaller threshold)."""
    config = config or PipelineConfig()
    table = []
    for t in sorted(set(candidates)):
        cfg = PipelineConfig(t, config.v, config.seed, config.max_iters, config.folds, config.exact)
        table.append((t, validate_clusters(sessions, EVAL1, cfg).aggregate))
    if not table:
        raise ValueError("no candidate thresholds given")
    best = max(table, key=lambda row: (row[1].f1, -row[0]))
    return best[0], table


def _strategy_fold(
    fold: int,
    sessions: Sequence[InterpretedSession],
    clusters: Sequence[frozenset[str]],
    strategy: Strategy,
    i: int,
    n_best: int,
    exclude_seen: bool,
    promote: bool,
) -> FoldResult:
    scores: list[PRF] = []
    skipped = successes = 0
    selected: list[int] = []
    sizes: list[int] = []
    for session in sessions:
        if len(session) <= i:
            skipped += 1
            continue
        c_at_i = session_concept_set(session[:i], promote=promote)
        truth = session_truth(session[i:])
        if exclude_seen:
            truth -= c_at_i.flatten()
        if not truth:
            skipped += 1
            continue
        sugg = suggest(clusters, c_at_i, strategy, n_best)
        scores.append(prf(sugg.concepts, truth))
        successes += bool(sugg.concepts & truth)
        selected.append(len(sugg.selected_clusters))
        sizes.append(len(sugg.concepts))
    rate = successes / len(scores) if scores else 0.0
    return FoldResult(fold, len(scores), skipped, PRF.mean(scores), rate, successes, selected, sizes, len(clusters))


def eval_strategies(
    sessions: Sequence[InterpretedSession],
    clusters: ClusterSet | Sequence[Iterable[str]],
    strategy: Strategy | str = Strategy.SLACK,
    i: int = 1,
    n_best: int = 1,
    exclude_seen: bool = True,
    promote: bool = True,
) -> EvalReport:
    """Score Sugg@i against the concepts referenced after the first ``i`` queries.

    Sessions with at most ``i`` queries, or with nothing new to predict, are
    skipped.  A session succeeds when any suggested concept is in its truth.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    strategy = Strategy.parse(strategy)
    cls = [frozenset(c) for c in clusters]
    fold = _strategy_fold(0, sessions, cls, strategy, i, n_best, exclude_seen, promote)
    config = {"strategy": strategy.value, "i": i, "n_best": n_best, "truth": "exclude" if exclude_seen else "include"}
    if isinstance(clusters, ClusterSet):
        config.update({k: clusters.params[k] for k in ("v", "seed", "threshold") if k in clusters.params})
    return EvalReport("strategy", config, [fold])


def cross_validate_strategies(
    sessions: Sequence[InterpretedSession],
    strategies: Iterable[Strategy | str],
    i_values: Iterable[int],
    config: PipelineConfig | None = None,
    n_best: int = 1,
    exclude_seen: bool = True,
    promote: bool = True,
) -> dict[tuple[Strategy, int], EvalReport]:
    """k-fold strategy evaluation: clusters are learnt on each training split once
    and reused for every (strategy, i) on its test split."""
    config = config or PipelineConfig()
    strategies = [Strategy.parse(s) for s in strategies]
    i_values = sorted(set(i_values))
    if any(i < 1 for i in i_values):
        raise ValueError("i must be >= 1")
    per_key: dict[tuple[Strategy, int], list[FoldResult]] = {(s, i): [] for s in strategies for i in i_values}
    for k, test_idx in enumerate(fold_indices(len(sessions), config.folds, config.seed)):
        learn, test = _split(sessions, test_idx)
        clusters = build_clusters(learn, config).clusters
        for s in strategies:
            for i in i_values:
                per_key[(s, i)].append(_strategy_fold(k, test, clusters, s, i, n_best, exclude_seen, promote))
    return {
        (s, i): EvalReport(
            "strategy",
            {**config.as_dict(), "strategy": s.value, "i": i, "n_best": n_best,
             "truth": "exclude" if exclude_seen else "include"},
            folds,
        )
        for (s, i), folds in per_key.items()
    }


TREND_HEADER = ("i", "strategy", "precision", "recall", "f1", "success_rate")


def trend(
    sessions: Sequence[InterpretedSession],
    clusters: ClusterSet | Sequence[Iterable[str]],
    strategy: Strategy | str = Strategy.SLACK,
    i_range: Iterable[int] = range(1, 6),
    n_best: int = 1,
    exclude_seen: bool = True,
) -> list[tuple[int, str, float, float, float, float]]:
    """Precision/recall/F1/success per S@i; empty input yields no rows."""
    if not sessions:
        return []
    rows = []
    for i in i_range:
        rep = eval_strategies(sessions, clusters, strategy, i, n_best, exclude_seen)
        agg = rep.aggregate
        rows.append((i, Strategy.parse(strategy).value, agg.precision, agg.recall, agg.f1, rep.success_rate or 0.0))
    return rows


def trend_rows_to_csv(rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TREND_HEADER)
    for i, s, p, r, f, sr in rows:
        w.writerow([i, s, f"{p:.6f}", f"{r:.6f}", f"{f:.6f}", f"{sr:.6f}"])
    return buf.getvalue()


def cluster_set_f1(detected: Iterable[Iterable[str]], planted: Iterable[Iterable[str]]) -> float:
    """Symmetric best-match F1 between two cluster sets.

    The mean over planted clusters of their best F1 against any detected
    cluster, averaged with the same quantity in the other direction.
    """
    det = [frozenset(c) for c in detected]
    pla = [frozenset(c) for c in planted]
    if not det or not pla:
        return 0.0

    def f1(a: frozenset[str], b: frozenset[str]) -> float:
        hit = len(a & b)
        return 2 * hit / (len(a) + len(b)) if hit else 0.0

    forward = mean(max(f1(p, d) for d in det) for p in pla)
    backward = mean(max(f1(d, p) for p in pla) for d in det)
    return (forward + backward) / 2
