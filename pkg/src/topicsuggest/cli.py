"""Command line entry point: ``topicsuggest <subcommand> ...``.

Each stage reads and writes plain files so every intermediate can be
inspected.  Errors go to stderr as ``error: <kind>: <message>`` with a
nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import timedelta
from pathlib import Path
from typing import Sequence, TextIO

from . import __version__
from .cograph import build_global_graph, prune, read_graph, weight_distribution, write_graph
from .communities import cluster_stats, detect_communities, read_clusters, write_clusters
from .evaluation import (
    EVAL1,
    EVAL2,
    PipelineConfig,
    cross_validate_strategies,
    eval_strategies,
    interpret_sessions,
    select_threshold,
    trend_rows_to_csv,
    validate_clusters,
)
from .interpret import Lemmatizer, SessionConceptSet, extend_session_set, interpret_query, load_lemma_dictionary
from .logs import BotPolicy, ParseStats, filter_relevant, is_bot_session, read_sessions, sessionize_file, write_log, write_sessions
from .ontology import OntologyError, load_ontology, save_ontology
from .stats import concepts_per_query, queries_per_user, session_lengths, sessions_per_user, summary_csv
from .suggest import Strategy, suggest
from .synth import generate_synthetic_log

log = logging.getLogger("topicsuggest")

DEFAULT_SEED = 0
STRATEGIES = [s.value for s in Strategy]


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _dump_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise CliError("usage", f"--{what} is required")
    p = Path(path)
    if not p.is_file():
        raise CliError("missing-input", f"{what} file not found: {path}")
    return p


def _lemmatizer(args) -> Lemmatizer:
    if getattr(args, "lemmas", None):
        return Lemmatizer(load_lemma_dictionary(_require(args.lemmas, "lemmas")))
    return Lemmatizer()


def _interpreted(args):
    ontology = load_ontology(_require(args.ontology, "ontology"))
    sessions = list(read_sessions(_require(args.sessions, "sessions")))
    return ontology, sessions, interpret_sessions(sessions, ontology, _lemmatizer(args))


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        threshold=getattr(args, "threshold", 0.0) or 0.0,
        v=getattr(args, "v", 2),
        seed=args.seed,
        max_iters=getattr(args, "max_iters", 100),
        folds=getattr(args, "folds", 10),
    )


def cmd_sessionize(args) -> int:
    log_path = _require(args.log, "log")
    ontology = load_ontology(_require(args.ontology, "ontology")) if args.ontology else None
    lem = _lemmatizer(args)
    policy = BotPolicy(args.bot_max_queries, timedelta(days=args.bot_max_days))
    bots: set[str] = set()
    if args.exclude_bots:
        bots = {s.user for s in sessionize_file(log_path) if is_bot_session(s, policy)}
        for user in sorted(bots):
            print(f"excluded bot-like user {user}", file=sys.stderr)
    stats = ParseStats()
    sessions = (s for s in sessionize_file(log_path, stats) if s.user not in bots)
    if ontology is not None:
        sessions = filter_relevant(sessions, ontology, lem)
    out: TextIO = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        n = write_sessions(sessions, out)
    finally:
        if args.out:
            out.close()
    print(f"sessions: {n}; records: {stats.records}; malformed lines skipped: {stats.errors}", file=sys.stderr)
    for msg in stats.examples:
        print(f"warning: parse: {msg}", file=sys.stderr)
    return 0


def cmd_build_graph(args) -> int:
    _, _, interps = _interpreted(args)
    graph = build_global_graph(interps, exact=args.exact)
    if not args.out:
        raise CliError("usage", "--out is required")
    write_graph(graph, args.out)
    print(f"nodes: {len(graph.nodes)}; edges: {len(graph.edges)}", file=sys.stderr)
    return 0


def cmd_prune(args) -> int:
    graph = read_graph(_require(args.graph, "graph"))
    if args.threshold < 0:
        raise CliError("parameter", "--threshold must be >= 0")
    pruned, report = prune(graph, args.threshold)
    if not args.out:
        raise CliError("usage", "--out is required")
    write_graph(pruned, args.out)
    _dump_json(report.to_dict(), args.report or f"{args.out}.report.json")
    if args.figures:
        from .plotting import plot_weights

        Path(args.figures).mkdir(parents=True, exist_ok=True)
        plot_weights(weight_distribution(graph).weights, Path(args.figures) / "edge-weights.png", args.threshold)
    print(f"edges: {report.edges_before} -> {report.edges_after}", file=sys.stderr)
    return 0


def cmd_detect(args) -> int:
    graph = read_graph(_require(args.graph, "graph"))
    if args.v < 1:
        raise CliError("parameter", "--v must be >= 1")
    clusters = detect_communities(graph, v=args.v, seed=args.seed, max_iters=args.max_iters, synchronous=args.synchronous)
    if not args.out:
        raise CliError("usage", "--out is required")
    write_clusters(clusters, args.out)
    st = cluster_stats(clusters)
    print(f"clusters: {st.count}; sizes {st.min_size}-{st.max_size}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    _, _, interps = _interpreted(args)
    config = _config(args)
    doc: dict = {}
    if args.thresholds:
        best, table = select_threshold(interps, args.thresholds, config)
        doc["threshold_selection"] = {
            "selected": best,
            "table": [{"threshold": t, **r.as_dict()} for t, r in table],
        }
        config.threshold = best
    modes = [EVAL1, EVAL2] if args.mode == "both" else [args.mode]
    csv_lines = ["mode,fold,metric,value"]
    for mode in modes:
        rep = validate_clusters(interps, mode, config)
        doc[mode] = rep.to_dict()
        csv_lines += [f"{mode},{row}" for row in rep.to_csv().splitlines()[1:]]
        agg = rep.aggregate
        print(f"{mode}: P={agg.precision:.3f} R={agg.recall:.3f} F1={agg.f1:.3f}", file=sys.stderr)
    _dump_json(doc, args.out)
    if args.csv:
        Path(args.csv).write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return 0


def cmd_eval(args) -> int:
    _, _, interps = _interpreted(args)
    strategies = STRATEGIES if args.strategy == "all" else [args.strategy]
    i_values = list(range(1, args.trend + 1)) if args.trend else [args.i]
    exclude = args.truth == "exclude"
    promote = not args.residual_ambiguity
    if args.clusters:
        clusters = read_clusters(_require(args.clusters, "clusters"))
        reports = {
            (Strategy.parse(s), i): eval_strategies(interps, clusters, s, i, args.n_best, exclude, promote)
            for s in strategies
            for i in i_values
        }
    else:
        reports = cross_validate_strategies(interps, strategies, i_values, _config(args), args.n_best, exclude, promote)
    doc = {f"{s.value}@{i}": rep.to_dict() for (s, i), rep in sorted(reports.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))}
    _dump_json(doc, args.out)
    rows = [
        (i, s.value, rep.aggregate.precision, rep.aggregate.recall, rep.aggregate.f1, rep.success_rate or 0.0)
        for (s, i), rep in sorted(reports.items(), key=lambda kv: (kv[0][1], kv[0][0].value))
    ]
    if args.csv:
        Path(args.csv).write_text(trend_rows_to_csv(rows), encoding="utf-8")
    if args.figures:
        from .plotting import plot_trend

        Path(args.figures).mkdir(parents=True, exist_ok=True)
        plot_trend(rows, Path(args.figures) / "trend")
    for i, s, p, r, f, sr in rows:
        print(f"S@{i} {s}: P={p:.3f} R={r:.3f} F1={f:.3f} success={sr:.3f}", file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    sessions = list(read_sessions(_require(args.sessions, "sessions")))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    dists = [
        ("queries_per_user", queries_per_user(sessions), "queries per user", "users"),
        ("session_lengths", session_lengths(sessions), "queries per session", "sessions"),
        ("sessions_per_user", sessions_per_user(sessions), "sessions per user", "users"),
    ]
    if args.ontology:
        ontology = load_ontology(_require(args.ontology, "ontology"))
        lem = _lemmatizer(args)
        qs = (interpret_query(ontology, q.text, lem) for s in sessions for q in s.queries)
        dists.append(("concepts_per_query", concepts_per_query(qs), "concepts per query", "queries"))
    for name, summary, _, _ in dists:
        (out / f"{name}.csv").write_text(summary.to_csv(), encoding="utf-8")
    (out / "summary.csv").write_text(summary_csv([(n, s) for n, s, _, _ in dists]), encoding="utf-8")
    if args.figures:
        from .plotting import plot_distribution

        for name, summary, xlabel, ylabel in dists:
            plot_distribution(summary, out / f"{name}.png", xlabel, ylabel)
    sys.stderr.write(summary_csv([(n, s) for n, s, _, _ in dists]))
    return 0


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    return int(lo), int(hi or lo)


def cmd_synth(args) -> int:
    sizes = [int(x) for x in args.cluster_sizes.split(",") if x.strip()]
    data = generate_synthetic_log(
        sizes,
        sessions_per_cluster=args.sessions_per_cluster,
        queries_per_session=_parse_range(args.queries),
        ambiguity_rate=args.ambiguity_rate,
        noise_rate=args.noise_rate,
        seed=args.seed,
        ambiguity_size=args.ambiguity_size,
    )
    save_ontology(data.ontology, args.out_ontology)
    with open(args.out_log, "w", encoding="utf-8") as fh:
        write_log(data.records, fh)
    if args.out_planted:
        _dump_json({"seed": args.seed, "clusters": [sorted(c) for c in data.planted]}, args.out_planted)
    print(f"concepts: {len(data.ontology)}; log lines: {len(data.records)}", file=sys.stderr)
    return 0


def run_suggest_loop(ontology, clusters, strategy: Strategy, n_best: int, promote: bool,
                     lemmatizer: Lemmatizer, stdin: TextIO, stdout: TextIO) -> None:
    c_at_i = SessionConceptSet()
    i = 0
    for line in stdin:
        text = line.strip()
        if not text:
            continue
        if text == ":quit":
            break
        if text == ":reset":
            c_at_i, i = SessionConceptSet(), 0
            print("-- new session", file=stdout)
            continue
        i += 1
        c_at_i = extend_session_set(c_at_i, interpret_query(ontology, text, lemmatizer), promote=promote)
        sugg = suggest(clusters.clusters, c_at_i, strategy, n_best)
        print(f"C@{i}: {c_at_i.describe()}", file=stdout)
        chosen = ["{" + ", ".join(sorted(clusters[k])) + "}" for k in sugg.selected_clusters]
        print(f"clusters: {' '.join(chosen) if chosen else '(none)'}", file=stdout)
        items = ", ".join(f"{c} ({ontology.concepts[c].label})" if c in ontology else c for c in sorted(sugg.concepts))
        print(f"Sugg@{i}: {items if items else '(no suggestions)'}", file=stdout)
        stdout.flush()


def cmd_suggest(args) -> int:
    ontology = load_ontology(_require(args.ontology, "ontology"))
    try:
        clusters = read_clusters(_require(args.clusters, "clusters"))
    except (OSError, ValueError) as exc:
        raise CliError("clusters", str(exc)) from exc
    run_suggest_loop(ontology, clusters, Strategy.parse(args.strategy), args.n_best,
                     not args.residual_ambiguity, _lemmatizer(args), sys.stdin, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topicsuggest", description=__doc__.splitlines()[0], allow_abbrev=False)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help, allow_abbrev=False)
        sp.set_defaults(func=func)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        return sp

    def lemmas(sp):
        sp.add_argument("--lemmas", help="surface<TAB>lemma dictionary file")

    def pipeline(sp):
        sp.add_argument("--threshold", type=float, default=0.0)
        sp.add_argument("--v", type=int, default=2, help="max labels per vertex")
        sp.add_argument("--max-iters", type=int, default=100)
        sp.add_argument("--folds", type=int, default=10)

    sp = add("sessionize", cmd_sessionize, "split an AOL-format log into sessions")
    sp.add_argument("--log", required=True)
    sp.add_argument("--ontology", help="keep only sessions with a matching query")
    sp.add_argument("--out")
    sp.add_argument("--exclude-bots", action="store_true")
    sp.add_argument("--bot-max-queries", type=int, default=20_000)
    sp.add_argument("--bot-max-days", type=float, default=6.0)
    lemmas(sp)

    sp = add("build-graph", cmd_build_graph, "build the concept co-occurrence graph")
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--ontology", required=True)
    sp.add_argument("--out")
    sp.add_argument("--exact", action="store_true", help="accumulate weights as exact fractions")
    lemmas(sp)

    sp = add("prune", cmd_prune, "drop edges below a weight threshold")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--threshold", type=float, required=True)
    sp.add_argument("--out")
    sp.add_argument("--report", help="prune report JSON (default: <out>.report.json)")
    sp.add_argument("--figures", help="directory for the edge-weight figure")

    sp = add("detect", cmd_detect, "overlapping community detection (COPRA)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--v", type=int, default=2)
    sp.add_argument("--max-iters", type=int, default=100)
    sp.add_argument("--synchronous", action="store_true", help="frozen-state rounds instead of seeded sweeps")
    sp.add_argument("--out")

    sp = add("validate-clusters", cmd_validate, "k-fold cluster validation (Eval1/Eval2)")
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--ontology", required=True)
    sp.add_argument("--mode", choices=[EVAL1, EVAL2, "both"], default="both")
    sp.add_argument("--thresholds", type=float, nargs="+", help="candidate thresholds to select from by Eval1 F1")
    sp.add_argument("--out")
    sp.add_argument("--csv")
    pipeline(sp)
    lemmas(sp)

    sp = add("eval-strategies", cmd_eval, "score SLACK / SLACK-selective / STRICT at S@i")
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--ontology", required=True)
    sp.add_argument("--clusters", help="fixed clusters file; omitted = rebuild per fold")
    sp.add_argument("--strategy", choices=STRATEGIES + ["all"], default="all")
    sp.add_argument("--i", type=int, default=1)
    sp.add_argument("--trend", type=int, metavar="N", help="evaluate S@1..S@N")
    sp.add_argument("--n-best", type=int, default=1)
    sp.add_argument("--truth", choices=["exclude", "include"], default="exclude",
                    help="whether concepts already in C@i count as truth")
    sp.add_argument("--residual-ambiguity", action="store_true",
                    help="keep ambiguity sets intact after a member is confirmed")
    sp.add_argument("--out")
    sp.add_argument("--csv", help="i,strategy,precision,recall,f1,success_rate table")
    sp.add_argument("--figures", help="directory for precision/recall trend figures")
    pipeline(sp)
    lemmas(sp)

    sp = add("stats", cmd_stats, "session/user distributions as CSV (and figures)")
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--ontology")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--figures", action="store_true", help="also render PNG figures")
    lemmas(sp)

    sp = add("synth", cmd_synth, "generate a synthetic ontology + log with planted clusters")
    sp.add_argument("--cluster-sizes", default="4,4,4")
    sp.add_argument("--sessions-per-cluster", type=int, default=200)
    sp.add_argument("--queries", default="2-6", help="queries per session, N or LO-HI")
    sp.add_argument("--ambiguity-rate", type=float, default=0.0)
    sp.add_argument("--ambiguity-size", type=int, default=3)
    sp.add_argument("--noise-rate", type=float, default=0.0)
    sp.add_argument("--out-ontology", required=True)
    sp.add_argument("--out-log", required=True)
    sp.add_argument("--out-planted")

    sp = add("suggest", cmd_suggest, "interactive suggestions for queries read from stdin")
    sp.add_argument("--ontology", required=True)
    sp.add_argument("--clusters", required=True)
    sp.add_argument("--strategy", choices=STRATEGIES, default=Strategy.SLACK.value)
    sp.add_argument("--n-best", type=int, default=1)
    sp.add_argument("--residual-ambiguity", action="store_true")
    lemmas(sp)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
    except OntologyError as exc:
        print(f"error: ontology: {exc}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
