import io

from topicsuggest.evaluation import interpret_sessions
from topicsuggest.logs import parse_lines, sessionize, write_log
from topicsuggest.synth import generate_synthetic_log, write_bulk_log

import pytest


def sessions_of(data):
    return interpret_sessions(list(sessionize(data.records)), data.ontology)


def test_clean_sessions_stay_in_one_cluster():
    data = generate_synthetic_log((3, 4), sessions_per_cluster=30, seed=5)
    interps = sessions_of(data)
    assert len(interps) == 60
    for s, k in zip(interps, data.session_clusters):
        concepts = frozenset().union(*(q.concepts() for q in s))
        assert concepts and concepts <= data.planted[k]
        assert all(len(q.groups) == 1 and q.groups[0].factor == 1 for q in s)


def test_full_ambiguity_gives_three_sets():
    data = generate_synthetic_log((3, 3), sessions_per_cluster=10, ambiguity_rate=1.0, ambiguity_size=3, seed=1)
    for s in sessions_of(data):
        for q in s:
            (g,) = q.groups
            assert len(g.concepts) == 3 and g.factor.denominator == 3


def test_fixed_seed_reproducible():
    def text(seed):
        buf = io.StringIO()
        write_log(generate_synthetic_log((4, 4), 20, ambiguity_rate=0.2, noise_rate=0.1, seed=seed).records, buf)
        return buf.getvalue()

    assert text(3) == text(3)
    assert text(3) != text(4)


def test_log_is_parseable_and_clicks_collapse():
    data = generate_synthetic_log((4,), sessions_per_cluster=20, queries_per_session=3, click_rate=1.0, seed=2)
    buf = io.StringIO()
    write_log(data.records, buf)
    records = list(parse_lines(buf.getvalue().splitlines(keepends=True)))
    assert len(records) == len(data.records) > 60
    assert sum(len(s) for s in sessionize(records)) == 60


def test_parameter_checks():
    with pytest.raises(ValueError):
        generate_synthetic_log(())
    with pytest.raises(ValueError):
        generate_synthetic_log((3,), noise_rate=1.5)
    with pytest.raises(ValueError):
        generate_synthetic_log((3,), queries_per_session=(3, 2))


def test_bulk_log(tmp_path):
    p = tmp_path / "bulk.tsv"
    write_bulk_log(p, 1000, users=50)
    lines = p.read_text().splitlines()
    assert len(lines) == 1001 and lines[0].startswith("AnonID")
