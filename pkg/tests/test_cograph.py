import random
from fractions import Fraction
from itertools import islice

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicsuggest.cograph import (
    CoGraph,
    LocalGraph,
    build_global_graph,
    build_local_graph,
    edge_key,
    merge_graphs,
    merge_into_global,
    prune,
    read_graph,
    weight_distribution,
    write_graph,
)
from topicsuggest.interpret import QueryInterpretation, interpret_query

from helpers import canonical_sessions, civic_ontology, eq2_oracle

Q = QueryInterpretation.of
F = Fraction


def worked_session():
    return [Q({"c1"}), Q({"c2"}), Q({"c3", "c4"}), Q({"c2"}), Q({"c3"})]


def test_worked_example():
    g = build_local_graph(worked_session())
    assert g.edge_evidence == {
        ("c1", "c2"): 1, ("c1", "c3"): 1, ("c2", "c3"): 1,
        ("c3", "c4"): F(1, 2), ("c1", "c4"): F(1, 2), ("c2", "c4"): F(1, 2),
    }
    assert all(isinstance(v, Fraction) for v in g.edge_evidence.values())
    assert g.node_evidence == {"c1": 1, "c2": 1, "c3": 1, "c4": F(1, 2)}


def test_worked_example_intermediate_steps():
    g = LocalGraph()
    for q in worked_session()[:3]:
        g.add_query(q)
    assert g.edge_evidence[("c1", "c3")] == F(1, 2)
    before = dict(g.edge_evidence)
    g.add_query(Q({"c2"}))
    # the fourth query adds no node and changes no weight
    assert g.edge_evidence == before


def test_ambiguous_query_thirds():
    q = interpret_query(civic_ontology(), "missouri child support")
    g = build_local_graph([q])
    assert sorted(g.edge_evidence.values()) == [F(1, 3)] * 3
    assert set(g.node_evidence) == {"childcare_service", "play_area", "kindergarten"}


def test_repeated_query():
    g = build_local_graph([Q({"a"})] * 5)
    assert g.node_evidence == {"a": 1} and g.edge_evidence == {}


def test_empty_session():
    g = build_local_graph([])
    assert g.node_evidence == {} and g.edge_evidence == {}
    assert build_local_graph([QueryInterpretation()]).node_evidence == {}


def test_oracle_agrees_on_handpicked_sessions():
    assert eq2_oracle(worked_session()) == build_local_graph(worked_session()).edge_evidence


def test_oracle_equivalence_sample():
    # the full enumeration runs in the acceptance module; a prefix keeps this fast
    for session in islice(canonical_sessions(3), 500):
        assert build_local_graph(session).edge_evidence == eq2_oracle(session)


ids = st.sampled_from(["a", "b", "c", "d", "e", "f"])
queries = st.lists(st.frozensets(ids, min_size=1, max_size=3), min_size=1, max_size=2).map(lambda gs: Q(*gs))
sessions = st.lists(queries, max_size=5)


@settings(max_examples=300, deadline=None)
@given(sessions)
def test_local_graph_invariants(session):
    g = LocalGraph()
    prev: dict = {}
    for q in session:
        g.add_query(q)
        for k, v in prev.items():
            assert g.edge_evidence[k] >= v
        prev = dict(g.edge_evidence)
    for (a, b), v in g.edge_evidence.items():
        assert 0 < v <= min(g.node_evidence[a], g.node_evidence[b])
    assert g.edge_evidence == eq2_oracle(session)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.frozensets(ids, min_size=1, max_size=3), max_size=5), st.randoms())
def test_unambiguous_permutation_invariance(groups, rnd):
    qs = [Q(*[{c} for c in g]) for g in groups]
    shuffled = list(qs)
    rnd.shuffle(shuffled)
    a = build_local_graph(qs).edge_evidence
    assert a == build_local_graph(shuffled).edge_evidence
    assert set(a.values()) <= {1}


def test_edge_key():
    assert edge_key("b", "a") == ("a", "b")
    with pytest.raises(ValueError):
        edge_key("a", "a")


def local(edges):
    g = LocalGraph()
    for (a, b), v in edges.items():
        g.node_evidence.setdefault(a, F(1))
        g.node_evidence.setdefault(b, F(1))
        g.edge_evidence[edge_key(a, b)] = F(v)
    return g


def test_merge_sums():
    g = CoGraph()
    merge_into_global(g, local({("a", "b"): F(1, 2)}))
    merge_into_global(g, local({("a", "b"): F(1, 2)}))
    assert g.edges == {("a", "b"): 1.0}


def test_merge_empty_is_identity():
    g = CoGraph({"a", "b"}, {("a", "b"): 2.0})
    assert merge_into_global(g.copy(), LocalGraph()) == g


def test_merge_two_sessions():
    g = CoGraph(exact=True)
    merge_into_global(g, local({("a", "b"): 1}))
    merge_into_global(g, local({("b", "c"): F(1, 3)}))
    assert g.nodes == {"a", "b", "c"}
    assert g.edges == {("a", "b"): 1, ("b", "c"): F(1, 3)}


def test_isolated_node_enters_graph():
    g = build_global_graph([[Q({"a"})], [Q({"b"}, {"c"})]])
    assert g.nodes == {"a", "b", "c"} and list(g.edges) == [("b", "c")]


@settings(max_examples=50, deadline=None)
@given(st.lists(sessions, max_size=8), st.randoms())
def test_merge_commutative_and_bounded(all_sessions, rnd):
    exact = build_global_graph(all_sessions, exact=True)
    order = list(all_sessions)
    rnd.shuffle(order)
    assert build_global_graph(order, exact=True) == exact
    for w in exact.edges.values():
        assert 0 < w <= len(all_sessions)
    approx = build_global_graph(all_sessions)
    for k, w in exact.edges.items():
        assert approx.edges[k] == pytest.approx(float(w), rel=1e-9)


def test_prune_strict_threshold():
    g = CoGraph({"a", "b", "c"}, {("a", "b"): 2500.0, ("b", "c"): 100.0})
    pruned, report = prune(g, 2200)
    assert pruned.edges == {("a", "b"): 2500.0}
    assert pruned.nodes == {"a", "b", "c"}
    assert report.isolated_nodes == ["c"]
    assert (report.edges_before, report.edges_after, report.max_weight) == (2, 1, 2500.0)


def test_prune_zero_and_exact_threshold():
    g = CoGraph({"a", "b"}, {("a", "b"): 5.0})
    assert prune(g, 0)[0] == g
    assert prune(g, 5.0)[0].edges == {("a", "b"): 5.0}
    with pytest.raises(ValueError):
        prune(g, -1)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.tuples(ids, ids).filter(lambda p: p[0] < p[1]), st.floats(0.01, 100), max_size=12),
       st.floats(0, 50), st.floats(0, 50))
def test_prune_composes(edges, t1, t2):
    t1, t2 = sorted((t1, t2))
    g = CoGraph({n for e in edges for n in e}, dict(edges))
    assert prune(prune(g, t1)[0], t2)[0] == prune(g, t2)[0]
    assert prune(g, t2)[1].edges_after <= prune(g, t1)[1].edges_after


def test_weight_distribution():
    g = CoGraph({"a", "b", "c", "d"}, {("a", "b"): 100.0, ("b", "c"): 1.0, ("c", "d"): 10.0, ("a", "d"): 10.0})
    d = weight_distribution(g)
    assert d.weights == [1.0, 10.0, 10.0, 100.0]
    assert d.histogram == [(1.0, 1), (10.0, 2), (100.0, 1)]
    assert weight_distribution(CoGraph()).histogram == []


def test_graph_file_round_trip(tmp_path):
    g = CoGraph({"a", "b", "c", "lonely"}, {("a", "b"): 1 / 3, ("b", "c"): 2.0})
    p = tmp_path / "g.tsv"
    write_graph(g, p)
    text = p.read_text()
    assert text.splitlines()[0] == "#nodes:\ta\tb\tc\tlonely"
    assert "a\tb\t0.333333" in text
    back = read_graph(p)
    assert back.nodes == g.nodes
    assert back.edges == {("a", "b"): 0.333333, ("b", "c"): 2.0}


def test_read_graph_rejects_bad_row(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("a\tb\n")
    with pytest.raises(ValueError, match=":1:"):
        read_graph(p)


def test_merge_graphs_parallel_fold():
    rng = random.Random(3)
    sess = [[Q(set(rng.sample("abcdef", rng.randint(1, 3)))) for _ in range(3)] for _ in range(20)]
    whole = build_global_graph(sess, exact=True)
    halves = merge_graphs(build_global_graph(sess[:7], exact=True), build_global_graph(sess[7:], exact=True))
    assert halves == whole
