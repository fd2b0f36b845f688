import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topicsuggest.cograph import CoGraph, edge_key
from topicsuggest.communities import (
    ClusterSet,
    cluster_stats,
    connected_components,
    detect_communities,
    propagate_labels,
    read_clusters,
    write_clusters,
)
from topicsuggest.evaluation import cluster_set_f1


def graph(edges, nodes=()):
    g = CoGraph(set(nodes))
    for (a, b), w in edges.items():
        g.edges[edge_key(a, b)] = float(w)
        g.nodes.update((a, b))
    return g


def two_triangles():
    return graph({
        ("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 1,
        ("d", "e"): 1, ("e", "f"): 1, ("d", "f"): 1,
        ("c", "d"): 0.1,
    })


def planted_graph(k, size, rng, intra=(50, 100), inter=1.0, noise_edges=None):
    groups = [[f"g{i}_{j}" for j in range(size)] for i in range(k)]
    edges = {}
    for grp in groups:
        for x in range(size):
            for y in range(x + 1, size):
                edges[(grp[x], grp[y])] = rng.uniform(*intra)
    nodes = [n for grp in groups for n in grp]
    for _ in range(noise_edges if noise_edges is not None else k):
        a, b = rng.sample(nodes, 2)
        if a.split("_")[0] != b.split("_")[0]:
            edges[tuple(sorted((a, b)))] = inter
    return graph(edges), [frozenset(g) for g in groups]


@pytest.mark.parametrize("seed", range(5))
def test_two_triangles_v1(seed):
    cs = detect_communities(two_triangles(), v=1, seed=seed)
    assert sorted(map(sorted, cs)) == [["a", "b", "c"], ["d", "e", "f"]]


def test_single_edge():
    assert detect_communities(graph({("a", "b"): 3}), v=2).clusters == [frozenset({"a", "b"})]


def test_no_edges_gives_singletons():
    cs = detect_communities(CoGraph({"x", "y", "z"}))
    assert cs.clusters == [frozenset({"x"}), frozenset({"y"}), frozenset({"z"})]


def test_empty_graph():
    assert detect_communities(CoGraph()).clusters == []


def test_parameter_errors():
    with pytest.raises(ValueError):
        detect_communities(two_triangles(), v=0)
    with pytest.raises(ValueError):
        detect_communities(graph({("a", "b"): 0}))
    with pytest.raises(ValueError):
        detect_communities(two_triangles(), max_iters=0)


def test_params_recorded():
    cs = detect_communities(two_triangles(), v=2, seed=9)
    assert cs.params["v"] == 2 and cs.params["seed"] == 9
    assert 1 <= cs.params["iterations"] <= 100
    assert cs.params["update"] == "asynchronous"


def test_cluster_order():
    g = graph({("z", "y"): 1, ("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 1}, nodes={"m"})
    cs = detect_communities(g, v=1)
    assert [sorted(c) for c in cs] == [["m"], ["y", "z"], ["a", "b", "c"]]


def test_planted_recovery_small():
    rng = random.Random(0)
    scores = []
    for seed in range(5):
        g, planted = planted_graph(rng.randint(2, 6), rng.randint(3, 6), rng)
        scores.append(cluster_set_f1(detect_communities(g, seed=seed), planted))
    assert sum(scores) / len(scores) >= 0.9


def test_synchronous_mode_runs():
    cs = detect_communities(two_triangles(), v=1, synchronous=True)
    assert cs.params["update"] == "synchronous"
    assert all(len(c) >= 1 for c in cs)


weights = st.floats(min_value=0.1, max_value=50)
nodes = st.sampled_from(list("abcdefgh"))
edge_maps = st.dictionaries(st.tuples(nodes, nodes).filter(lambda p: p[0] < p[1]), weights, min_size=1, max_size=14)


@settings(max_examples=80, deadline=None)
@given(edge_maps, st.integers(1, 3), st.integers(0, 5))
def test_cluster_set_invariants(edges, v, seed):
    g = graph(edges)
    cs = detect_communities(g, v=v, seed=seed)
    adj = g.adjacency()
    covered = set().union(*cs.clusters)
    assert covered == g.nodes
    for c in cs:
        assert len(connected_components(adj, c)) == 1
        assert not any(c < other for other in cs)
    assert detect_communities(g, v=v, seed=seed).clusters == cs.clusters


@settings(max_examples=60, deadline=None)
@given(edge_maps, st.sampled_from([0.001, 0.5, 3.0, 1000.0]), st.integers(0, 3))
def test_scale_invariance(edges, factor, seed):
    g = graph(edges)
    scaled = graph({k: w * factor for k, w in edges.items()})
    assert detect_communities(g, seed=seed).clusters == detect_communities(scaled, seed=seed).clusters


@settings(max_examples=60, deadline=None)
@given(edge_maps, st.integers(1, 4), st.booleans())
def test_coefficients_normalised(edges, v, sync):
    g = graph(edges)
    for iters in (1, 2, 5):
        labels, _ = propagate_labels(g.adjacency(), v, random.Random(0), iters, sync)
        for m in labels.values():
            assert 1 <= len(m) <= v
            assert sum(m.values()) == pytest.approx(1.0, abs=1e-9)


def test_cluster_stats():
    sample = [
        {"play_area", "sport_area", "library"},
        {"school", "kindergarten", "library", "play_area", "museum", "theatre"},
        {"bus"},
    ]
    st_ = cluster_stats(sample)
    assert (st_.count, st_.min_size, st_.max_size) == (3, 1, 6)
    assert st_.overlap["library"] == 2 and st_.overlap["bus"] == 1
    assert cluster_stats([]).count == 0


def test_clusters_file_round_trip(tmp_path):
    cs = detect_communities(two_triangles(), v=1, seed=4)
    p = tmp_path / "c.json"
    write_clusters(cs, p)
    doc = json.loads(p.read_text())
    assert doc["seed"] == 4 and doc["clusters"] == [["a", "b", "c"], ["d", "e", "f"]]
    back = read_clusters(p)
    assert back.clusters == cs.clusters and back.params == cs.params


@pytest.mark.parametrize("doc", ['{"clusters": [[]]}', '{"clusters": "x"}', "[1]", '{"clusters": [[1]]}'])
def test_read_clusters_validates(tmp_path, doc):
    p = tmp_path / "c.json"
    p.write_text(doc)
    with pytest.raises(ValueError):
        read_clusters(p)


def test_clusterset_container():
    cs = ClusterSet([frozenset("ab")], {"seed": 1})
    assert len(cs) == 1 and cs[0] == {"a", "b"} and list(cs) == [frozenset("ab")]
