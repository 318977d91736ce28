import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackscope.extract import EmbeddingEdge
from trackscope.graph import (
    CooccurrenceGraph,
    GraphError,
    build_bipartite,
    build_hyperlink_graph,
    degree_ccdf,
    filter_trackers,
    k_core,
    one_mode_projection,
    read_edges,
    read_hyperlinks,
    read_sites,
    write_edges,
    write_hyperlinks,
    write_sites,
)

from conftest import SMALL_EDGES, bipartite_from_sets

incidence = st.lists(st.lists(st.booleans(), min_size=6, max_size=6), min_size=1, max_size=12)


def _from_matrix(rows):
    return bipartite_from_sets({f"s{i:02d}.com": {f"t{j}.net" for j, on in enumerate(r) if on}
                                for i, r in enumerate(rows)})


@settings(max_examples=100, deadline=None)
@given(incidence)
def test_projection_matches_dense_product(rows):
    g = _from_matrix(rows)
    proj = one_mode_projection(g)
    b = g.incidence.toarray().astype(np.int64)
    dense = b.T @ b
    assert np.array_equal(proj.site_counts, np.diag(dense))
    for i in range(len(proj)):
        for j in range(len(proj)):
            if i != j:
                assert proj.weight(i, j) == dense[i, j]


@settings(max_examples=100, deadline=None)
@given(incidence)
def test_degrees(rows):
    g = _from_matrix(rows)
    b = g.incidence.toarray()
    assert np.array_equal(g.site_degrees(), b.sum(1))
    assert np.array_equal(g.third_party_degrees(), b.sum(0))
    assert g.n_edges == b.sum()


def test_small_graph():
    g = build_bipartite([EmbeddingEdge(s, t, c) for (s, t), c in SMALL_EDGES.items()], extra_sites=["empty.net"])
    assert g.sites == ("alpha.com", "beta.de", "delta.org", "empty.net", "gamma.co.uk")
    assert g.n_third_parties == 5 and g.n_edges == 8
    assert list(g.third_parties_of("empty.net")) == []
    assert g.weights[g.site_index["alpha.com"], g.tp_index["google-analytics.com"]] == 3
    mask = g.site_mask(["twitter.com", "facebook.net"])
    assert {g.sites[i] for i in np.flatnonzero(mask)} == {"alpha.com", "delta.org", "gamma.co.uk"}
    assert sorted(e.third_party for e in g.edges() if e.site == "beta.de") == ["google-analytics.com", "ivwbox.de"]


def test_duplicate_edge_rejected():
    with pytest.raises(GraphError):
        build_bipartite([EmbeddingEdge("a.com", "b.com"), EmbeddingEdge("a.com", "b.com", 2)])


def test_filter_trackers_keeps_sites():
    g = bipartite_from_sets({"a.com": {"t.net", "cdn.net"}, "b.com": {"cdn.net"}})
    f = filter_trackers(g, {"t.net", "absent.net"})
    assert f.sites == g.sites and f.third_parties == ("t.net",)
    assert f.unmatched_labels == 1
    assert list(f.site_degrees()) == [1, 0]


def test_degree_ccdf():
    g = bipartite_from_sets({"a.com": {"x.net", "y.net"}, "b.com": {"x.net"}, "c.com": {"x.net"}})
    assert degree_ccdf(g, "right") == [(1, 1.0), (3, 0.5)]
    assert degree_ccdf(g, "left") == [(1, 1.0), (2, 1 / 3)]
    with pytest.raises(ValueError):
        degree_ccdf(g, "middle")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_k_core_matches_networkx(seed, k):
    ref = nx.gnp_random_graph(25, 0.15, seed=seed)
    g = CooccurrenceGraph([f"v{i:02d}" for i in ref.nodes], {(u, v): 1 for u, v in ref.edges})
    core = k_core(g, k)
    expected = nx.k_core(ref, k)
    assert set(core.vertices) == {f"v{i:02d}" for i in expected.nodes}
    assert core.n_edges == expected.number_of_edges()


def test_subgraph_and_equality():
    g = CooccurrenceGraph(["a", "b", "c"], {(0, 1): 2, (2, 1): 5}, [3, 4, 5])
    assert g.weight("c", "b") == 5 and g.total_weight == 7
    sub = g.subgraph([1, 2])
    assert sub.vertices == ("b", "c") and sub.edge_list() == [("b", "c", 5)]
    assert list(sub.site_counts) == [4, 5]
    assert g.subgraph([0, 1, 2], [(0, 1)]).edge_list() == [("a", "b", 2)]
    assert g == CooccurrenceGraph(["a", "b", "c"], {(1, 0): 2, (1, 2): 5})
    with pytest.raises(GraphError):
        CooccurrenceGraph(["a"], {(0, 0): 1})


def test_hyperlink_graph():
    h = build_hyperlink_graph([("a", "b"), ("a", "b"), ("b", "b"), ("b", "c")], extra_vertices=["z"])
    assert h.vertices == ("a", "b", "c", "z")
    assert h.out_edges == [(1,), (2,), (), ()]
    assert h.n_edges == 2


def test_tsv_round_trips(tmp_path):
    edges = sorted(EmbeddingEdge(s, t, c) for (s, t), c in SMALL_EDGES.items())
    write_edges(reversed(edges), tmp_path / "e.tsv")
    assert read_edges(tmp_path / "e.tsv") == edges
    sites = {"b.com": 2, "a.org": 1}
    write_sites(sites, tmp_path / "s.tsv")
    assert read_sites(tmp_path / "s.tsv") == sites
    links = [("b.com", "a.org"), ("a.org", "b.com"), ("a.org", "b.com")]
    write_hyperlinks(links, tmp_path / "h.tsv")
    assert read_hyperlinks(tmp_path / "h.tsv") == [("a.org", "b.com"), ("b.com", "a.org")]
    (tmp_path / "bad.tsv").write_text("a.com\tb.com\n")
    with pytest.raises(GraphError):
        read_edges(tmp_path / "bad.tsv")
