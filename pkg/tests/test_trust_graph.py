import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trustwalk.trust_graph import (
    ConstantWeights,
    GraphError,
    StochasticMatrix,
    TopologyKind,
    TrustGraph,
    UniformWeights,
    assign_trust_weights,
    generate_erdos_renyi,
    generate_scale_free,
    read_edgelist,
    row_normalize,
    write_edgelist,
)


def test_smallest_ba_graph():
    g = generate_scale_free(2, 1, seed=0)
    assert g.node_count == 2
    assert [(s, d) for s, d, _ in g.edges()] == [(0, 1), (1, 0)]


@pytest.mark.parametrize("n,m", [(1, 1), (5, 5), (5, 0), (3, 4)])
def test_ba_rejects_bad_parameters(n, m):
    with pytest.raises(GraphError):
        generate_scale_free(n, m, seed=0)


@pytest.mark.parametrize("seed", range(3))
def test_ba_average_degree_near_ten(seed):
    g = generate_scale_free(1000, 5, seed)
    assert g.topology_kind is TopologyKind.SCALE_FREE
    assert abs(g.degrees().mean() - 10) < 0.2


def test_ba_heavy_tail_small():
    d = generate_scale_free(100, 3, seed=7).degrees()
    assert d.max() > 3 * d.mean()


@pytest.mark.slow
def test_ba_heavy_tail_over_seeds():
    # calibrated over seeds 0..19: smallest observed max/mean ratio was 10.05
    for seed in range(20):
        d = generate_scale_free(1000, 5, seed).degrees()
        assert d.max() >= 3 * d.mean()


def test_er_smallest():
    g = generate_erdos_renyi(2, 1.0, seed=0)
    assert [(s, d) for s, d, _ in g.edges()] == [(0, 1), (1, 0)]


def test_er_edge_count_within_binomial_bound():
    g = generate_erdos_renyi(50, 0.2, seed=3)
    pairs = math.comb(50, 2)
    mean, sd = pairs * 0.2, math.sqrt(pairs * 0.2 * 0.8)
    assert abs(g.edge_count // 2 - mean) <= 3 * sd


def test_er_average_degree_and_connectivity():
    import networkx as nx

    g = generate_erdos_renyi(1000, 10 / 999, seed=1)
    assert abs(g.degrees().mean() - 10) < 0.5
    G = nx.Graph((s, d) for s, d, _ in g.edges())
    assert G.number_of_nodes() == 1000 and nx.is_connected(G)


def test_er_unattainable_connectivity():
    with pytest.raises(GraphError):
        generate_erdos_renyi(200, 0.001, seed=0)


@pytest.mark.parametrize("bad", [(1, 0.5), (10, 0.0), (10, 1.5)])
def test_er_rejects_bad_parameters(bad):
    with pytest.raises(GraphError):
        generate_erdos_renyi(*bad, seed=0)


def test_constant_weights_give_uniform_rows():
    g = generate_scale_free(30, 2, seed=1, weights=ConstantWeights(1.0))
    assert np.all(g.weights == 1.0)
    S = row_normalize(g)
    for i in range(30):
        nz = S.rows[i][S.rows[i] > 0]
        np.testing.assert_allclose(nz, 1.0 / len(nz))


def test_uniform_weights_reproducible():
    skel = [(0, 1), (1, 0), (1, 2), (2, 1)]
    a = assign_trust_weights(3, skel, UniformWeights(), seed=11)
    b = assign_trust_weights(3, skel, UniformWeights(), seed=11)
    c = assign_trust_weights(3, skel, UniformWeights(), seed=12)
    assert np.array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, c.weights)


def test_uniform_weights_mean():
    w = UniformWeights().sample(np.random.default_rng(5), 100_000)
    assert w.min() > 0 and w.max() <= 1
    # U(0,1] has mean 0.5; sd of the sample mean is ~9e-4
    assert abs(w.mean() - 0.5) < 0.01


def test_assign_weights_requires_edges():
    with pytest.raises(GraphError):
        assign_trust_weights(3, [], seed=0)


def test_row_normalize_arithmetic():
    g = TrustGraph.from_edges(3, [(0, 1, 0.2), (0, 2, 0.6), (1, 0, 0.9), (2, 0, 0.3)])
    S = row_normalize(g)
    assert S.rows[0, 1] == pytest.approx(0.25)
    assert S.rows[0, 2] == pytest.approx(0.75)
    assert S.rows[1, 0] == 1.0 and S.rows[2, 0] == 1.0


def test_row_normalize_rejects_dangling():
    g = TrustGraph.from_edges(3, [(0, 1, 0.5), (1, 0, 0.5)])
    with pytest.raises(GraphError):
        row_normalize(g)


def test_large_graph_rows_stochastic():
    S = row_normalize(generate_scale_free(1000, 5, seed=2))
    sums = S.rows.sum(axis=1)
    assert np.all(np.abs(sums - 1) <= 1e-12)


def test_graph_invariants_enforced():
    with pytest.raises(GraphError):
        TrustGraph.from_edges(2, [(0, 0, 0.5), (0, 1, 0.5)])
    with pytest.raises(GraphError):
        TrustGraph.from_edges(2, [(0, 1, 0.5), (0, 1, 0.7)])
    with pytest.raises(GraphError):
        TrustGraph.from_edges(2, [(0, 1, 0.0)])
    with pytest.raises(GraphError):
        TrustGraph.from_edges(2, [(0, 1, 1.2)])


def test_stochastic_matrix_validation():
    with pytest.raises(GraphError):
        StochasticMatrix(np.array([[0.5, 0.4], [1.0, 0.0]]))
    with pytest.raises(GraphError):
        StochasticMatrix(np.ones((2, 3)) / 3)


def test_csr_view_matches_rows():
    S = row_normalize(generate_scale_free(50, 2, seed=4))
    indptr, indices, cum = S.csr
    for i in range(50):
        lo, hi = indptr[i], indptr[i + 1]
        np.testing.assert_array_equal(indices[lo:hi], np.flatnonzero(S.rows[i]))
        assert cum[hi - 1] == 1.0
        np.testing.assert_allclose(np.diff(np.concatenate([[0], cum[lo:hi]])), S.rows[i, indices[lo:hi]])


def test_edgelist_roundtrip(tmp_path):
    g = generate_erdos_renyi(40, 0.2, seed=9)
    path = tmp_path / "g.edges"
    write_edgelist(g, path)
    text = path.read_text().splitlines()
    assert text[0] == "n 40"
    h = read_edgelist(path)
    assert h.same_as(g)
    assert h.topology_kind is TopologyKind.ERDOS_RENYI and h.seed == 9


def test_edgelist_missing_header(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("0 1 0.5\n")
    with pytest.raises(GraphError):
        read_edgelist(path)


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(["ba", "er"]),
    n=st.integers(min_value=5, max_value=60),
    seed=st.integers(min_value=0, max_value=2**63 - 1),
)
def test_generated_graph_properties(kind, n, seed):
    if kind == "ba":
        make = lambda: generate_scale_free(n, 2, seed)
    else:
        make = lambda: generate_erdos_renyi(n, min(1.0, 6 / n), seed)
    g = make()
    assert g.weights.min() > 0
    assert np.all(g.out_degrees() >= 1)
    assert g.same_as(make())
    S = row_normalize(g)
    assert np.all(np.abs(S.rows.sum(axis=1) - 1) <= 1e-12)
