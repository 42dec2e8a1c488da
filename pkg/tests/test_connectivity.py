import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from keepconn import (
    BandConfig,
    DualGraph,
    assign_edge_weights,
    build_dual_graph,
    build_unit_square_mesh,
    component_distances,
    decompose_components,
    element_averages,
    extract_interface,
    floyd_warshall_reference,
    shortest_distances,
)


def random_graph(rng, n, p=0.15, zero_fraction=0.0):
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
    # a spanning path keeps the graph connected
    order = rng.permutation(n)
    edges += [tuple(sorted((int(order[k]), int(order[k + 1])))) for k in range(n - 1)]
    edges = sorted(set(edges))
    g = DualGraph(n, edges)
    w = rng.random(len(edges))
    w[rng.random(len(edges)) < zero_fraction] = 0.0
    g.set_weights(w)
    return g


@st.composite
def graphs(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(2, 40))
    rng = np.random.default_rng(seed)
    return random_graph(rng, n, draw(st.floats(0.0, 0.5)), draw(st.sampled_from([0.0, 0.3])))


def test_path_graph_by_hand():
    g = DualGraph(4, [(0, 1), (1, 2), (2, 3)])
    g.set_weights([1.0, 2.0, 0.5])
    dist, pred = shortest_distances(g, [0])
    np.testing.assert_allclose(dist, [0, 1, 3, 3.5])
    np.testing.assert_array_equal(pred, [-1, 0, 1, 2])
    assert g.path_length([0, 1, 2, 3]) == pytest.approx(3.5)
    with pytest.raises(ValueError, match="not adjacent"):
        g.path_length([0, 2])


def test_unreachable_vertices_are_infinite():
    g = DualGraph(4, [(0, 1), (2, 3)])
    g.set_weights([1.0, 1.0])
    dist, _ = shortest_distances(g, [0])
    assert np.isinf(dist[2]) and np.isinf(dist[3])


def test_graph_rejects_bad_input():
    with pytest.raises(ValueError):
        DualGraph(3, [(0, 3)])
    with pytest.raises(ValueError):
        DualGraph(3, [(1, 1)])
    g = DualGraph(3, [(0, 1)])
    with pytest.raises(ValueError):
        g.set_weights([-1.0])
    with pytest.raises(ValueError):
        g.set_weights([np.nan])
    with pytest.raises(ValueError):
        g.set_weights([1.0, 2.0])


@given(graphs(), st.data())
def test_dijkstra_matches_floyd_warshall(g, data):
    src = data.draw(st.integers(0, g.n_vertices - 1))
    D = floyd_warshall_reference(g)
    dist, pred = shortest_distances(g, [src])
    np.testing.assert_allclose(dist, D[src], atol=1e-12, rtol=0)
    # predecessors reproduce the distances
    for v in range(g.n_vertices):
        if v != src:
            assert dist[v] == pytest.approx(dist[pred[v]] + g.path_length([pred[v], v]), abs=1e-12)


@given(graphs())
def test_distances_symmetric_and_triangle(g):
    D = floyd_warshall_reference(g)
    rows = np.array([shortest_distances(g, [v])[0] for v in range(g.n_vertices)])
    np.testing.assert_allclose(rows, rows.T, atol=1e-12)
    np.testing.assert_allclose(rows, D, atol=1e-12)
    n = g.n_vertices
    for i in range(n):
        assert np.all(rows[i][:, None] <= rows[i][None, :] + rows + 1e-12)


def test_floyd_warshall_size_guard():
    with pytest.raises(ValueError):
        floyd_warshall_reference(DualGraph(300, []))


@given(graphs(), st.data())
def test_components_and_pairwise_distances(g, data):
    n = g.n_vertices
    members = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    dec = decompose_components(g, sorted(members))
    assert sorted(np.concatenate(dec.components).tolist()) == sorted(members)
    for comp in dec.components:
        assert np.all(np.diff(comp) > 0)
    component_distances(g, dec)
    D = floyd_warshall_reference(g)
    m = dec.n_components
    for i in range(m):
        assert dec.distances[i, i] == 0.0
        for j in range(i + 1, m):
            expected = D[np.ix_(dec.components[i], dec.components[j])].min()
            assert dec.distances[i, j] == pytest.approx(expected, abs=1e-12)
            assert dec.distances[j, i] == dec.distances[i, j]
            path = dec.path(i, j)
            assert dec.labels[path[0]] == i and dec.labels[path[-1]] == j
            assert g.path_length(path) == pytest.approx(expected, abs=1e-12)
            np.testing.assert_array_equal(dec.path(j, i), path[::-1])


def test_zero_weight_edges_merge_only_members():
    # 0 - 1 - 2 with both edges free; vertex 1 is not in the interface
    g = DualGraph(3, [(0, 1), (1, 2)])
    g.set_weights([0.0, 0.0])
    dec = decompose_components(g, [0, 2])
    assert dec.n_components == 2
    component_distances(g, dec)
    assert dec.distances[0, 1] == 0.0
    dec = decompose_components(g, [0, 1, 2])
    assert dec.n_components == 1


def test_positive_weight_edge_separates_members():
    g = DualGraph(2, [(0, 1)])
    g.set_weights([1e-300])
    assert decompose_components(g, [0, 1]).n_components == 2


def test_stale_weights_detected():
    g = DualGraph(3, [(0, 1), (1, 2)])
    g.set_weights([1.0, 1.0])
    dec = decompose_components(g, [0, 2])
    g.set_weights([2.0, 2.0])
    with pytest.raises(RuntimeError, match="changed"):
        component_distances(g, dec)


def test_disconnected_components_raise():
    g = DualGraph(2, [])
    dec = decompose_components(g, [0, 1])
    with pytest.raises(RuntimeError, match="not connected"):
        component_distances(g, dec)


def test_ties_resolve_deterministically():
    # a square: two equally short routes from 0 to 3
    g = DualGraph(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    g.set_weights(np.ones(4))
    paths = set()
    for _ in range(5):
        dec = decompose_components(g, [0, 3])
        component_distances(g, dec)
        paths.add(tuple(dec.path(0, 1)))
    assert paths == {(0, 1, 3)}


def test_extract_interface_closed_band():
    u_T = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    np.testing.assert_array_equal(extract_interface(u_T, 0.3, 0.7), [1, 2, 3])
    assert extract_interface(u_T, 0.95, 0.99).size == 0
    with pytest.raises(ValueError):
        extract_interface(u_T, 0.7, 0.3)


def test_dual_graph_of_mesh(mesh8):
    g = build_dual_graph(mesh8)
    assert g.n_vertices == mesh8.n_elements
    assert g.n_edges == len(mesh8.adjacency)
    assert g.degree().max() <= 3
    np.testing.assert_allclose(g.geometry, np.sqrt(2) / 8)
    g2 = build_dual_graph(mesh8, length_scale=0.5)
    np.testing.assert_allclose(g2.geometry, 0.5)


def test_edge_weights_from_band(mesh8):
    g = build_dual_graph(mesh8)
    band = BandConfig(-0.5, 0.5)
    x, _ = mesh8.nodes.T
    u_T = element_averages(mesh8, 2 * x)
    w = assign_edge_weights(g, u_T, band)
    a, b = g.edges.T
    expected = 0.5 * (band.F(u_T[a]) + band.F(u_T[b])) * g.geometry
    np.testing.assert_allclose(w, expected)
    both_inside = (np.abs(u_T[a]) <= 0.5) & (np.abs(u_T[b]) <= 0.5)
    assert np.all(w[both_inside] == 0.0)
    assert np.all(w[~both_inside] > 0.0)
    with pytest.raises(ValueError, match="element 3"):
        bad = u_T.copy()
        bad[3] = np.nan
        assign_edge_weights(g, bad, band)


def test_two_stripes_on_mesh():
    mesh = build_unit_square_mesh(16)
    g = build_dual_graph(mesh)
    x, _ = mesh.nodes.T
    u = np.where(np.abs(np.abs(x) - 0.3) < 0.08, 0.9, -1.0)
    band = BandConfig(0.85, 0.95)
    u_T = element_averages(mesh, u)
    assign_edge_weights(g, u_T, band)
    dec = decompose_components(g, extract_interface(u_T, band.alpha, band.beta))
    assert dec.n_components == 2
    component_distances(g, dec)
    assert dec.distances[0, 1] > 0
