import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from keepconn import (
    DegenerateElementError,
    Mesh,
    assemble_p1,
    basis_element_integral,
    basis_element_mean,
    build_square_mesh,
    build_unit_square_mesh,
    element_average,
    element_averages,
)
from keepconn.mesh import local_stiffness


def test_single_cell_counts_and_geometry():
    m = build_unit_square_mesh(1)
    assert m.n_nodes == 4 and m.n_elements == 2
    np.testing.assert_allclose(m.element_area, [0.5, 0.5])
    np.testing.assert_allclose(m.element_diameter, [np.sqrt(2)] * 2)


def test_two_by_two_counts():
    m = build_unit_square_mesh(2)
    assert (m.n_nodes, m.n_elements) == (9, 8)
    assert m.area == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n", [1, 3, 7, 20])
def test_diameters_equal_sqrt2_over_n(n):
    m = build_unit_square_mesh(n)
    np.testing.assert_allclose(m.element_diameter, np.sqrt(2) / n, rtol=1e-12)
    assert m.element_diameter.max() / m.element_diameter.min() <= 2


def test_zero_subdivisions_rejected():
    with pytest.raises(ValueError):
        build_unit_square_mesh(0)


def test_triangles_are_counterclockwise():
    m = build_unit_square_mesh(5)
    p = m.nodes[m.triangles]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    assert np.all(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] > 0)


@given(st.integers(1, 24), st.floats(-3, 3), st.floats(0.1, 5))
def test_area_sum_and_edge_sharing(n, lower, width):
    m = build_square_mesh(n, lower, lower + width)
    assert m.element_area.sum() == pytest.approx(width**2, rel=1e-12)
    # each interior edge is listed once in adjacency, boundary edges belong to one triangle
    n_edges_total = 3 * n * n + 2 * n
    assert len(m.adjacency) + len(m.boundary_edges) == n_edges_total
    assert len(m.boundary_edges) == 4 * n
    assert 3 * m.n_elements == 2 * len(m.adjacency) + len(m.boundary_edges)


def test_adjacency_symmetric_irreflexive(mesh8):
    nb = mesh8.triangle_neighbors()
    for t, neigh in enumerate(nb):
        assert t not in neigh
        assert len(neigh) <= 3
        for s in neigh:
            assert t in nb[s]
    assert sum(len(x) for x in nb) == 2 * len(mesh8.adjacency)


def test_node_to_elements_incidence(mesh8):
    inc = mesh8.node_to_elements()
    for v, elems in enumerate(inc):
        for t in elems:
            assert v in mesh8.triangles[t]
    assert sum(len(e) for e in inc) == 3 * mesh8.n_elements


def test_boundary_nodes(mesh8):
    x, y = mesh8.nodes.T
    on_edge = np.flatnonzero((np.abs(np.abs(x) - 0.5) < 1e-12) | (np.abs(np.abs(y) - 0.5) < 1e-12))
    np.testing.assert_array_equal(mesh8.boundary_nodes, on_edge)


def test_generation_is_deterministic():
    a, b = build_unit_square_mesh(9), build_unit_square_mesh(9)
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert a.triangles.tobytes() == b.triangles.tobytes()


def test_mesh_arrays_read_only(mesh8):
    with pytest.raises(ValueError):
        mesh8.nodes[0, 0] = 1.0


def test_local_stiffness_unit_right_triangle():
    K = local_stiffness(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_allclose(np.diag(K), [1.0, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(K.sum(axis=1), 0.0, atol=1e-15)


@pytest.mark.parametrize("n", [1, 4, 13])
def test_operator_invariants(n):
    m = build_square_mesh(n, -0.3, 0.9)
    ops = assemble_p1(m)
    area = 1.2**2
    assert ops.M.sum() == pytest.approx(area, rel=1e-12)
    assert ops.lumped.sum() == pytest.approx(area, rel=1e-12)
    assert np.all(ops.lumped > 0)
    np.testing.assert_allclose(ops.K @ np.ones(m.n_nodes), 0.0, atol=1e-12)
    assert abs(ops.K - ops.K.T).max() == 0.0
    assert abs(ops.M - ops.M.T).max() < 1e-16


def test_degenerate_element_names_element():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
    tris = np.array([[0, 1, 2], [0, 1, 3]])
    with pytest.raises(DegenerateElementError, match="element 1"):
        assemble_p1(Mesh(nodes, tris))


def test_element_average_examples():
    m = build_unit_square_mesh(3)
    assert element_average(m, np.full(m.n_nodes, 2.5), 4) == pytest.approx(2.5)
    u = np.zeros(m.n_nodes)
    u[m.triangles[0]] = [0.0, 1.0, 2.0]
    assert element_average(m, u, 0) == pytest.approx(1.0)
    unit = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))
    assert element_average(unit, unit.nodes[:, 0], 0) == pytest.approx(1 / 3)


@given(st.lists(st.floats(-10, 10), min_size=25, max_size=25))
def test_averages_consistent_with_mass(values):
    m = build_unit_square_mesh(4)
    u = np.asarray(values)
    ops = assemble_p1(m)
    lhs = np.sum(m.element_area * element_averages(m, u))
    rhs = np.ones(m.n_nodes) @ (ops.M @ u)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_basis_integrals():
    nodes = np.array([[0.0, 0.0], [0.2, 0.0], [0.0, 0.2], [1.0, 1.0]])
    m = Mesh(nodes, np.array([[0, 1, 2], [1, 3, 2]]))
    assert m.element_area[0] == pytest.approx(0.02)
    assert basis_element_integral(m, 0, 0) == pytest.approx(0.02 / 3)
    assert basis_element_integral(m, 0, 3) == 0.0
    assert sum(basis_element_integral(m, 0, v) for v in range(4)) == pytest.approx(0.02)
    assert basis_element_mean(m, 1, 3) == pytest.approx(1 / 3)
    assert basis_element_mean(m, 1, 0) == 0.0
