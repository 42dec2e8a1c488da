"""Structured P1 triangulations of square domains and their finite-element operators.

Node ordering is row-major: node ``j * (n + 1) + i`` sits at ``(x_i, y_j)``.
Each grid cell is split along its lower-left to upper-right diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class DegenerateElementError(ValueError):
    """A triangle with (numerically) zero area was found during assembly."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable 2D triangulation with cached geometric quantities.

    Attributes:
        nodes: (N, 2) node coordinates.
        triangles: (T, 3) vertex indices, counterclockwise.
        element_area: (T,) triangle areas |T|.
        element_diameter: (T,) longest edge length of each triangle.
        adjacency: (E, 2) pairs ``(t1, t2)``, ``t1 < t2``, of triangles sharing an edge.
        boundary_edges: (B, 2) node pairs on edges owned by a single triangle.
        boundary_nodes: sorted node indices on the boundary.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    element_area: np.ndarray = field(init=False)
    element_diameter: np.ndarray = field(init=False)
    adjacency: np.ndarray = field(init=False)
    boundary_edges: np.ndarray = field(init=False)
    boundary_nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError(f"nodes must have shape (N, 2), got {nodes.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError(f"triangles must have shape (T, 3), got {tris.shape}")
        if tris.size and (tris.min() < 0 or tris.max() >= len(nodes)):
            raise ValueError("triangle references a node index out of range")

        p = nodes[tris]
        e0 = p[:, 2] - p[:, 1]
        e1 = p[:, 0] - p[:, 2]
        e2 = p[:, 1] - p[:, 0]
        area = 0.5 * np.abs(e2[:, 0] * e1[:, 1] - e2[:, 1] * e1[:, 0])
        lengths = np.stack([np.hypot(*e0.T), np.hypot(*e1.T), np.hypot(*e2.T)], axis=1)

        adjacency, boundary_edges = _edge_topology(tris)

        for name, value in [
            ("nodes", nodes),
            ("triangles", tris),
            ("element_area", area),
            ("element_diameter", lengths.max(axis=1)),
            ("adjacency", adjacency),
            ("boundary_edges", boundary_edges),
            ("boundary_nodes", np.unique(boundary_edges)),
        ]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def area(self) -> float:
        return float(self.element_area.sum())

    @property
    def h(self) -> float:
        """Largest element diameter."""
        return float(self.element_diameter.max())

    def node_to_elements(self) -> list[np.ndarray]:
        """Incidence lists: for every node, the sorted ids of triangles containing it."""
        order = np.argsort(self.triangles.ravel(), kind="stable")
        elem = order // 3
        counts = np.bincount(self.triangles.ravel(), minlength=self.n_nodes)
        return np.split(elem, np.cumsum(counts)[:-1])

    def triangle_neighbors(self) -> list[list[int]]:
        """For every triangle, the (up to 3) triangles sharing an edge with it."""
        nbrs: list[list[int]] = [[] for _ in range(self.n_elements)]
        for a, b in self.adjacency:
            nbrs[a].append(int(b))
            nbrs[b].append(int(a))
        return [sorted(x) for x in nbrs]


def _edge_topology(tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pair triangles across shared edges and collect edges owned by one triangle."""
    n_tri = len(tris)
    if n_tri == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros((0, 2), dtype=np.int64)
    local = np.array([[1, 2], [2, 0], [0, 1]])
    edges = np.sort(tris[:, local].reshape(-1, 2), axis=1)
    owner = np.repeat(np.arange(n_tri), 3)
    order = np.lexsort((owner, edges[:, 1], edges[:, 0]))
    edges, owner = edges[order], owner[order]

    same_as_next = np.all(edges[1:] == edges[:-1], axis=1)
    if np.any(same_as_next[1:] & same_as_next[:-1]):
        raise ValueError("non-manifold mesh: an edge is shared by more than two triangles")
    first = np.flatnonzero(same_as_next)
    adjacency = np.stack([owner[first], owner[first + 1]], axis=1)
    adjacency.sort(axis=1)
    adjacency = adjacency[np.lexsort((adjacency[:, 1], adjacency[:, 0]))]

    paired = np.zeros(len(edges), dtype=bool)
    paired[first] = True
    paired[first + 1] = True
    return adjacency, edges[~paired]


def build_square_mesh(n: int, lower: float = -0.5, upper: float = 0.5) -> Mesh:
    """Uniform triangulation of ``[lower, upper]^2`` with ``n`` cells per side.

    Produces ``(n + 1)**2`` nodes and ``2 n**2`` congruent right triangles.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"number of subdivisions must be a positive integer, got {n!r}")
    if not upper > lower:
        raise ValueError(f"empty domain [{lower}, {upper}]")
    n = int(n)
    x = np.linspace(lower, upper, n + 1)
    xx, yy = np.meshgrid(x, x)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower_tri = np.column_stack([v00, v10, v11])
    upper_tri = np.column_stack([v00, v11, v01])
    tris = np.stack([lower_tri, upper_tri], axis=1).reshape(-1, 3)
    return Mesh(nodes, tris)


def build_unit_square_mesh(n: int) -> Mesh:
    """The ``(-1/2, 1/2)^2`` case of :func:`build_square_mesh`."""
    return build_square_mesh(n, -0.5, 0.5)


@dataclass(frozen=True)
class P1Operators:
    """Assembled P1 matrices: consistent mass ``M``, stiffness ``K`` and lumped mass diagonal."""

    M: sp.csr_matrix
    K: sp.csr_matrix
    lumped: np.ndarray

    @property
    def M_L(self) -> sp.dia_matrix:
        return sp.diags(self.lumped)


def local_stiffness(coords: np.ndarray) -> np.ndarray:
    """Element stiffness ``int grad(phi_i) . grad(phi_j)`` for one triangle given as (3, 2) coordinates."""
    return _local_matrices(np.asarray(coords, dtype=float)[None])[1][0]


def _local_matrices(p: np.ndarray):
    # p: (T, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * np.abs(det)
    # gradients of barycentric coordinates: rows of inv([d1 d2])^T with phi_0 = 1 - phi_1 - phi_2
    inv = np.empty((len(p), 2, 2))
    inv[:, 0, 0] = d2[:, 1]
    inv[:, 0, 1] = -d2[:, 0]
    inv[:, 1, 0] = -d1[:, 1]
    inv[:, 1, 1] = d1[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv /= det[:, None, None]
    grads = np.empty((len(p), 3, 2))
    grads[:, 1] = inv[:, 0]
    grads[:, 2] = inv[:, 1]
    grads[:, 0] = -grads[:, 1] - grads[:, 2]
    stiff = area[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)
    mass = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    return mass, stiff, area


def assemble_p1(mesh: Mesh) -> P1Operators:
    """Assemble consistent mass, stiffness (pure Neumann) and row-sum lumped mass."""
    areas = mesh.element_area
    tol = 1e-14 * max(mesh.h, 1.0) ** 2
    bad = np.flatnonzero(areas <= tol)
    if bad.size:
        t = int(bad[0])
        raise DegenerateElementError(
            f"element {t} (nodes {mesh.triangles[t].tolist()}) has zero area"
        )
    mass, stiff, _ = _local_matrices(mesh.nodes[mesh.triangles])
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    shape = (mesh.n_nodes, mesh.n_nodes)
    M = sp.coo_matrix((mass.ravel(), (rows, cols)), shape=shape).tocsr()
    K = sp.coo_matrix((stiff.ravel(), (rows, cols)), shape=shape).tocsr()
    # symmetrize away rounding differences between (i, j) and (j, i) contributions
    K = ((K + K.T) * 0.5).tocsr()
    lumped = np.asarray(M.sum(axis=1)).ravel()
    return P1Operators(M=M, K=K, lumped=lumped)


def element_averages(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Mean value of a P1 function over every triangle (vertex mean)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise ValueError(f"expected {mesh.n_nodes} nodal values, got shape {u.shape}")
    t = mesh.triangles
    return (u[t[:, 0]] + u[t[:, 1]] + u[t[:, 2]]) / 3.0


def element_average(mesh: Mesh, u: np.ndarray, element: int) -> float:
    return float(np.mean(np.asarray(u, dtype=float)[mesh.triangles[element]]))


def basis_element_integral(mesh: Mesh, element: int, node: int) -> float:
    """``int_T phi_node dx``: ``|T|/3`` when ``node`` is a vertex of ``T``, otherwise 0."""
    if node in mesh.triangles[element]:
        return float(mesh.element_area[element]) / 3.0
    return 0.0


def basis_element_mean(mesh: Mesh, element: int, node: int) -> float:
    """Mean of the hat function over ``T``: 1/3 for a vertex of ``T``, otherwise 0."""
    return 1.0 / 3.0 if node in mesh.triangles[element] else 0.0
