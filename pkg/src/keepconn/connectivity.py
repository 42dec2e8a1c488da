"""Dual graph of a triangulation, interface components and geodesic distances between them.

The graph has one vertex per triangle and one edge per shared mesh edge. Edge
weights are recomputed from the phase field every time step; the topology and
the geometric length factors are fixed at construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bands import BandConfig, band_profile
from .mesh import Mesh


class DualGraph:
    """Undirected weighted graph stored as an edge list plus a CSR neighbour table.

    ``element_length`` holds the per-vertex length scale (triangle diameter, or a
    uniform grid length); the geometric factor of edge ``(a, b)`` is the mean of
    the two lengths. ``weights`` is replaced, never mutated in place, so arrays
    handed out earlier stay valid.
    """

    def __init__(self, n_vertices: int, edges, element_length=None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n_vertices):
            raise ValueError("edge references a vertex out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self loops are not allowed")
        self.n_vertices = int(n_vertices)
        self.edges = edges
        if element_length is None:
            element_length = np.ones(self.n_vertices)
        self.element_length = np.asarray(element_length, dtype=float)
        self.geometry = 0.5 * (self.element_length[edges[:, 0]] + self.element_length[edges[:, 1]])
        self.weights = np.zeros(len(edges))

        # CSR with neighbours sorted by index; half_edge maps each entry back to its edge
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        eid = np.concatenate([np.arange(len(edges)), np.arange(len(edges))])
        order = np.lexsort((dst, src))
        self.indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n_vertices), out=self.indptr[1:])
        self.neighbors = dst[order]
        self.half_edge = eid[order]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def set_weights(self, weights) -> None:
        weights = np.array(weights, dtype=float)
        if weights.shape != (self.n_edges,):
            raise ValueError(f"expected {self.n_edges} weights, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("edge weights must be finite and nonnegative")
        self.weights = weights

    def path_length(self, path, weights=None) -> float:
        """Sum of edge weights along consecutive vertices of ``path``, in order."""
        w = self.weights if weights is None else weights
        total = 0.0
        for a, b in zip(path[:-1], path[1:]):
            lo, hi = self.indptr[a], self.indptr[a + 1]
            k = lo + np.searchsorted(self.neighbors[lo:hi], b)
            if k >= hi or self.neighbors[k] != b:
                raise ValueError(f"vertices {a} and {b} are not adjacent")
            total += w[self.half_edge[k]]
        return total


def build_dual_graph(mesh: Mesh, length_scale: float | None = None) -> DualGraph:
    """Dual graph of ``mesh``. ``length_scale`` replaces per-element diameters by one grid length."""
    if length_scale is None:
        lengths = mesh.element_diameter
    else:
        lengths = np.full(mesh.n_elements, float(length_scale))
    return DualGraph(mesh.n_elements, mesh.adjacency, lengths)


def assign_edge_weights(graph: DualGraph, element_averages, band: BandConfig) -> np.ndarray:
    """Set ``w_e = (F(u_T1) + F(u_T2)) / 2 * geometry_e`` and return the new weights."""
    u_T = np.asarray(element_averages, dtype=float)
    if u_T.shape != (graph.n_vertices,):
        raise ValueError(f"expected {graph.n_vertices} element averages, got shape {u_T.shape}")
    if not np.all(np.isfinite(u_T)):
        bad = int(np.flatnonzero(~np.isfinite(u_T))[0])
        raise ValueError(f"non-finite element average {u_T[bad]} on element {bad}")
    return set_weights_from_F(graph, band_profile(u_T, band)[0])


def set_weights_from_F(graph: DualGraph, F: np.ndarray) -> np.ndarray:
    e = graph.edges
    graph.weights = 0.5 * (F[e[:, 0]] + F[e[:, 1]]) * graph.geometry
    return graph.weights


def extract_interface(element_averages, alpha: float, beta: float) -> np.ndarray:
    """Sorted ids of elements whose average lies in the closed band ``[alpha, beta]``."""
    if not alpha < beta:
        raise ValueError(f"band requires alpha < beta, got ({alpha}, {beta})")
    u_T = np.asarray(element_averages, dtype=float)
    return np.flatnonzero((u_T >= alpha) & (u_T <= beta))


@dataclass
class ComponentDecomposition:
    """Interface components and, once filled, their masses, distances and connecting paths.

    ``labels[t]`` is the component of element ``t`` or -1. ``distances`` is the
    symmetric (M, M) table; ``paths[(i, j)]`` for ``i < j`` runs from an element
    of component ``i`` to one of component ``j``.
    """

    labels: np.ndarray
    components: list[np.ndarray]
    weights: np.ndarray
    element_averages: np.ndarray | None = None
    masses: np.ndarray | None = None
    distances: np.ndarray | None = None
    paths: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def path(self, i: int, j: int) -> np.ndarray:
        if i < j:
            return self.paths[(i, j)]
        return self.paths[(j, i)][::-1]


def decompose_components(graph: DualGraph, interface, element_averages=None) -> ComponentDecomposition:
    """Split interface elements into classes joined by zero-weight edges (union-find)."""
    member = np.zeros(graph.n_vertices, dtype=np.bool_)
    member[np.asarray(interface, dtype=np.int64)] = True
    labels, count = _zero_weight_labels(graph.n_vertices, graph.edges, graph.weights, member)
    components = _split_labels(labels, count)
    if element_averages is not None:
        element_averages = np.array(element_averages, dtype=float)
    return ComponentDecomposition(
        labels=labels, components=components, weights=graph.weights, element_averages=element_averages
    )


def _split_labels(labels: np.ndarray, count: int) -> list[np.ndarray]:
    if count == 0:
        return []
    ids = np.flatnonzero(labels >= 0)
    order = np.argsort(labels[ids], kind="stable")
    split = np.cumsum(np.bincount(labels[ids], minlength=count))[:-1]
    return np.split(ids[order], split)


def component_distances(graph: DualGraph, decomposition: ComponentDecomposition) -> ComponentDecomposition:
    """Fill pairwise component distances and shortest paths by multi-source Dijkstra.

    Sweep ``i`` is seeded with every element of component ``i`` and stops as
    soon as all components ``j > i`` have been reached.
    """
    m = decomposition.n_components
    decomposition.paths = {}
    if decomposition.weights is not graph.weights:
        raise RuntimeError("graph weights changed since the components were computed")
    if m < 2:
        decomposition.distances = np.zeros((m, m))
        return decomposition
    members = np.concatenate(decomposition.components)
    comp_ptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum([len(c) for c in decomposition.components], out=comp_ptr[1:])
    table, flat, ptr, ok = _component_sweeps(
        graph.indptr, graph.neighbors, graph.weights[graph.half_edge], members, comp_ptr, decomposition.labels
    )
    if not ok:
        raise RuntimeError("some interface components are not connected in the dual graph")
    k = 0
    for i in range(m):
        for j in range(i + 1, m):
            decomposition.paths[(i, j)] = flat[ptr[k] : ptr[k + 1]]
            k += 1
    decomposition.distances = table
    return decomposition


def shortest_distances(graph: DualGraph, sources) -> tuple[np.ndarray, np.ndarray]:
    """Distances from the source set to every vertex and the predecessor array (-1 at sources/unreached)."""
    sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    labels = np.full(graph.n_vertices, -1, dtype=np.int64)
    dist, pred, _ = _dijkstra(
        graph.indptr, graph.neighbors, graph.weights[graph.half_edge], sources, labels, np.zeros(0, dtype=np.bool_), 0
    )
    return dist, pred


def floyd_warshall_reference(graph: DualGraph, max_vertices: int = 200) -> np.ndarray:
    """All-pairs shortest distances by Floyd-Warshall; a test oracle for small graphs."""
    n = graph.n_vertices
    if n > max_vertices:
        raise ValueError(f"Floyd-Warshall reference limited to {max_vertices} vertices, got {n}")
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    a, b = graph.edges[:, 0], graph.edges[:, 1]
    np.minimum.at(D, (a, b), graph.weights)
    np.minimum.at(D, (b, a), graph.weights)
    for k in range(n):
        D = np.minimum(D, D[:, k, None] + D[None, k, :])
    return D


# -- compiled kernels --------------------------------------------------------


@njit(cache=True)
def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


@njit(cache=True)
def _zero_weight_labels(n, edges, weights, member):
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    for e in range(edges.shape[0]):
        a = edges[e, 0]
        b = edges[e, 1]
        if member[a] and member[b] and weights[e] == 0.0:
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                if rank[ra] < rank[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                if rank[ra] == rank[rb]:
                    rank[ra] += 1
    # number components in order of their smallest element
    labels = np.full(n, -1, dtype=np.int64)
    root_label = np.full(n, -1, dtype=np.int64)
    count = 0
    for v in range(n):
        if member[v]:
            r = _find(parent, v)
            if root_label[r] < 0:
                root_label[r] = count
                count += 1
            labels[v] = root_label[r]
    return labels, count


@njit(cache=True)
def _band_pipeline(triangles, area, u, edges, geometry, alpha, beta, c1, c2, c3, eps):
    # fused form of: element averages, band profile, edge weights, interface, components, masses
    n_el = triangles.shape[0]
    u_T = np.empty(n_el)
    F = np.empty(n_el)
    dF = np.empty(n_el)
    Wt = np.empty(n_el)
    dWt = np.empty(n_el)
    member = np.zeros(n_el, dtype=np.bool_)
    for t in range(n_el):
        s = (u[triangles[t, 0]] + u[triangles[t, 1]] + u[triangles[t, 2]]) / 3.0
        u_T[t] = s
        if s < alpha:
            F[t] = c1 * (s - alpha) ** 2
            dF[t] = 2.0 * c1 * (s - alpha)
        elif s > beta:
            F[t] = c2 * (beta - s) ** 2
            dF[t] = 2.0 * c2 * (s - beta)
        else:
            F[t] = 0.0
            dF[t] = 0.0
            member[t] = True
        if alpha < s < beta:
            x = s - alpha
            y = beta - s
            Wt[t] = c3 * x * x * y * y
            dWt[t] = 2.0 * c3 * x * y * (y - x)
        else:
            Wt[t] = 0.0
            dWt[t] = 0.0
    weights = np.empty(edges.shape[0])
    for e in range(edges.shape[0]):
        weights[e] = 0.5 * (F[edges[e, 0]] + F[edges[e, 1]]) * geometry[e]
    labels, count = _zero_weight_labels(n_el, edges, weights, member)
    masses = np.zeros(count)
    for t in range(n_el):
        if labels[t] >= 0:
            masses[labels[t]] += Wt[t] * area[t]
    for j in range(count):
        masses[j] /= eps
    return u_T, F, dF, Wt, dWt, weights, labels, count, masses


@njit(cache=True)
def _less(keys, ids, i, j):
    return keys[i] < keys[j] or (keys[i] == keys[j] and ids[i] < ids[j])


@njit(cache=True)
def _heap_push(keys, ids, size, key, vid):
    pos = size
    keys[pos] = key
    ids[pos] = vid
    while pos > 0:
        parent = (pos - 1) >> 1
        if _less(keys, ids, pos, parent):
            keys[pos], keys[parent] = keys[parent], keys[pos]
            ids[pos], ids[parent] = ids[parent], ids[pos]
            pos = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(keys, ids, size):
    key = keys[0]
    vid = ids[0]
    size -= 1
    keys[0] = keys[size]
    ids[0] = ids[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        child = left
        if left + 1 < size and _less(keys, ids, left + 1, left):
            child = left + 1
        if _less(keys, ids, child, pos):
            keys[pos], keys[child] = keys[child], keys[pos]
            ids[pos], ids[child] = ids[child], ids[pos]
            pos = child
        else:
            break
    return key, vid, size


@njit(cache=True)
def _dijkstra(indptr, neighbors, half_w, sources, labels, targets, n_targets):
    # Binary heap of (distance, vertex) with lazy deletion; equal distances pop in index order.
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    settled = np.zeros(n, dtype=np.bool_)
    hit = np.full(targets.shape[0], -1, dtype=np.int64)
    cap = neighbors.shape[0] + sources.shape[0] + 1
    keys = np.empty(cap)
    ids = np.empty(cap, dtype=np.int64)
    size = 0
    for s in sources:
        if dist[s] > 0.0:
            dist[s] = 0.0
            size = _heap_push(keys, ids, size, 0.0, s)
    remaining = n_targets
    while size > 0:
        d, v, size = _heap_pop(keys, ids, size)
        if settled[v]:
            continue
        settled[v] = True
        lab = labels[v]
        if remaining > 0 and lab >= 0 and targets[lab] and hit[lab] < 0:
            hit[lab] = v
            remaining -= 1
            if remaining == 0:
                break
        for k in range(indptr[v], indptr[v + 1]):
            w = neighbors[k]
            if settled[w]:
                continue
            nd = d + half_w[k]
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = v
                size = _heap_push(keys, ids, size, nd, w)
    return dist, pred, hit


@njit(cache=True)
def _component_sweeps(indptr, neighbors, half_w, members, comp_ptr, labels):
    # One Dijkstra sweep per component i < M-1 on a shared, lazily reset workspace.
    n = indptr.shape[0] - 1
    m = comp_ptr.shape[0] - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    settled = np.zeros(n, dtype=np.bool_)
    touched = np.empty(n, dtype=np.int64)
    n_touched = 0
    cap = neighbors.shape[0] + n + 1
    keys = np.empty(cap)
    ids = np.empty(cap, dtype=np.int64)
    table = np.zeros((m, m))
    hit = np.full(m, -1, dtype=np.int64)
    n_pairs = m * (m - 1) // 2
    ptr = np.zeros(n_pairs + 1, dtype=np.int64)
    flat = np.empty(64, dtype=np.int64)
    pair = 0
    ok = True
    for i in range(m - 1):
        for t in range(n_touched):
            v = touched[t]
            dist[v] = np.inf
            pred[v] = -1
            settled[v] = False
        n_touched = 0
        for j in range(m):
            hit[j] = -1
        size = 0
        for k in range(comp_ptr[i], comp_ptr[i + 1]):
            s = members[k]
            if dist[s] > 0.0:
                dist[s] = 0.0
                touched[n_touched] = s
                n_touched += 1
                size = _heap_push(keys, ids, size, 0.0, s)
        remaining = m - i - 1
        while size > 0 and remaining > 0:
            d, v, size = _heap_pop(keys, ids, size)
            if settled[v]:
                continue
            settled[v] = True
            lab = labels[v]
            if lab > i and hit[lab] < 0:
                hit[lab] = v
                remaining -= 1
                if remaining == 0:
                    break
            for k in range(indptr[v], indptr[v + 1]):
                w = neighbors[k]
                if settled[w]:
                    continue
                nd = d + half_w[k]
                if nd < dist[w]:
                    if dist[w] == np.inf:
                        touched[n_touched] = w
                        n_touched += 1
                    dist[w] = nd
                    pred[w] = v
                    size = _heap_push(keys, ids, size, nd, w)
        for j in range(i + 1, m):
            end = hit[j]
            if end < 0:
                ok = False
                ptr[pair + 1] = ptr[pair]
                pair += 1
                continue
            table[i, j] = dist[end]
            table[j, i] = dist[end]
            length = 1
            v = end
            while pred[v] >= 0:
                v = pred[v]
                length += 1
            start = ptr[pair]
            if start + length > flat.shape[0]:
                grown = np.empty(max(2 * flat.shape[0], start + length), dtype=np.int64)
                grown[:start] = flat[:start]
                flat = grown
            v = end
            for q in range(length - 1, -1, -1):
                flat[start + q] = v
                v = pred[v]
            ptr[pair + 1] = start + length
            pair += 1
    return table, flat[: ptr[n_pairs]].copy(), ptr, ok
