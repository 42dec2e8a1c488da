"""Discrete connectedness penalty and its variation with respect to P1 nodal values.

One evaluation runs the whole per-step pipeline: element averages, edge weights,
interface elements, zero-distance components, component masses, pairwise
Dijkstra distances, and finally the energy

    C = sum_{i != j} d_ij * W_i * W_j

together with its derivative along every hat function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import BandConfig, band_profile
from .connectivity import (
    ComponentDecomposition,
    DualGraph,
    _band_pipeline,
    _split_labels,
    component_distances,
)
from .mesh import Mesh

__all__ = [
    "BandConfig",
    "band_profile",
    "PenaltyResult",
    "StaleDecompositionError",
    "component_masses",
    "penalty_energy",
    "penalty_variation",
    "evaluate_penalty",
    "dual_band_penalty",
]


class StaleDecompositionError(RuntimeError):
    """The decomposition was computed for a different phase field."""


@dataclass
class PenaltyResult:
    """Unscaled penalty ``energy`` and nodal ``variation`` for one band."""

    band: BandConfig
    energy: float
    variation: np.ndarray
    decomposition: ComponentDecomposition

    @property
    def n_components(self) -> int:
        return self.decomposition.n_components

    @property
    def scaled_energy(self) -> float:
        # an inactive band contributes nothing, even when its energy was not computed
        return self.band.prefactor * self.energy if self.band.prefactor > 0 else 0.0

    @property
    def scaled_variation(self) -> np.ndarray:
        return self.band.prefactor * self.variation


def component_masses(
    decomposition: ComponentDecomposition, element_averages, mesh: Mesh, cfg: BandConfig, profile=None
) -> np.ndarray:
    """``W_j = (1/eps) sum_{T in C_j} W~(u_T) |T|``; stored on the decomposition and returned."""
    if profile is None:
        profile = band_profile(np.asarray(element_averages, dtype=float), cfg)
    Wt = profile[2]
    masses = np.array(
        [np.sum(Wt[c] * mesh.element_area[c]) / cfg.eps for c in decomposition.components],
        dtype=float,
    )
    decomposition.masses = masses
    return masses


def penalty_energy(decomposition: ComponentDecomposition) -> float:
    """Ordered-pair sum ``sum_{i != j} d_ij W_i W_j``; zero with fewer than two components."""
    if decomposition.n_components <= 1:
        return 0.0
    W = decomposition.masses
    d = decomposition.distances
    if W is None or d is None:
        raise RuntimeError("masses and distances must be computed first")
    total = 0.0
    m = decomposition.n_components
    for i in range(m):
        for j in range(i + 1, m):
            total += 2.0 * d[i, j] * W[i] * W[j]
    return total


def penalty_variation(
    decomposition: ComponentDecomposition,
    element_averages,
    mesh: Mesh,
    cfg: BandConfig,
    graph: DualGraph | None = None,
    profile=None,
) -> np.ndarray:
    """Derivative of the penalty energy along every P1 hat function.

    Two contributions: the change of component masses (``W~'`` on interface
    elements), and the change of edge weights along each stored shortest path.
    ``graph`` supplies the length scale of the path edges; without it the
    triangle diameters are used.
    """
    u_T = np.asarray(element_averages, dtype=float)
    G = np.zeros(mesh.n_nodes)
    m = decomposition.n_components
    if m <= 1:
        return G
    ref = decomposition.element_averages
    if ref is not None and not np.array_equal(ref, u_T):
        raise StaleDecompositionError("decomposition does not belong to these element averages")
    W = decomposition.masses
    d = decomposition.distances
    if W is None or d is None:
        raise RuntimeError("masses and distances must be computed first")

    if profile is None:
        profile = band_profile(u_T, cfg)
    _, dF, _, dWt = profile
    length = mesh.element_diameter if graph is None else graph.element_length
    # per-element factors multiplying int_T phi dx (mass term) and the element mean of phi (path term)
    by_integral = np.zeros(mesh.n_elements)
    by_mean = np.zeros(mesh.n_elements)

    # mass term: 2 * dW_i * sum_{j != i} W_j d_ij
    coupling = 2.0 * (d @ W)
    for i, comp in enumerate(decomposition.components):
        by_integral[comp] += coupling[i] * dWt[comp] / cfg.eps

    # distance term: each unordered pair stands for two ordered ones
    for (i, j), path in decomposition.paths.items():
        if len(path) < 2:
            continue
        coef = 2.0 * W[i] * W[j] * 0.5 * 0.5 * (length[path[1:]] + length[path[:-1]])
        np.add.at(by_mean, path[1:], coef * dF[path[1:]])
        np.add.at(by_mean, path[:-1], coef * dF[path[:-1]])

    share = (by_integral * mesh.element_area + by_mean) / 3.0
    np.add.at(G, mesh.triangles.ravel(), np.repeat(share, 3))
    return G


def evaluate_penalty(
    u,
    mesh: Mesh,
    graph: DualGraph,
    cfg: BandConfig,
    with_variation: bool = True,
    with_distances: bool = True,
) -> PenaltyResult:
    """Run the full per-step pipeline for one band and return energy, variation and components.

    Element averages, band functions, edge weights, the interface set, its
    components and their masses come from one compiled pass; Dijkstra and the
    variation only run when there are at least two components. With
    ``with_distances=False`` the pipeline stops after the masses (component
    counting only) and the energy is reported as NaN whenever it would need
    distances.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise ValueError(f"expected {mesh.n_nodes} nodal values, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        bad = int(np.flatnonzero(~np.isfinite(u))[0])
        raise ValueError(f"non-finite value {u[bad]} at node {bad}")
    u_T, F, dF, Wt, dWt, weights, labels, count, masses = _band_pipeline(
        mesh.triangles, mesh.element_area, u, graph.edges, graph.geometry,
        cfg.alpha, cfg.beta, cfg.c1, cfg.c2, cfg.c3, cfg.eps,
    )
    graph.weights = weights
    decomposition = ComponentDecomposition(
        labels=labels,
        components=_split_labels(labels, count),
        weights=weights,
        element_averages=u_T,
        masses=masses,
    )
    if count <= 1:
        decomposition.distances = np.zeros((count, count))
        return PenaltyResult(cfg, 0.0, np.zeros(mesh.n_nodes), decomposition)
    if not with_distances:
        return PenaltyResult(cfg, float("nan"), np.zeros(mesh.n_nodes), decomposition)
    component_distances(graph, decomposition)
    energy = penalty_energy(decomposition)
    if with_variation:
        variation = penalty_variation(decomposition, u_T, mesh, cfg, graph, (F, dF, Wt, dWt))
    else:
        variation = np.zeros(mesh.n_nodes)
    return PenaltyResult(cfg, energy, variation, decomposition)


def dual_band_penalty(u, mesh: Mesh, graph: DualGraph, cfg_plus: BandConfig, cfg_minus: BandConfig):
    """Sum of two independent penalty pipelines, each weighted by its band prefactor.

    Returns ``(energy, variation, (result_plus, result_minus))``.
    """
    plus = evaluate_penalty(u, mesh, graph, cfg_plus)
    minus = evaluate_penalty(u, mesh, graph, cfg_minus)
    energy = plus.scaled_energy + minus.scaled_energy
    variation = plus.scaled_variation + minus.scaled_variation
    return energy, variation, (plus, minus)
