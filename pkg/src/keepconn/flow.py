"""Semi-implicit L2 gradient flows with an explicitly treated connectedness penalty.

Every step solves

    (eps M_L + tau A) u_new = eps M_L u - tau (grad E(u) - A u + grad P(u))

where ``A`` is the model's constant linear (stiff) part, ``E`` the phase-field
energy and ``P`` the weighted sum of connectedness penalties.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bands import BandConfig
from .connectivity import DualGraph, build_dual_graph
from .functionals import ModelParams, bending_energy, fidelity, modica_mortola
from .mesh import Mesh, P1Operators
from .penalty import evaluate_penalty

logger = logging.getLogger(__name__)

ENERGY_COLUMNS = ("perimeter", "curvature", "fidelity", "penalty_plus", "penalty_minus", "penalty", "total")


class FlowError(RuntimeError):
    """The time stepping could not continue."""


@dataclass(frozen=True)
class FlowConfig:
    """Time stepping controls.

    The first ``warmup_steps`` steps use ``tau_init`` (default ``tau / 50``) and
    are never declared stationary. A run stops once
    ``||u_new - u||_{M_L} / tau < stop_tol`` or after ``max_steps`` steps.
    """

    tau: float
    max_steps: int = 10_000
    tau_init: float | None = None
    warmup_steps: int = 500
    stop_tol: float = 1e-4
    solver: str = "direct"
    solver_tol: float = 1e-10
    solver_maxiter: int = 1000
    log_every: int = 1
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.stop_tol > 0:
            raise ValueError(f"stop_tol must be positive, got {self.stop_tol}")
        if self.tau_init is None:
            object.__setattr__(self, "tau_init", self.tau / 50.0)
        if not self.tau_init > 0:
            raise ValueError(f"tau_init must be positive, got {self.tau_init}")
        if self.solver not in ("direct", "cg"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.max_steps < 0 or self.warmup_steps < 0:
            raise ValueError("step counts must be nonnegative")

    def step_size(self, k: int) -> float:
        return self.tau_init if k < self.warmup_steps else self.tau


class SegmentationModel:
    """Perimeter plus fidelity to a grey-value image; natural boundary conditions."""

    name = "segmentation"

    def __init__(self, mesh: Mesh, ops: P1Operators, params: ModelParams, image):
        if params.well != "shifted":
            raise ValueError("segmentation uses the shifted double well")
        self.mesh, self.ops, self.params = mesh, ops, params
        self.image = np.asarray(image, dtype=float)
        self.A = (params.eps / params.c0) * ops.K
        self.fixed_nodes = np.zeros(0, dtype=np.int64)
        self.fixed_value = 0.0

    def evaluate(self, u):
        e_per, g_per = modica_mortola(u, self.ops, self.params)
        e_fid, g_fid = fidelity(u, self.image, self.ops, self.params.eta)
        return {"perimeter": e_per, "curvature": 0.0, "fidelity": e_fid}, g_per + g_fid


class CurvatureFlowModel:
    """Bending energy with spontaneous curvature and area penalty, clamped to -1 on the boundary.

    The implicit part is the quadratic piece of the energy: the bilaplacian
    ``(2 eps / c0) K M_L^{-1} K`` plus ``lam (eps / c0) K``.
    """

    name = "curvature-flow"

    def __init__(self, mesh: Mesh, ops: P1Operators, params: ModelParams):
        if params.well != "symmetric":
            raise ValueError("curvature flow uses the symmetric double well")
        self.mesh, self.ops, self.params = mesh, ops, params
        K = ops.K
        bilap = (K @ sp.diags(1.0 / ops.lumped) @ K).tocsr()
        self.A = ((2.0 * params.eps / params.c0) * bilap + (params.lam * params.eps / params.c0) * K).tocsr()
        self.fixed_nodes = mesh.boundary_nodes
        self.fixed_value = -1.0

    def evaluate(self, u):
        e_bend, g_bend = bending_energy(u, self.ops, self.params)
        terms = {"perimeter": 0.0, "curvature": e_bend, "fidelity": 0.0}
        if self.params.lam == 0.0:
            return terms, g_bend
        e_per, g_per = modica_mortola(u, self.ops, self.params)
        terms["perimeter"] = self.params.lam * e_per
        return terms, g_bend + self.params.lam * g_per


class _LinearSolver:
    """Solves ``(eps M_L + tau A) x = b`` on the free nodes; factorizations cached per tau."""

    def __init__(self, ops: P1Operators, A, eps: float, fixed_nodes, config: FlowConfig):
        n = len(ops.lumped)
        self.free = np.setdiff1d(np.arange(n), fixed_nodes)
        self.fixed = np.asarray(fixed_nodes, dtype=np.int64)
        self.ops, self.A, self.eps, self.config = ops, A, eps, config
        self._cache: dict[float, tuple] = {}

    def _system(self, tau: float):
        if tau not in self._cache:
            S = (sp.diags(self.eps * self.ops.lumped) + tau * self.A).tocsr()
            S_ff = S[self.free][:, self.free].tocsc()
            S_fb = S[self.free][:, self.fixed].tocsr()
            solve = spla.factorized(S_ff) if self.config.solver == "direct" else None
            self._cache[tau] = (S_ff.tocsr(), S_fb, solve, 1.0 / S_ff.diagonal())
        return self._cache[tau]

    def solve(self, rhs, u_guess, tau: float, fixed_values) -> np.ndarray:
        S_ff, S_fb, solve, inv_diag = self._system(tau)
        b = rhs[self.free]
        if len(self.fixed):
            b = b - S_fb @ fixed_values
        if solve is not None:
            x = solve(b)
        else:
            x, info = spla.cg(
                S_ff,
                b,
                x0=u_guess[self.free],
                rtol=self.config.solver_tol,
                atol=0.0,
                maxiter=self.config.solver_maxiter,
                M=sp.diags(inv_diag),
            )
            if info != 0:
                raise FlowError(f"conjugate gradients did not converge (info={info}, maxiter={self.config.solver_maxiter})")
        out = np.empty_like(rhs)
        out[self.free] = x
        out[self.fixed] = fixed_values
        return out


def semi_implicit_step(
    u,
    ops: P1Operators,
    A,
    force,
    eps: float,
    tau: float,
    fixed_nodes=(),
    fixed_value: float = 0.0,
    solver: _LinearSolver | None = None,
) -> np.ndarray:
    """One step ``(eps M_L + tau A) u_new = eps M_L u - tau force`` with optional Dirichlet nodes.

    ``force`` collects every explicitly treated term evaluated at ``u``.
    """
    u = np.asarray(u, dtype=float)
    if solver is None:
        solver = _LinearSolver(ops, A, eps, np.asarray(fixed_nodes, dtype=np.int64), FlowConfig(tau=tau))
    rhs = eps * ops.lumped * u - tau * np.asarray(force, dtype=float)
    fixed_values = np.full(len(solver.fixed), fixed_value)
    return solver.solve(rhs, u, tau, fixed_values)


@dataclass
class Trajectory:
    """Result of :func:`run_flow`: per-step records, optional snapshots and the final field."""

    records: list[dict] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    snapshot_steps: list[int] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    bands: dict[str, BandConfig] = field(default_factory=dict)
    final: np.ndarray | None = None
    stop_reason: str = ""
    stationary: bool = False
    steps: int = 0
    time: float = 0.0
    wall_time: float = 0.0
    penalty_time: float = 0.0
    gradient_norm: float = float("nan")
    upticks: int = 0

    @property
    def penalty_share(self) -> float:
        return self.penalty_time / self.wall_time if self.wall_time > 0 else 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])


def _penalty_terms(u, mesh, graph, bands, want_force):
    force = None
    out = {}
    for name, band in bands.items():
        active = band.prefactor > 0
        res = evaluate_penalty(u, mesh, graph, band, with_variation=want_force and active, with_distances=active)
        out[name] = res
        if want_force and band.prefactor > 0 and res.n_components > 1:
            g = res.scaled_variation
            force = g if force is None else force + g
    return out, force


def _record(step, t, tau, terms, penalties, increment):
    rec = {"step": step, "time": t, "tau": tau}
    rec.update({k: float(v) for k, v in terms.items()})
    pen_total = 0.0
    for name in ("plus", "minus"):
        res = penalties.get(name)
        rec[f"penalty_{name}"] = res.scaled_energy if res is not None else 0.0
        rec[f"cbar_{name}"] = res.energy if res is not None else 0.0
        rec[f"M_{name}"] = res.n_components if res is not None else 0
        pen_total += rec[f"penalty_{name}"]
    rec["penalty"] = pen_total
    rec["total"] = rec["perimeter"] + rec["curvature"] + rec["fidelity"] + pen_total
    rec["increment"] = increment
    return rec


def run_flow(
    config: FlowConfig,
    model,
    u0,
    bands: dict[str, BandConfig] | None = None,
    graph: DualGraph | None = None,
    callback=None,
) -> Trajectory:
    """Iterate semi-implicit steps with the penalty pipeline re-run on every step.

    ``bands`` maps ``"plus"`` / ``"minus"`` to band configurations. Bands with
    zero amplitude only run the pipeline up to the component masses, so their
    component counts are logged while their unweighted energy shows as NaN.
    """
    mesh, ops = model.mesh, model.ops
    eps = model.params.eps
    bands = dict(bands or {})
    unknown = set(bands) - {"plus", "minus"}
    if unknown:
        raise ValueError(f"band names must be 'plus' or 'minus', got {sorted(unknown)}")
    if graph is None and bands:
        graph = build_dual_graph(mesh)
    solver = _LinearSolver(ops, model.A, eps, model.fixed_nodes, config)
    fixed_values = np.full(len(model.fixed_nodes), model.fixed_value)

    u = np.array(u0, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise ValueError(f"initial field has shape {u.shape}, expected ({mesh.n_nodes},)")
    u[model.fixed_nodes] = model.fixed_value
    traj = Trajectory(bands=bands)
    t = 0.0
    start = time.perf_counter()
    last_total = None
    k = 0

    def snapshot(step, when, field_):
        traj.snapshot_steps.append(step)
        traj.snapshot_times.append(when)
        traj.snapshots.append(field_.copy())

    if config.snapshot_every:
        snapshot(0, 0.0, u)

    while True:
        tp = time.perf_counter()
        if bands:
            penalties, pen_force = _penalty_terms(u, mesh, graph, bands, True)
        else:
            penalties, pen_force = {}, None
        traj.penalty_time += time.perf_counter() - tp

        terms, grad = model.evaluate(u)
        if k >= config.max_steps:
            traj.records.append(_record(k, t, 0.0, terms, penalties, float("nan")))
            traj.stop_reason = "max_steps"
            break

        tau = config.step_size(k)
        force = grad - model.A @ u
        if pen_force is not None:
            force = force + pen_force
        u_new = semi_implicit_step(u, ops, model.A, force, eps, tau, model.fixed_nodes, model.fixed_value, solver)
        if not np.all(np.isfinite(u_new)):
            raise FlowError(f"non-finite field values after step {k}")
        du = u_new - u
        increment = float(np.sqrt(du @ (ops.lumped * du))) / tau

        rec = _record(k, t, tau, terms, penalties, increment)
        if last_total is not None and rec["total"] > last_total:
            traj.upticks += 1
        last_total = rec["total"]
        if config.log_every and k % config.log_every == 0:
            traj.records.append(rec)
        if callback is not None:
            callback(k, u, rec)

        u = u_new
        t += tau
        k += 1
        if config.snapshot_every and k % config.snapshot_every == 0:
            snapshot(k, t, u)
        if k > config.warmup_steps and increment < config.stop_tol:
            # final record at the accepted field
            tp = time.perf_counter()
            if bands:
                penalties, pen_force = _penalty_terms(u, mesh, graph, bands, True)
            traj.penalty_time += time.perf_counter() - tp
            terms, grad = model.evaluate(u)
            traj.records.append(_record(k, t, 0.0, terms, penalties, float("nan")))
            traj.stop_reason = "stationary"
            traj.stationary = True
            break

    if pen_force is not None:
        grad = grad + pen_force
    free = solver.free
    traj.gradient_norm = float(np.sqrt(np.sum(grad[free] ** 2 / ops.lumped[free])))
    traj.final = u
    traj.steps = k
    traj.time = t
    traj.wall_time = time.perf_counter() - start
    if config.snapshot_every and (not traj.snapshot_steps or traj.snapshot_steps[-1] != k):
        snapshot(k, t, u)
    logger.info(
        "%s: %s after %d steps (t=%.3e), penalty share %.2f%%",
        model.name, traj.stop_reason, k, t, 100 * traj.penalty_share,
    )
    return traj


def component_count_series(trajectory: Trajectory, band: BandConfig | str, mesh: Mesh | None = None) -> np.ndarray:
    """Number of interface components per recorded step.

    ``band`` may name one of the run's bands (uses the per-step log) or be any
    band configuration, in which case the count is recomputed on the snapshots.
    """
    if isinstance(band, str):
        return trajectory.column(f"M_{band}").astype(int)
    for name, b in trajectory.bands.items():
        if b == band:
            return trajectory.column(f"M_{name}").astype(int)
    if mesh is None:
        raise ValueError("a mesh is needed to recompute component counts on snapshots")
    graph = build_dual_graph(mesh)
    counts = [evaluate_penalty(s, mesh, graph, band, with_variation=False).n_components for s in trajectory.snapshots]
    return np.array(counts, dtype=int)
