"""Command-line experiment driver: ``simulate <config-file> [--out DIR] [--preset NAME]``.

Exit status is 0 when a time-dependent run stops at a stationary state (and
for the single-pass kinds), 2 when it stops at ``max_steps``, and 1 on any
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import io
from .config import PRESETS, ConfigError, ExperimentConfig, parse_config
from .connectivity import build_dual_graph
from .flow import CurvatureFlowModel, FlowError, SegmentationModel, Trajectory, run_flow
from .functionals import dumbbell_distance, flower_field, optimal_profile, two_disks_image
from .mesh import Mesh, assemble_p1, build_square_mesh
from .penalty import evaluate_penalty

logger = logging.getLogger("keepconn")

EXIT_STATIONARY = 0
EXIT_FAILURE = 1
EXIT_MAX_STEPS = 2

LOG_COLUMNS = (
    "step", "time", "tau", "perimeter", "curvature", "fidelity",
    "penalty_plus", "penalty_minus", "cbar_plus", "cbar_minus", "M_plus", "M_minus",
    "penalty", "total", "increment",
)


def superlevel_components(mesh: Mesh, u, level: float = 0.5) -> int:
    """Number of connected pieces of the node set ``{u > level}`` along mesh edges."""
    inside = np.asarray(u) > level
    if not inside.any():
        return 0
    tri = mesh.triangles
    rows = np.concatenate([tri[:, 0], tri[:, 1], tri[:, 2]])
    cols = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0]])
    keep = inside[rows] & inside[cols]
    idx = np.flatnonzero(inside)
    remap = np.full(mesh.n_nodes, -1)
    remap[idx] = np.arange(len(idx))
    graph = coo_matrix((np.ones(keep.sum()), (remap[rows[keep]], remap[cols[keep]])), shape=(len(idx), len(idx)))
    return int(connected_components(graph, directed=False)[0])


def connection_costs(radius: float, center_distance: float, eta: float) -> dict:
    """Sharp-interface costs of the two ways to become connected."""
    return {
        "bridge_cost": 2.0 * (center_distance - 2.0 * radius),
        "removal_cost": eta * np.pi * radius**2,
    }


def _mesh(cfg: ExperimentConfig) -> Mesh:
    return build_square_mesh(cfg.n, cfg.lower, cfg.upper)


def _image(cfg: ExperimentConfig, mesh: Mesh):
    if cfg.image == "two-disks":
        return two_disks_image(mesh, cfg.radius, cfg.center_distance, cfg.image_width)
    if cfg.image == "flower":
        return flower_field(mesh, cfg.flower_base, cfg.flower_amplitude, cfg.flower_petals, cfg.image_width)
    g = io.read_nodal_csv(cfg.image_file, mesh.n_nodes)
    if g.min() < 0.0 or g.max() > 1.0:
        raise ValueError(f"image values must lie in [0, 1], found [{g.min()}, {g.max()}]")
    return g


def _initial(cfg: ExperimentConfig, mesh: Mesh, image=None):
    low = 0.0 if cfg.well == "shifted" else -1.0
    if cfg.initial == "flower":
        return flower_field(mesh, cfg.flower_base, cfg.flower_amplitude, cfg.flower_petals, low=low)
    if cfg.initial == "dumbbell":
        sd = dumbbell_distance(
            mesh, cfg.dumbbell_radius, cfg.dumbbell_center_distance, cfg.dumbbell_neck, cfg.dumbbell_fillet
        )
        return optimal_profile(sd, cfg.eps, cfg.well)
    if cfg.initial == "image":
        if image is None:
            raise ValueError("initial = image needs a reference image")
        return np.array(image, dtype=float)
    if cfg.initial == "zero":
        return np.full(mesh.n_nodes, low)
    return io.read_nodal_csv(cfg.initial_file, mesh.n_nodes)


def _cell_fields(mesh, graph, bands, u) -> dict:
    out = {}
    for name, band in bands.items():
        res = evaluate_penalty(u, mesh, graph, band, with_variation=False)
        labels = res.decomposition.labels
        out[f"interface_{name}"] = (labels >= 0).astype(np.int64)
        out[f"component_{name}"] = labels.astype(np.int64)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _mesh_info(cfg, out: Path) -> int:
    mesh = _mesh(cfg)
    info = {
        "kind": cfg.kind,
        "nodes": mesh.n_nodes,
        "elements": mesh.n_elements,
        "boundary_nodes": int(len(mesh.boundary_nodes)),
        "dual_edges": int(len(mesh.adjacency)),
        "min_diameter": float(mesh.element_diameter.min()),
        "max_diameter": float(mesh.element_diameter.max()),
        "area": float(mesh.area),
    }
    for key, value in info.items():
        print(f"{key}: {value}")
    _write_json(out / "summary.json", info)
    io.write_vtk(mesh, out / "mesh.vtk")
    return EXIT_STATIONARY


def _penalty_probe(cfg, out: Path) -> int:
    mesh = _mesh(cfg)
    graph = build_dual_graph(mesh, cfg.length_scale)
    u = io.read_nodal_csv(cfg.field_file, mesh.n_nodes)
    summary = {"kind": cfg.kind, "field_file": cfg.field_file, "bands": {}}
    for name, band in cfg.bands().items():
        res = evaluate_penalty(u, mesh, graph, band, with_variation=False)
        dec = res.decomposition
        entry = {
            "alpha": band.alpha,
            "beta": band.beta,
            "M": res.n_components,
            "masses": [] if dec.masses is None else dec.masses,
            "distances": [] if dec.distances is None else dec.distances,
            "cbar": res.energy,
            "penalty": res.scaled_energy,
        }
        summary["bands"][name] = entry
        print(f"[{name}] band [{band.alpha}, {band.beta}]: M = {entry['M']}")
        for j, w in enumerate(entry["masses"]):
            print(f"  W_{j} = {w:.6g}")
        m = res.n_components
        for i in range(m):
            for j in range(i + 1, m):
                print(f"  d_{i}{j} = {dec.distances[i, j]:.6g}")
        print(f"  C = {res.energy:.6g}  (weighted {res.scaled_energy:.6g})")
    _write_json(out / "summary.json", summary)
    io.write_vtk(mesh, out / "probe.vtk", {"u": u}, _cell_fields(mesh, graph, cfg.bands(), u))
    return EXIT_STATIONARY


def _flow_experiment(cfg: ExperimentConfig, out: Path) -> int:
    mesh = _mesh(cfg)
    ops = assemble_p1(mesh)
    graph = build_dual_graph(mesh, cfg.length_scale)
    params = cfg.model_params()
    bands = cfg.bands()
    image = None
    if cfg.kind == "segmentation":
        image = _image(cfg, mesh)
        model = SegmentationModel(mesh, ops, params, image)
    else:
        model = CurvatureFlowModel(mesh, ops, params)
    u0 = _initial(cfg, mesh, image)
    flow_cfg = cfg.flow_config()

    start = time.perf_counter()
    traj: Trajectory = run_flow(flow_cfg, model, u0, bands, graph=graph)
    elapsed = time.perf_counter() - start

    io.write_csv(traj.records, out / "energy.csv", LOG_COLUMNS)
    for step, field in zip(traj.snapshot_steps, traj.snapshots):
        io.write_vtk(mesh, out / f"snapshot_{step:07d}.vtk", {"u": field}, _cell_fields(mesh, graph, bands, field))
    point = {"u": traj.final}
    if image is not None:
        point["g"] = image
    io.write_vtk(mesh, out / "final.vtk", point, _cell_fields(mesh, graph, bands, traj.final))
    io.write_nodal_csv(traj.final, out / "final_u.csv", "u")

    last = traj.records[-1]
    counts = {name: traj.column(f"M_{name}").astype(int) for name in bands}
    level = 0.5 if cfg.well == "shifted" else 0.0
    summary = {
        "kind": cfg.kind,
        "stop_reason": traj.stop_reason,
        "stationary": traj.stationary,
        "steps": traj.steps,
        "time": traj.time,
        "wall_time": elapsed,
        "penalty_share": traj.penalty_share,
        "gradient_norm": traj.gradient_norm,
        "energy_upticks": traj.upticks,
        "final_energies": {k: last[k] for k in LOG_COLUMNS[3:14]},
        "component_counts": {
            name: {"initial": int(c[0]), "final": int(c[-1]), "max": int(c.max()), "min": int(c.min())}
            for name, c in counts.items()
        },
        "superlevel_components": superlevel_components(mesh, traj.final, level),
    }
    if cfg.kind == "segmentation" and cfg.compare_costs and cfg.image == "two-disks":
        ref = connection_costs(cfg.radius, cfg.center_distance, cfg.eta)
        x, y = mesh.nodes.T
        c = 0.5 * cfg.center_distance
        left = int(np.argmin((x + c) ** 2 + y**2))
        right = int(np.argmin((x - c) ** 2 + y**2))
        kept = [bool(traj.final[left] > 0.5), bool(traj.final[right] > 0.5)]
        pieces = summary["superlevel_components"]
        if all(kept) and pieces == 1:
            outcome = "bridge"
        elif sum(kept) == 1:
            outcome = "removal"
        else:
            outcome = "separate" if pieces > 1 else "other"
        summary["connection"] = {
            **ref,
            "cheaper": "bridge" if ref["bridge_cost"] < ref["removal_cost"] else "removal",
            "outcome": outcome,
            "disks_kept": kept,
            "final_perimeter": last["perimeter"],
            "final_fidelity": last["fidelity"],
        }
    _write_json(out / "summary.json", summary)
    print(
        f"{cfg.kind}: {traj.stop_reason} after {traj.steps} steps, total energy {last['total']:.6g}, "
        f"penalty share {100 * traj.penalty_share:.2f}%"
    )
    return EXIT_STATIONARY if traj.stationary else EXIT_MAX_STEPS


def run_experiment(cfg: ExperimentConfig, out_dir) -> int:
    """Run one configured experiment, writing every artifact into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.txt").write_text(cfg.to_text())
    if cfg.seed:
        np.random.seed(cfg.seed)
    if cfg.kind == "mesh-info":
        return _mesh_info(cfg, out)
    if cfg.kind == "penalty-probe":
        return _penalty_probe(cfg, out)
    return _flow_experiment(cfg, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simulate", description="Phase-field flows with a connectedness penalty.")
    parser.add_argument("config", help="plain-text key = value configuration file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set applied under the file")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config, args.preset)
        return run_experiment(cfg, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
    except FlowError as exc:
        print(f"flow failed: {exc}", file=sys.stderr)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
