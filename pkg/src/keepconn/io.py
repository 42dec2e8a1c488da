"""Plain-text outputs: legacy VTK meshes with point/cell data, CSV energy logs, nodal CSV fields."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .mesh import Mesh

VTK_TRIANGLE = 5


def _fmt(x: float) -> str:
    return repr(float(x))


def write_vtk(mesh: Mesh, path, point_data=None, cell_data=None, title: str = "keepconn") -> Path:
    """Write an ASCII legacy VTK (version 3.0) unstructured grid of triangles.

    ``point_data`` / ``cell_data`` map names to per-node / per-triangle arrays.
    Integer arrays are written as ``int``, everything else as ``double``.
    """
    path = Path(path)
    point_data = dict(point_data or {})
    cell_data = dict(cell_data or {})
    for name, arr in point_data.items():
        if len(arr) != mesh.n_nodes:
            raise ValueError(f"point field {name!r} has {len(arr)} values, mesh has {mesh.n_nodes} nodes")
    for name, arr in cell_data.items():
        if len(arr) != mesh.n_elements:
            raise ValueError(f"cell field {name!r} has {len(arr)} values, mesh has {mesh.n_elements} cells")

    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " "), "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_nodes} double")
    lines.extend(f"{_fmt(x)} {_fmt(y)} 0.0" for x, y in mesh.nodes)
    lines.append(f"CELLS {mesh.n_elements} {4 * mesh.n_elements}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.triangles)
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines.extend([str(VTK_TRIANGLE)] * mesh.n_elements)

    def block(header, count, fields):
        if not fields:
            return
        lines.append(f"{header} {count}")
        for name, arr in fields.items():
            arr = np.asarray(arr)
            if np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
                lines.append(f"SCALARS {name} int 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(str(int(v)) for v in arr)
            else:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(_fmt(v) for v in arr)

    block("POINT_DATA", mesh.n_nodes, point_data)
    block("CELL_DATA", mesh.n_elements, cell_data)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
    return path


def write_csv(records, path, columns=None) -> Path:
    """Write a list of dict rows with a stable header (``columns`` or the first row's key order)."""
    path = Path(path)
    records = list(records)
    if columns is None:
        columns = list(records[0].keys()) if records else []
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for rec in records:
                writer.writerow([_csv_value(rec.get(c, "")) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write CSV file {path}: {exc}") from exc
    return path


def _csv_value(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path) -> list[dict]:
    """Read a log written by :func:`write_csv`; numeric cells are converted back to int/float."""
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: _parse_number(v) for k, v in row.items()})
    return rows


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_nodal_csv(values, path, name: str = "value") -> Path:
    """One value per line after a single header line."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(name + "\n")
        for v in np.asarray(values, dtype=float):
            fh.write(_fmt(v) + "\n")
    return path


def read_nodal_csv(path, n_nodes: int | None = None) -> np.ndarray:
    """Read a nodal field: one number per line, optional non-numeric header, '#' comments skipped.

    A file with several comma-separated columns uses the last column.
    """
    values = []
    with Path(path).open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            cell = line.split(",")[-1].strip()
            try:
                values.append(float(cell))
            except ValueError:
                if values:
                    raise ValueError(f"{path}:{lineno}: cannot parse {cell!r} as a number") from None
    arr = np.array(values)
    if n_nodes is not None and len(arr) != n_nodes:
        raise ValueError(f"{path}: expected {n_nodes} nodal values, found {len(arr)}")
    return arr
