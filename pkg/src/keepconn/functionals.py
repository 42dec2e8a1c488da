"""Phase-field energies on P1 elements and their exact discrete variations.

Nonlinear terms use the vertex quadrature rule, i.e. the lumped mass matrix, so
every returned variation is the true gradient of the returned discrete energy
with respect to nodal values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, P1Operators

SQRT2 = np.sqrt(2.0)

WELL_PROFILE_CONSTANTS = {
    # integral of sqrt(2 W) between the two wells
    "symmetric": 2.0 * SQRT2 / 3.0,
    "shifted": SQRT2 / 12.0,
}


@dataclass(frozen=True)
class ModelParams:
    """Parameters shared by all functionals.

    ``well`` selects ``W(u) = (u^2 - 1)^2 / 4`` ("symmetric", wells at +-1) or
    ``W(u) = u^2 (u - 1)^2 / 4`` ("shifted", wells at 0 and 1). ``c0`` defaults to
    the profile constant of the chosen well. ``sigma`` is the sign of the
    ``W'(u) / eps`` term inside the curvature residual.
    """

    eps: float
    lam: float = 0.0
    h0: float = 0.0
    eta: float = 0.0
    well: str = "symmetric"
    c0: float | None = None
    sigma: int = 1

    def __post_init__(self):
        if self.well not in WELL_PROFILE_CONSTANTS:
            raise ValueError(f"unknown well {self.well!r}; expected one of {sorted(WELL_PROFILE_CONSTANTS)}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.lam < 0:
            raise ValueError(f"area penalty weight must be nonnegative, got {self.lam}")
        if self.eta < 0:
            raise ValueError(f"fidelity weight must be nonnegative, got {self.eta}")
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        if self.c0 is None:
            object.__setattr__(self, "c0", WELL_PROFILE_CONSTANTS[self.well])


def double_well(u, variant: str = "symmetric"):
    """Return ``(W, W', W'')`` of the chosen double well."""
    u = np.asarray(u, dtype=float)
    if variant == "symmetric":
        q = u * u - 1.0
        out = (0.25 * q * q, u * q, 3.0 * u * u - 1.0)
    elif variant == "shifted":
        v = u - 1.0
        out = (0.25 * u * u * v * v, 0.5 * u * v * (2.0 * u - 1.0), 0.5 * (6.0 * u * u - 6.0 * u + 1.0))
    else:
        raise ValueError(f"unknown well {variant!r}")
    if u.ndim == 0:
        return tuple(float(x) for x in out)
    return out


def modica_mortola(u, ops: P1Operators, params: ModelParams):
    """Perimeter approximation ``(1/c0) int eps/2 |grad u|^2 + W(u)/eps`` and its variation."""
    u = np.asarray(u, dtype=float)
    W, dW, _ = double_well(u, params.well)
    Ku = ops.K @ u
    energy = (0.5 * params.eps * (u @ Ku) + (ops.lumped @ W) / params.eps) / params.c0
    grad = (params.eps * Ku + ops.lumped * dW / params.eps) / params.c0
    return float(energy), grad


def discrete_laplacian(u, ops: P1Operators) -> np.ndarray:
    """``-M_L^{-1} K u``; natural (Neumann) boundary behaviour."""
    return -(ops.K @ np.asarray(u, dtype=float)) / ops.lumped


def curvature_residual(u, ops: P1Operators, params: ModelParams) -> np.ndarray:
    """Nodal ``-eps lap(u) + sigma W'(u)/eps - H0 (1 - u^2)/sqrt(2)``."""
    u = np.asarray(u, dtype=float)
    _, dW, _ = double_well(u, "symmetric")
    return (
        -params.eps * discrete_laplacian(u, ops)
        + params.sigma * dW / params.eps
        - params.h0 * (1.0 - u * u) / SQRT2
    )


def bending_energy(u, ops: P1Operators, params: ModelParams):
    """Curvature-squared part ``(1/(c0 eps)) r^T M_L r`` alone, with its variation."""
    u = np.asarray(u, dtype=float)
    r = curvature_residual(u, ops, params)
    _, _, d2W = double_well(u, "symmetric")
    Mr = ops.lumped * r
    scale = 1.0 / (params.c0 * params.eps)
    energy = scale * (r @ Mr)
    # dr/du = eps M_L^{-1} K + diag(sigma W''/eps + sqrt(2) H0 u)
    local = params.sigma * d2W / params.eps + SQRT2 * params.h0 * u
    grad = 2.0 * scale * (params.eps * (ops.K @ r) + local * Mr)
    return float(energy), grad


def curvature_energy(u, ops: P1Operators, params: ModelParams):
    """Bending energy with spontaneous curvature plus ``lam`` times the perimeter term."""
    if params.well != "symmetric":
        raise ValueError("curvature energy is defined for the symmetric well")
    if params.lam < 0:
        raise ValueError(f"area penalty weight must be nonnegative, got {params.lam}")
    e_bend, g_bend = bending_energy(u, ops, params)
    if params.lam == 0.0:
        return e_bend, g_bend
    e_per, g_per = modica_mortola(u, ops, params)
    return e_bend + params.lam * e_per, g_bend + params.lam * g_per


def fidelity(u, g, ops: P1Operators, eta: float):
    """``eta (u - g)^T M (u - g)`` with the consistent mass matrix, and its gradient."""
    diff = np.asarray(u, dtype=float) - np.asarray(g, dtype=float)
    Md = ops.M @ diff
    return float(eta * (diff @ Md)), 2.0 * eta * Md


def segmentation_energy(u, g, ops: P1Operators, params: ModelParams):
    """Perimeter plus fidelity; the connectedness penalty is added by the flow."""
    e_per, g_per = modica_mortola(u, ops, params)
    e_fid, g_fid = fidelity(u, g, ops, params.eta)
    return e_per + e_fid, g_per + g_fid


# -- synthetic images and initial conditions ----------------------------------


def optimal_profile(signed_distance, eps: float, well: str = "symmetric"):
    """One-dimensional energy-optimal transition evaluated at a signed distance (positive inside)."""
    s = np.asarray(signed_distance, dtype=float)
    if well == "symmetric":
        return np.tanh(s / (SQRT2 * eps))
    if well == "shifted":
        return 0.5 * (1.0 + np.tanh(s / (2.0 * SQRT2 * eps)))
    raise ValueError(f"unknown well {well!r}")


def _domain_box(mesh: Mesh):
    return mesh.nodes.min(axis=0), mesh.nodes.max(axis=0)


def _check_inside(mesh: Mesh, lo_pt, hi_pt, what: str):
    lo, hi = _domain_box(mesh)
    if np.any(np.asarray(lo_pt) < lo - 1e-12) or np.any(np.asarray(hi_pt) > hi + 1e-12):
        raise ValueError(f"{what} does not fit in the domain [{lo}, {hi}]")


def two_disks_distance(mesh: Mesh, radius: float = 0.16, center_distance: float = 0.6) -> np.ndarray:
    """Signed distance (positive inside) to two disks centred at ``(+-center_distance/2, 0)``."""
    if radius <= 0 or center_distance < 2 * radius:
        raise ValueError(f"disks of radius {radius} at distance {center_distance} overlap or are empty")
    c = 0.5 * center_distance
    _check_inside(mesh, (-c - radius, -radius), (c + radius, radius), "two-disk image")
    x, y = mesh.nodes.T
    d_left = radius - np.hypot(x + c, y)
    d_right = radius - np.hypot(x - c, y)
    return np.maximum(d_left, d_right)


def two_disks_image(mesh: Mesh, radius: float = 0.16, center_distance: float = 0.6, width: float | None = None):
    """Nodal grey-value image in [0, 1]: sharp indicator, or tanh-smoothed with ``width``."""
    sd = two_disks_distance(mesh, radius, center_distance)
    if width is None:
        return (sd >= 0).astype(float)
    return 0.5 * (1.0 + np.tanh(sd / width))


def flower_radius(theta, base: float = 0.25, amplitude: float = 0.15, petals: int = 5):
    """Boundary radius of the flower ``{r < base + amplitude cos(petals theta)}``."""
    return base + amplitude * np.cos(petals * np.asarray(theta, dtype=float))


def flower_field(
    mesh: Mesh,
    base: float = 0.25,
    amplitude: float = 0.15,
    petals: int = 5,
    width: float | None = None,
    low: float = 0.0,
    high: float = 1.0,
) -> np.ndarray:
    """Indicator of the flower set mapped to ``{low, high}``; optional tanh smoothing in the radial level."""
    if base - abs(amplitude) < 0:
        raise ValueError("flower radius becomes negative")
    R = base + abs(amplitude)
    _check_inside(mesh, (-R, -R), (R, R), "flower")
    x, y = mesh.nodes.T
    level = flower_radius(np.arctan2(y, x), base, amplitude, petals) - np.hypot(x, y)
    if width is None:
        ind = (level > 0).astype(float)
    else:
        ind = 0.5 * (1.0 + np.tanh(level / width))
    return low + (high - low) * ind


def dumbbell_distance(
    mesh: Mesh,
    radius: float = 0.2,
    center_distance: float = 0.64,
    neck_halfwidth: float = 0.08,
    fillet: float = 0.05,
) -> np.ndarray:
    """Signed distance (positive inside) to two disks joined by a bar along the x-axis.

    ``fillet > 0`` rounds the concave corners where the bar meets the disks with
    a polynomial smooth maximum of that blending width; 0 gives the sharp union.
    """
    c = 0.5 * center_distance
    _check_inside(mesh, (-c - radius, -radius), (c + radius, radius), "dumbbell")
    if neck_halfwidth >= radius:
        raise ValueError("neck must be thinner than the disks")
    if fillet < 0:
        raise ValueError(f"fillet must be nonnegative, got {fillet}")
    x, y = mesh.nodes.T
    disks = np.maximum(radius - np.hypot(x + c, y), radius - np.hypot(x - c, y))
    bar = np.minimum(neck_halfwidth - np.abs(y), c - np.abs(x))
    if fillet == 0:
        return np.maximum(disks, bar)
    h = np.clip(0.5 + 0.5 * (disks - bar) / fillet, 0.0, 1.0)
    return bar + h * (disks - bar) + fillet * h * (1.0 - h)


def synthetic_image(mesh: Mesh, kind: str, **geometry) -> np.ndarray:
    """Dispatch to the named generator: ``two-disks``, ``flower`` or ``dumbbell``."""
    if kind == "two-disks":
        return two_disks_image(mesh, **geometry)
    if kind == "flower":
        return flower_field(mesh, **geometry)
    if kind == "dumbbell":
        eps = geometry.pop("eps", None)
        sd = dumbbell_distance(mesh, **geometry)
        return optimal_profile(sd, eps) if eps else np.where(sd > 0, 1.0, -1.0)
    raise ValueError(f"unknown synthetic image kind {kind!r}")
