import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from keepconn import (
    ModelParams,
    assemble_p1,
    bending_energy,
    build_square_mesh,
    build_unit_square_mesh,
    curvature_energy,
    curvature_residual,
    discrete_laplacian,
    double_well,
    fidelity,
    modica_mortola,
    optimal_profile,
    segmentation_energy,
    synthetic_image,
)
from keepconn.functionals import dumbbell_distance, flower_field, two_disks_distance, two_disks_image


def directional_check(energy, u, rng, n_dirs=5, h=1e-6):
    e0, g = energy(u)
    worst = 0.0
    for _ in range(n_dirs):
        v = rng.standard_normal(u.shape)
        fd = (energy(u + h * v)[0] - energy(u - h * v)[0]) / (2 * h)
        worst = max(worst, abs(fd - g @ v) / max(abs(g @ v), 1e-12))
    return worst


@pytest.mark.parametrize("well", ["symmetric", "shifted"])
def test_double_well_derivatives(well):
    s = np.linspace(-1.5, 1.5, 31)
    W, dW, d2W = double_well(s, well)
    h = 1e-6
    np.testing.assert_allclose(dW, (double_well(s + h, well)[0] - double_well(s - h, well)[0]) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(d2W, (double_well(s + h, well)[1] - double_well(s - h, well)[1]) / (2 * h), atol=1e-7)
    wells = (-1.0, 1.0) if well == "symmetric" else (0.0, 1.0)
    for w in wells:
        assert double_well(w, well)[:2] == (0.0, 0.0)
    assert np.all(W >= 0)


def test_unknown_well():
    with pytest.raises(ValueError):
        double_well(0.0, "triple")
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, well="triple")


@pytest.mark.parametrize(
    "kwargs", [{"eps": 0.0}, {"eps": 0.1, "lam": -1}, {"eps": 0.1, "eta": -1}, {"eps": 0.1, "sigma": 0}]
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_profile_constants():
    assert ModelParams(eps=0.1).c0 == pytest.approx(2 * np.sqrt(2) / 3)
    assert ModelParams(eps=0.1, well="shifted").c0 == pytest.approx(np.sqrt(2) / 12)
    assert ModelParams(eps=0.1, c0=1.0).c0 == 1.0


@pytest.mark.parametrize("well", ["symmetric", "shifted"])
def test_optimal_profile_solves_first_order_equation(well):
    # eps u' = sqrt(2 W(u)) along the signed distance
    eps = 0.05
    s = np.linspace(-0.3, 0.3, 2001)
    u = optimal_profile(s, eps, well)
    du = np.gradient(u, s)
    np.testing.assert_allclose(eps * du[1:-1], np.sqrt(2 * double_well(u, well)[0])[1:-1], atol=2e-5)
    with pytest.raises(ValueError):
        optimal_profile(s, eps, "triple")


def test_one_dimensional_profile_has_unit_perimeter():
    # a straight interface across the unit square has length 1
    mesh = build_unit_square_mesh(200)
    ops = assemble_p1(mesh)
    x, _ = mesh.nodes.T
    for well in ("symmetric", "shifted"):
        p = ModelParams(eps=0.02, well=well)
        e, _ = modica_mortola(optimal_profile(x, p.eps, well), ops, p)
        assert e == pytest.approx(1.0, rel=0.02)


def test_laplacian_of_linear_function_vanishes_inside(mesh16, ops16):
    x, y = mesh16.nodes.T
    lap = discrete_laplacian(2 * x - 3 * y + 1, ops16)
    inner = np.setdiff1d(np.arange(mesh16.n_nodes), mesh16.boundary_nodes)
    np.testing.assert_allclose(lap[inner], 0.0, atol=1e-10)


def test_laplacian_of_quadratic(mesh32, ops32):
    x, y = mesh32.nodes.T
    lap = discrete_laplacian(x**2 + y**2, ops32)
    inner = np.setdiff1d(np.arange(mesh32.n_nodes), mesh32.boundary_nodes)
    np.testing.assert_allclose(lap[inner], 4.0, rtol=1e-8)


def test_residual_vanishes_on_wells(ops16, mesh16):
    p = ModelParams(eps=0.1)
    for w in (-1.0, 1.0):
        np.testing.assert_allclose(curvature_residual(np.full(mesh16.n_nodes, w), ops16, p), 0.0, atol=1e-10)


def test_fidelity_values(mesh16, ops16):
    g = np.zeros(mesh16.n_nodes)
    e, grad = fidelity(np.ones(mesh16.n_nodes), g, ops16, 3.0)
    assert e == pytest.approx(3.0)
    assert grad.sum() == pytest.approx(6.0)
    assert fidelity(g, g, ops16, 3.0)[0] == 0.0


@given(st.integers(0, 2**31), st.sampled_from(["symmetric", "shifted"]), st.floats(0.02, 0.2))
def test_perimeter_gradient(seed, well, eps):
    mesh = build_unit_square_mesh(12)
    ops = assemble_p1(mesh)
    rng = np.random.default_rng(seed)
    p = ModelParams(eps=eps, well=well)
    u = rng.uniform(-1.2, 1.2, mesh.n_nodes)
    assert directional_check(lambda v: modica_mortola(v, ops, p), u, rng) < 1e-5


@given(st.integers(0, 2**31), st.floats(0, 8), st.floats(0, 1), st.sampled_from([1, -1]))
def test_curvature_gradient(seed, h0, lam, sigma):
    mesh = build_unit_square_mesh(12)
    ops = assemble_p1(mesh)
    rng = np.random.default_rng(seed)
    p = ModelParams(eps=0.1, h0=h0, lam=lam, sigma=sigma)
    u = rng.uniform(-1.2, 1.2, mesh.n_nodes)
    assert directional_check(lambda v: curvature_energy(v, ops, p), u, rng) < 1e-5


def test_curvature_needs_symmetric_well(ops16, mesh16):
    with pytest.raises(ValueError):
        curvature_energy(np.zeros(mesh16.n_nodes), ops16, ModelParams(eps=0.1, well="shifted"))


def test_bending_energy_is_nonnegative(ops16, mesh16, rng):
    p = ModelParams(eps=0.1, h0=3.0)
    assert bending_energy(rng.uniform(-1, 1, mesh16.n_nodes), ops16, p)[0] >= 0


def test_segmentation_energy_splits(mesh16, ops16, rng):
    p = ModelParams(eps=0.05, eta=2.0, well="shifted")
    u, g = rng.random(mesh16.n_nodes), rng.random(mesh16.n_nodes)
    e, grad = segmentation_energy(u, g, ops16, p)
    e1, g1 = modica_mortola(u, ops16, p)
    e2, g2 = fidelity(u, g, ops16, 2.0)
    assert e == pytest.approx(e1 + e2)
    np.testing.assert_allclose(grad, g1 + g2)
    assert directional_check(lambda v: segmentation_energy(v, g, ops16, p), u, rng) < 1e-5


def test_two_disks_geometry(mesh32):
    sd = two_disks_distance(mesh32, 0.16, 0.6)
    x, y = mesh32.nodes.T
    i = np.argmin((x - 0.3) ** 2 + y**2)
    assert sd[i] == pytest.approx(0.16 - np.hypot(x[i] - 0.3, y[i]), abs=1e-12)
    img = two_disks_image(mesh32, 0.16, 0.6)
    assert set(np.unique(img)) == {0.0, 1.0}
    smooth = two_disks_image(mesh32, 0.16, 0.6, width=0.02)
    assert 0 <= smooth.min() and smooth.max() <= 1
    assert np.any((smooth > 0.1) & (smooth < 0.9))
    with pytest.raises(ValueError):
        two_disks_distance(mesh32, 0.4, 0.6)
    with pytest.raises(ValueError, match="does not fit"):
        two_disks_distance(mesh32, 0.2, 0.7)


def test_flower_and_dumbbell(mesh32):
    f = flower_field(mesh32)
    assert set(np.unique(f)) == {0.0, 1.0}
    assert flower_field(mesh32, low=-1.0).min() == -1.0
    mesh = build_square_mesh(32, -0.7, 0.7)
    sharp = dumbbell_distance(mesh, fillet=0.0)
    smooth = dumbbell_distance(mesh)
    assert np.all(smooth >= sharp - 1e-12)
    x, y = mesh.nodes.T
    centre = np.argmin(x**2 + y**2)
    assert sharp[centre] == pytest.approx(0.08)
    with pytest.raises(ValueError):
        dumbbell_distance(mesh, neck_halfwidth=0.3)
    with pytest.raises(ValueError):
        dumbbell_distance(mesh, fillet=-1.0)


def test_synthetic_image_dispatch(mesh32):
    np.testing.assert_array_equal(synthetic_image(mesh32, "two-disks", radius=0.1), two_disks_image(mesh32, 0.1))
    with pytest.raises(ValueError):
        synthetic_image(mesh32, "teapot")
