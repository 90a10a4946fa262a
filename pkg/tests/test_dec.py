import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nodaldiv import (
    COLLAR, Cochain, MeshError, assemble_pencil, d, eigen_residual,
    flat_torus_mesh, generate_preset, grad_norm_sq, mass_matrix,
    reference_area, rotate_j, rotate_j_dual, round_sphere_mesh,
    stiffness_matrix,
)
from nodaldiv.dec import (
    d0_matrix, d1_matrix, dual_laplacian_route, hodge1_weights, residual_density,
)


@pytest.fixture(scope="module")
def sphere():
    return generate_preset("sphere-equator", 0)


@pytest.fixture(scope="module")
def collar(sphere):
    sub, used = sphere.submesh(sphere.face_region == COLLAR)
    return sub, sphere.collar_s[used]


def test_d_of_constant_is_zero(sphere):
    out = d(sphere, Cochain(0, np.ones(sphere.n_vertices)))
    assert np.all(out.values == 0.0)


def test_dd_zero_exactly_as_matrices(sphere):
    prod = d1_matrix(sphere) @ d0_matrix(sphere)
    prod.eliminate_zeros()
    assert prod.nnz == 0


def test_dd_on_cochains_is_roundoff_only(sphere):
    rng = np.random.default_rng(3)
    u = Cochain(0, rng.normal(size=sphere.n_vertices))
    ddu = d(sphere, d(sphere, u))
    assert np.max(np.abs(ddu.values)) < 1e-14 * np.max(np.abs(u.values))


def test_d_of_primal_2_cochain_rejected(sphere):
    with pytest.raises(ValueError, match="not defined"):
        d(sphere, Cochain(2, np.zeros(sphere.n_faces)))


def test_edge_value_orientation_flip(sphere):
    rng = np.random.default_rng(0)
    c = Cochain(1, rng.normal(size=sphere.n_edges))
    a, b = map(int, sphere.edges[7])
    assert c.on_edge(sphere, a, b) == -c.on_edge(sphere, b, a)


def test_collar_rotation_convention(collar):
    """Normative sign test: on the flat collar, rotate_j(d s) equals the
    dual 1-cochain of -dt (the dual edge of an s-edge points in +t), and
    rotate_j(dt) equals the dual 1-cochain of ds."""
    sub, s = collar
    spacing = float(np.min(np.abs(np.diff(np.unique(s)))))
    ds = d(sub, Cochain(0, s))
    rot = rotate_j(sub, ds)
    w = hodge1_weights(sub)
    t_edges = np.array([s[a] == s[b] for a, b in sub.edges])
    t_edge = float(sub.edge_lengths[t_edges][0])
    is_s_edge = (np.abs(ds.values) > 0) & (np.abs(sub.edge_lengths - spacing) < 1e-14)
    is_diag = ~t_edges & ~is_s_edge
    assert is_s_edge.any() and t_edges.any() and is_diag.any()
    expected_s = -t_edge * np.sign(ds.values[is_s_edge])
    assert np.max(np.abs(rot.values[is_s_edge] - expected_s)) < 1e-13
    assert np.all(rot.values[t_edges] == 0.0)
    # diagonals of the right-triangle pairs carry zero cotangent weight up
    # to one rounding of the squared hypotenuse
    assert np.max(np.abs(w[is_diag])) < 1e-14
    assert np.max(np.abs(rot.values[is_diag])) < 1e-14
    # dt as a 1-cochain from the cylinder angles (positions are a cylinder)
    ang = np.arctan2(sub.vertices[:, 1], sub.vertices[:, 0])
    radius = float(np.hypot(sub.vertices[0, 0], sub.vertices[0, 1]))
    dang = ang[sub.edges[:, 1]] - ang[sub.edges[:, 0]]
    dang = (dang + math.pi) % (2 * math.pi) - math.pi
    dt = Cochain(1, radius * dang)
    rot_dt = rotate_j(sub, dt)
    # dual edge of an interior t-edge points in -s, where ds integrates to
    # -spacing (boundary-ring edges carry only half the cotangent weight)
    t_int = t_edges & (sub.edge_face_count == 2)
    expected_t = -spacing * np.sign(dt.values[t_int])
    assert np.max(np.abs(rot_dt.values[t_int] - expected_t)) < 1e-12
    assert np.all(rot_dt.values[is_s_edge] == 0.0)


def test_j_squared_is_minus_one():
    mesh = round_sphere_mesh(0)
    rng = np.random.default_rng(1)
    c = Cochain(1, rng.normal(size=mesh.n_edges))
    w = hodge1_weights(mesh)
    assert np.all(w != 0.0)  # near-equilateral, no degenerate duals
    back = rotate_j_dual(mesh, rotate_j(mesh, c))
    assert np.max(np.abs(back.values + c.values)) < 1e-13 * np.max(np.abs(c.values))


def test_dual_route_equals_stiffness_exactly(sphere):
    K = stiffness_matrix(sphere)
    route = dual_laplacian_route(sphere)
    diff = K - route
    diff.eliminate_zeros()
    assert diff.nnz == 0


def test_dual_cell_identity_on_cochains(sphere):
    rng = np.random.default_rng(5)
    u = rng.normal(size=sphere.n_vertices)
    du = d(sphere, Cochain(0, u))
    cell = d(sphere, rotate_j(sphere, du))
    K = stiffness_matrix(sphere)
    assert np.max(np.abs(-cell.values - (-(K @ u)))) < 1e-12 * np.max(np.abs(K @ u))


def test_stiffness_kernel_is_constants(sphere):
    K = stiffness_matrix(sphere)
    ones = np.ones(sphere.n_vertices)
    assert np.max(np.abs(K @ ones)) < 1e-12 * np.max(np.abs(K.data))


def test_mass_row_sums_equal_total_area(sphere):
    area = reference_area(sphere)
    M = mass_matrix(sphere, area)
    assert math.isclose(M.diagonal().sum(), area.values.sum(), rel_tol=1e-13)


def test_mass_requires_positive_area(sphere):
    area = reference_area(sphere)
    area.values[3] = -area.values[3]
    with pytest.raises(MeshError, match="face 3"):
        assemble_pencil(sphere, area)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_pencil_symmetry(seed):
    mesh = generate_preset("sphere-equator", 0)
    K = stiffness_matrix(mesh)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=mesh.n_vertices)
    w = rng.normal(size=mesh.n_vertices)
    a, b = float(u @ (K @ w)), float(w @ (K @ u))
    assert abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1.0)


@pytest.mark.parametrize("factor", [2.0, 1.7])
def test_conformal_invariance(sphere, factor):
    scaled = generate_preset("sphere-equator", 0)
    scaled.edge_lengths = scaled.edge_lengths * factor
    w0 = hodge1_weights(sphere)
    w1 = hodge1_weights(scaled)
    if factor == 2.0:
        assert np.array_equal(w0, w1)  # power of two: bitwise
    else:
        assert np.max(np.abs(w0 - w1)) < 1e-13 * np.max(np.abs(w0))


def test_flat_torus_smallest_eigenvalue():
    mesh = flat_torus_mesh(16)
    K, M = assemble_pencil(mesh, reference_area(mesh))
    evals = scipy.linalg.eigh(
        K.toarray(), M.toarray(), eigvals_only=True, subset_by_index=[0, 2]
    )
    target = 4.0 * math.pi ** 2
    assert abs(evals[1] - target) < 0.05 * target


def test_eigen_residual_trivial_cases(sphere):
    K, M = assemble_pencil(sphere, reference_area(sphere))
    ones = np.ones(sphere.n_vertices)
    assert eigen_residual(K, M, ones, 0.0) < 1e-12
    assert math.isclose(eigen_residual(K, M, ones, 1.0), 1.0, rel_tol=1e-12)
    with pytest.raises(ValueError, match="zero"):
        eigen_residual(K, M, np.zeros(sphere.n_vertices), 1.0)


def test_sphere_harmonic_residual_second_order():
    values = []
    for level in range(2):
        mesh = round_sphere_mesh(level)
        K, M = assemble_pencil(mesh, reference_area(mesh))
        values.append(eigen_residual(K, M, mesh.vertices[:, 2], 1.0))
    rate = math.log2(values[0] / values[1])
    assert 1.7 <= rate <= 2.3


def test_grad_norm_sq_collar_closed_form(collar):
    sub, s = collar
    C = 1.3
    u = Cochain(0, np.sin(C * s))
    area = reference_area(sub)
    g = grad_norm_sq(sub, u, area)
    spacing = float(np.min(np.abs(np.diff(np.unique(s)))))
    svals = s[sub.faces]
    ds_span = svals.max(axis=1) - svals.min(axis=1)
    sbar = svals.mean(axis=1)
    varying = ds_span > 0
    # exact piecewise-linear value
    lo = svals.min(axis=1)[varying]
    hi = svals.max(axis=1)[varying]
    exact = ((np.sin(C * hi) - np.sin(C * lo)) / spacing) ** 2
    assert np.max(np.abs(g.values[varying] - exact)) < 1e-12 * C * C
    # approximate closed form C^2 cos^2(C sbar): the face mean sbar sits
    # spacing/6 away from the difference-quotient midpoint, so the band is
    # first order with slope bounded by C^3
    approx = C * C * np.cos(C * sbar[varying]) ** 2
    assert np.max(np.abs(g.values[varying] - approx)) < 0.3 * C ** 3 * spacing


def test_grad_norm_sq_trivial_and_scaling(sphere):
    area = reference_area(sphere)
    const = grad_norm_sq(sphere, Cochain(0, np.ones(sphere.n_vertices)), area)
    assert np.all(const.values == 0.0)
    rng = np.random.default_rng(2)
    u = Cochain(0, rng.normal(size=sphere.n_vertices))
    g1 = grad_norm_sq(sphere, u, area)
    g4 = grad_norm_sq(sphere, u, Cochain(2, 4.0 * area.values))
    assert np.allclose(g4.values, g1.values / 4.0, rtol=1e-13, atol=0)


def test_residual_density_shape(sphere):
    K, M = assemble_pencil(sphere, reference_area(sphere))
    rho = residual_density(K, M, np.ones(sphere.n_vertices), 1.0)
    assert rho.shape == (sphere.n_vertices,)
    assert np.allclose(rho, -1.0, rtol=1e-10)
