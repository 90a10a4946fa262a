import dataclasses
import math

import numpy as np
import pytest

from nodaldiv import (
    MINUS, construct, convergence_sweep, generate_preset, run_all_checks,
    tolerance_schedule,
)
from nodaldiv.verify import (
    check_adaptedness_reduction, check_contact_condition, check_eigen_identity,
    check_nodal_set, check_positivity, check_potential_properties, seam_strip,
)


@pytest.fixture(scope="module")
def sphere():
    return generate_preset("sphere-equator", 0)


@pytest.fixture(scope="module")
def result(sphere):
    return construct(sphere)


@pytest.fixture(scope="module")
def torus_result():
    mesh = generate_preset("torus-two-meridians", 0)
    return construct(mesh)


def test_all_checks_pass_on_presets(result, torus_result):
    for res in (result, torus_result):
        report = run_all_checks(res, level=0)
        assert report.all_passed, [c.name for c in report.checks if not c.passed]


def test_nodal_set_two_circles(torus_result):
    rec = check_nodal_set(torus_result)
    assert rec.passed
    assert len(torus_result.mesh.collar_ids) == 2


def test_report_text_is_deterministic(result):
    a = run_all_checks(result, level=0).to_text()
    b = run_all_checks(result, level=0).to_text()
    assert a == b
    assert "check.nodal_set.pass = true" in a
    assert "check.eigen_identity.tol" in a
    assert "min_Omega" in a


def test_tolerance_schedule():
    assert math.isclose(tolerance_schedule(0), 0.2)
    assert math.isclose(tolerance_schedule(1), 0.1)
    assert math.isclose(tolerance_schedule(2), 0.05)


def test_eigen_identity_extras(result):
    rec, extras = check_eigen_identity(result, level=0)
    assert rec.passed
    assert extras["density"].shape == (result.mesh.n_vertices,)
    assert extras["seam_worst"] > 0.0
    assert extras["interior_residual"] <= rec.value * 1.001


def test_seam_strip_contains_both_sides(sphere):
    strip = seam_strip(sphere)
    s = sphere.collar_s
    assert np.all(strip[np.isfinite(s) & (np.abs(s) == 1.0)])
    assert strip.sum() > 2 * 16  # seam rings plus neighbors


# -- fault injections: each check fails on its documented minimal tamper -----


def test_fault_nodal_sign_flip(result):
    u = result.eigenfunction.copy()
    v = int(result.mesh.side_vertices(MINUS)[0])
    u[v] = -u[v]
    rec = check_nodal_set(dataclasses.replace(result, eigenfunction=u))
    assert not rec.passed and rec.worst_element == v


def test_fault_nodal_gamma_nonzero(result):
    u = result.eigenfunction.copy()
    v = int(result.mesh.gamma_vertices[0])
    u[v] = 1e-8
    rec = check_nodal_set(dataclasses.replace(result, eigenfunction=u))
    assert not rec.passed and rec.worst_element == v


def test_fault_positivity_zeroed_face(result):
    area = result.eigen_area.copy()
    area[10] = 0.0
    rec = check_positivity(dataclasses.replace(result, eigen_area=area))
    assert not rec.passed and rec.worst_element == 10


def test_positivity_survives_without_gradient_term(result):
    """On minus-region faces the quotient term alone keeps the area form
    positive (the construction is strictly subharmonic there)."""
    mesh = result.mesh
    from nodaldiv import dec
    bundle = dec.OperatorBundle.build(mesh)
    gradsq = dec.grad_norm_sq(
        mesh, dec.Cochain(0, result.potential), bundle.ref_area
    ).values
    quotient = result.eigen_area / result.ref_area - gradsq
    minus_faces = mesh.face_region == MINUS
    assert np.all(quotient[minus_faces] > 0.0)


def test_fault_contact_zeroed_vertex(result):
    # zero u on a piece-interior vertex and its 1-ring: both terms of
    # u^2 + |du|^2 vanish there
    mesh = result.mesh
    strip = seam_strip(mesh)
    interior = [
        v for v in mesh.region_vertices(MINUS)
        if not strip[v] and not np.isfinite(mesh.collar_s[v])
    ]
    v = int(interior[0])
    u = result.eigenfunction.copy()
    u[v] = 0.0
    for a, b in mesh.edges:
        if a == v:
            u[b] = 0.0
        elif b == v:
            u[a] = 0.0
    rec = check_contact_condition(dataclasses.replace(result, eigenfunction=u))
    assert not rec.passed


def test_fault_eigen_constant(result):
    u = np.ones(result.mesh.n_vertices)
    rec, _ = check_eigen_identity(dataclasses.replace(result, eigenfunction=u))
    assert not rec.passed
    assert math.isclose(rec.value, 1.0, rel_tol=1e-9)


def test_fault_potential_bound(result):
    rescaled = dataclasses.replace(result, potential=1.5 * result.potential)
    records = {r.name: r for r in check_potential_properties(rescaled)}
    assert not records["potential_bound"].passed
    # only the bound breaks among the sign-pattern family
    assert records["potential_signs"].passed
    assert records["subharmonic_minus"].passed
    assert records["superharmonic_plus"].passed


def test_fault_unmirrored_plus_side(result):
    # removing the mirroring makes the plus side subharmonic instead of
    # superharmonic, breaking the mirrored inequality
    mesh = result.mesh
    F = result.potential.copy()
    plus = mesh.side_vertices(2)
    F[plus] = -np.abs(F[plus])
    broken = dataclasses.replace(result, potential=F)
    records = {r.name: r for r in check_potential_properties(broken)}
    assert not records["superharmonic_plus"].passed


def test_fault_collar_normal_form(result):
    F = result.potential.copy()
    mesh = result.mesh
    eps = result.params.linear_halfwidth
    on_linear = np.flatnonzero(
        np.isfinite(mesh.collar_s) & (np.abs(mesh.collar_s) <= eps)
        & (mesh.collar_s != 0.0)
    )
    F[on_linear[0]] *= 1.0 + 1e-9
    broken = dataclasses.replace(result, potential=F)
    records = {r.name: r for r in check_potential_properties(broken)}
    assert not records["collar_normal_form"].passed


def test_fault_adaptedness_inconsistent_potential(result):
    mesh = result.mesh
    strip = seam_strip(mesh)
    interior = [
        v for v in mesh.region_vertices(MINUS)
        if not strip[v] and not np.isfinite(mesh.collar_s[v])
    ]
    F = result.potential.copy()
    F[int(interior[0])] += 0.5
    rec = check_adaptedness_reduction(
        dataclasses.replace(result, potential=F),
        sample_count=mesh.n_faces,
    )
    assert not rec.passed


def test_adaptedness_collar_closed_form():
    """The star table is exact once the continuum collar forms are
    substituted: with u = sin(Cs), Omega = C^2 ds dt and
    du o j = -C cos(Cs) dt, the components coincide identically."""
    C = 1.7
    for s in (-0.2, 0.0, 0.31):
        u = math.sin(C * s)
        du = (C * math.cos(C * s), 0.0)          # (ds, dt) components
        du_j = (0.0, -C * math.cos(C * s))       # ds o j = -dt
        lam = C * C                              # Omega / (ds ^ dt)
        sq = math.sqrt(lam)
        # orthonormal coframe components of star(alpha) and d(alpha)
        star = (u, du_j[0] / sq, du_j[1] / sq)
        # d(du o j) = C^2 sin(Cs) ds^dt = u * Omega
        d_alpha = (C * C * u / lam, du[1] / sq, -du[0] / sq)
        assert all(abs(a - b) <= 1e-12 for a, b in zip(star, d_alpha))


def test_convergence_sweep_rows_and_records():
    rows, records = convergence_sweep("sphere-equator", [0, 1])
    assert [r["level"] for r in rows] == [0, 1]
    assert rows[1]["h"] == rows[0]["h"] / 2.0
    assert rows[1]["eigen_residual"] < rows[0]["eigen_residual"]
    names = {r.name for r in records}
    assert names == {"sweep_monotone", "sweep_floor_min_Omega",
                     "sweep_floor_min_contact"}
    assert all(r.passed for r in records)


def test_convergence_sweep_single_level_vacuous():
    rows, records = convergence_sweep("sphere-equator", [0])
    assert len(rows) == 1 and records == []
