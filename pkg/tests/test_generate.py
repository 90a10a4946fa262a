import numpy as np
import pytest

from nodaldiv import (
    MeshError, SurfaceSpec, build_from_spec, disk_mesh, flat_torus_mesh,
    generate_preset, round_sphere_mesh,
)


@pytest.mark.parametrize("name,chi,n_circles", [
    ("sphere-equator", 2, 1),
    ("sphere-two-circles", 2, 2),
    ("torus-two-meridians", 0, 2),
    ("genus2-separating", -2, 1),
])
def test_preset_topology(name, chi, n_circles):
    mesh = generate_preset(name, 0)
    assert mesh.euler_characteristic() == chi
    assert len(mesh.collar_ids) == n_circles


def test_sphere_equator_pieces_are_disks():
    chis = generate_preset("sphere-equator", 0).region_euler_characteristics()
    assert chis["minus"] == [1] and chis["plus"] == [1]


def test_torus_pieces_are_annuli():
    chis = generate_preset("torus-two-meridians", 0).region_euler_characteristics()
    assert chis["minus"] == [0] and chis["plus"] == [0]


def test_genus2_pieces():
    chis = generate_preset("genus2-separating", 1).region_euler_characteristics()
    assert chis["minus"] == [-1] and chis["plus"] == [-1]


def test_vertex_count_scales_by_four():
    n0 = generate_preset("sphere-equator", 0).n_vertices
    n1 = generate_preset("sphere-equator", 1).n_vertices
    assert 3.5 < n1 / n0 < 4.5


def test_determinism():
    a = generate_preset("torus-two-meridians", 0)
    b = generate_preset("torus-two-meridians", 0)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.faces, b.faces)
    assert np.array_equal(a.edge_lengths, b.edge_lengths)
    assert np.array_equal(a.collar_s, b.collar_s, equal_nan=True)


def test_unknown_preset_and_level_cap():
    with pytest.raises(MeshError, match="unknown preset"):
        generate_preset("klein-bottle", 0)
    with pytest.raises(MeshError, match="maximum"):
        generate_preset("sphere-equator", 7)


def test_spec_sphere_two_circles_chi_by_direct_count():
    # annulus on the minus side, two disks on the plus side
    spec = SurfaceSpec(
        minus_components=[(0, ("c1", "c2"))],
        plus_components=[(0, ("c1",)), (0, ("c2",))],
        circle_counts={"c1": 16, "c2": 16},
    )
    mesh = build_from_spec(spec)
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_faces
    assert chi == 2
    chis = mesh.region_euler_characteristics()
    assert chis["minus"] == [0] and sorted(chis["plus"]) == [1, 1]


def test_spec_genus_gluing_formula():
    spec = SurfaceSpec(
        minus_components=[(1, ("c1",))],
        plus_components=[(1, ("c1",))],
        circle_counts={"c1": 16},
    )
    assert build_from_spec(spec).euler_characteristic() == -2


def test_spec_pants_and_composition():
    spec = SurfaceSpec(
        minus_components=[(0, ("a", "b", "c"))],
        plus_components=[(0, ("a",)), (0, ("b",)), (0, ("c",))],
        circle_counts={"a": 16, "b": 12, "c": 10},
    )
    mesh = build_from_spec(spec)
    assert mesh.euler_characteristic() == 2
    assert mesh.region_euler_characteristics()["minus"] == [-1]


def test_spec_higher_genus_and_multi_boundary():
    spec = SurfaceSpec(
        minus_components=[(2, ("a",))],
        plus_components=[(0, ("a",))],
        circle_counts={"a": 16},
    )
    assert build_from_spec(spec).euler_characteristic() == -4 + 2

    spec = SurfaceSpec(
        minus_components=[(1, ("a", "b"))],
        plus_components=[(0, ("a",)), (0, ("b",))],
        circle_counts={"a": 16, "b": 16},
    )
    mesh = build_from_spec(spec)
    assert mesh.region_euler_characteristics()["minus"] == [-2]


def test_spec_validation_errors():
    with pytest.raises(MeshError, match="pairing"):
        SurfaceSpec(
            minus_components=[(0, ("a",))],
            plus_components=[(0, ("b",))],
            circle_counts={"a": 16, "b": 16},
        ).validate()
    with pytest.raises(MeshError, match="at least 8"):
        SurfaceSpec(
            minus_components=[(0, ("a",))],
            plus_components=[(0, ("a",))],
            circle_counts={"a": 6},
        ).validate()
    with pytest.raises(MeshError, match="no boundary"):
        SurfaceSpec(
            minus_components=[(0, ())],
            plus_components=[(0, ("a",))],
            circle_counts={"a": 16},
        ).validate()
    with pytest.raises(MeshError, match="twice"):
        SurfaceSpec(
            minus_components=[(0, ("a", "a"))],
            plus_components=[(0, ("a",))],
            circle_counts={"a": 16},
        ).validate()


def test_flat_torus_mesh():
    mesh = flat_torus_mesh(8)
    mesh.validate()
    assert mesh.euler_characteristic() == 0
    h = 1.0 / 8
    expected = {round(h, 15), round(np.sqrt(2) * h, 15)}
    assert {round(float(L), 15) for L in mesh.edge_lengths} == expected


def test_round_sphere_mesh():
    mesh = round_sphere_mesh(0, radius=2.0)
    mesh.validate()
    assert mesh.euler_characteristic() == 2
    radii = np.linalg.norm(mesh.vertices, axis=1)
    assert np.allclose(radii, 2.0, rtol=1e-12)


def test_disk_mesh_boundary():
    mesh = disk_mesh(24, 6, radius=1.0)
    boundary = mesh.boundary_vertices()
    assert len(boundary) == 24
    assert np.allclose(
        np.linalg.norm(mesh.vertices[boundary, :2], axis=1), 1.0, rtol=1e-12
    )
