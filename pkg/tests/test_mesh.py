import numpy as np
import pytest

from nodaldiv import (
    COLLAR, MINUS, PLUS, MeshError, TriMesh, generate_preset, swap_regions,
)


@pytest.fixture(scope="module")
def sphere():
    return generate_preset("sphere-equator", 0)


def test_closed_manifold_and_orientation(sphere):
    sphere.validate()
    assert sphere.is_closed()
    assert np.all(sphere.edge_face_count == 2)


def test_euler_characteristic_additivity(sphere):
    chis = sphere.region_euler_characteristics()
    assert sum(chis["minus"]) + sum(chis["plus"]) == sphere.euler_characteristic()


def test_triangle_inequality_strict(sphere):
    L = sphere.edge_lengths[sphere.face_edges]
    assert np.all(L.sum(axis=1) - 2 * L.max(axis=1) > 0)


def test_collar_is_flat_product(sphere):
    info = sphere.collar_info("c0")
    assert info.ring_s[0] == -1.0 and info.ring_s[-1] == 1.0
    assert np.allclose(np.diff(info.ring_s), info.spacing, rtol=0, atol=1e-15)
    ds, dt = info.spacing, info.t_edge
    expect = np.sort([ds, dt, float(np.hypot(ds, dt))])
    faces = np.flatnonzero(sphere.face_region == COLLAR)
    lens = np.sort(sphere.edge_lengths[sphere.face_edges[faces]], axis=1)
    assert np.max(np.abs(lens - expect) / max(ds, dt)) < 1e-12


def test_gamma_is_exact_zero_set(sphere):
    zero = np.flatnonzero(sphere.collar_s == 0.0)
    assert np.array_equal(np.sort(zero), sphere.gamma_vertices)


def test_side_vertices_partition(sphere):
    minus = set(map(int, sphere.side_vertices(MINUS)))
    plus = set(map(int, sphere.side_vertices(PLUS)))
    gamma = set(map(int, sphere.gamma_vertices))
    assert not minus & plus
    assert not (minus | plus) & gamma
    assert len(minus | plus | gamma) == sphere.n_vertices


def test_edge_index_signs(sphere):
    a, b = map(int, sphere.edges[10])
    idx, sign = sphere.edge_index(a, b)
    assert idx == 10 and sign == 1
    idx, sign = sphere.edge_index(b, a)
    assert idx == 10 and sign == -1
    with pytest.raises(MeshError):
        sphere.edge_index(0, 0)


def test_boundary_detection_open_mesh():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    faces = np.array([[0, 1, 2], [1, 3, 2]])
    lengths = np.ones(5)
    mesh = TriMesh(verts, faces, lengths)
    with pytest.raises(MeshError, match="closed"):
        mesh.validate(require_closed=True)
    loops = mesh.boundary_loops()
    assert len(loops) == 1 and len(loops[0]) == 4


def test_inconsistent_orientation_rejected():
    verts = np.zeros((4, 3))
    faces = np.array([[0, 1, 2], [1, 2, 3]])  # edge (1,2) traversed twice same way
    mesh = TriMesh(verts, faces, np.ones(5))
    with pytest.raises(MeshError, match="orientation"):
        mesh.validate(require_closed=False)


def test_submesh_preserves_lengths(sphere):
    sub, used = sphere.submesh(sphere.face_region == MINUS)
    for i, (a, b) in enumerate(sub.edges[:25]):
        idx, _ = sphere.edge_index(int(used[a]), int(used[b]))
        assert sub.edge_lengths[i] == sphere.edge_lengths[idx]


def test_swap_regions_flips_sides(sphere):
    swapped = swap_regions(sphere)
    swapped.validate()
    assert np.array_equal(
        swapped.face_region == MINUS, sphere.face_region == PLUS
    )
    finite = np.isfinite(sphere.collar_s)
    assert np.array_equal(swapped.collar_s[finite], -sphere.collar_s[finite])
    assert np.array_equal(swapped.gamma_vertices, sphere.gamma_vertices)
