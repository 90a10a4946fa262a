import numpy as np
import pytest

from nodaldiv import generate_preset, load_field, load_mesh, save_field, save_mesh
from nodaldiv.meshio import FileFormatError


@pytest.fixture(scope="module")
def sphere():
    return generate_preset("sphere-equator", 0)


def test_mesh_round_trip_identity(tmp_path, sphere):
    path = tmp_path / "mesh.off"
    save_mesh(sphere, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, sphere.vertices)
    assert np.array_equal(back.faces, sphere.faces)
    assert np.array_equal(back.edge_lengths, sphere.edge_lengths)
    assert np.array_equal(back.face_region, sphere.face_region)
    assert np.array_equal(back.face_collar, sphere.face_collar)
    assert back.collar_ids == sphere.collar_ids
    assert np.array_equal(back.collar_s, sphere.collar_s, equal_nan=True)
    assert np.array_equal(back.gamma_vertices, sphere.gamma_vertices)


def test_save_bytes_deterministic(tmp_path, sphere):
    p1, p2 = tmp_path / "a.off", tmp_path / "b.off"
    save_mesh(sphere, p1)
    save_mesh(generate_preset("sphere-equator", 0), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_open_mesh_rejected(tmp_path, sphere):
    path = tmp_path / "mesh.off"
    save_mesh(sphere, path)
    lines = path.read_text().splitlines()
    counts = lines[1].split()
    nv, nf = int(counts[0]), int(counts[1])
    # drop the last face and its label to open the surface
    del lines[2 + nv + nf - 1]
    label_start = lines.index("#LABELS")
    del lines[label_start + nf]
    lines[1] = f"{nv} {nf - 1} {counts[2]}"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(Exception, match="closed manifold"):
        load_mesh(path)


def test_non_monotone_collar_rejected(tmp_path, sphere):
    path = tmp_path / "mesh.off"
    save_mesh(sphere, path)
    lines = path.read_text().splitlines()
    # shift the whole s = -1 ring so the coordinate no longer spans [-1, 1]
    start = lines.index("#COLLAR_S") + 1
    for k in range(start, len(lines)):
        if lines[k].startswith("#"):
            break
        idx, val = lines[k].split()
        if float(val) == -1.0:
            lines[k] = f"{idx} -1.5"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(Exception, match="not monotone"):
        load_mesh(path)


def test_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0\n")
    with pytest.raises(FileFormatError, match="bad.off:4"):
        load_mesh(path)


def test_vertex_field_round_trip(tmp_path):
    values = np.array([0.0, -1.5, 2.25, 1e-17])
    path = tmp_path / "field.txt"
    save_field(values, path)
    back, on_faces = load_field(path)
    assert not on_faces
    assert np.array_equal(back, values)


def test_face_field_round_trip(tmp_path):
    values = np.linspace(-1, 1, 7)
    path = tmp_path / "field.txt"
    save_field(values, path, on_faces=True)
    back, on_faces = load_field(path)
    assert on_faces
    assert np.array_equal(back, values)


def test_field_rejects_gaps(tmp_path):
    path = tmp_path / "field.txt"
    path.write_text("0 1.0\n2 2.0\n")
    with pytest.raises(FileFormatError, match="contiguous"):
        load_field(path)
