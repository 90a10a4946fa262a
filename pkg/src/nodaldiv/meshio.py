"""Labeled-OFF mesh files and plain-text field files.

The mesh format is a standard OFF header plus vertex and face blocks,
followed by labeled sections:

    #LABELS       one token per face: M, C:<circle-id>, or P
    #COLLAR_S     vertex-index value pairs
    #GAMMA        vertex indices
    #EDGE_LENGTHS i j length triples (intrinsic metric; optional on load,
                  lengths default to vertex-position distances when absent)

All floats are written with 17 significant digits so that save followed by
load reproduces every field bit for bit.
"""

from __future__ import annotations

import numpy as np

from .mesh import COLLAR, MINUS, PLUS, LabeledSurfaceMesh, MeshError, TriMesh


class FileFormatError(MeshError):
    """Malformed mesh or field file; carries the offending line number."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_mesh(mesh: LabeledSurfaceMesh, path) -> None:
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}"]
    for v in mesh.vertices:
        lines.append(" ".join(_fmt(x) for x in v))
    for f in mesh.faces:
        lines.append("3 " + " ".join(str(int(i)) for i in f))
    lines.append("#LABELS")
    for region, collar in zip(mesh.face_region, mesh.face_collar):
        if region == MINUS:
            lines.append("M")
        elif region == PLUS:
            lines.append("P")
        else:
            lines.append(f"C:{mesh.collar_ids[collar]}")
    lines.append("#COLLAR_S")
    for v in np.flatnonzero(np.isfinite(mesh.collar_s)):
        lines.append(f"{int(v)} {_fmt(mesh.collar_s[v])}")
    lines.append("#GAMMA")
    for v in mesh.gamma_vertices:
        lines.append(str(int(v)))
    lines.append("#EDGE_LENGTHS")
    for (a, b), L in zip(mesh.edges, mesh.edge_lengths):
        lines.append(f"{int(a)} {int(b)} {_fmt(L)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path) -> LabeledSurfaceMesh:
    with open(path) as fh:
        raw = fh.read().splitlines()
    idx = 0

    def line() -> tuple[int, str]:
        nonlocal idx
        while idx < len(raw):
            text = raw[idx].strip()
            idx += 1
            if text:
                return idx, text
        raise FileFormatError(path, len(raw), "unexpected end of file")

    ln, header = line()
    if header != "OFF":
        raise FileFormatError(path, ln, f"expected OFF header, got {header!r}")
    ln, counts = line()
    try:
        nv, nf, _ = (int(t) for t in counts.split())
    except ValueError:
        raise FileFormatError(path, ln, "malformed count line") from None
    verts = np.zeros((nv, 3))
    for i in range(nv):
        ln, text = line()
        parts = text.split()
        if len(parts) != 3:
            raise FileFormatError(path, ln, f"vertex line needs 3 coordinates")
        verts[i] = [float(p) for p in parts]
    faces = np.zeros((nf, 3), dtype=np.int64)
    for i in range(nf):
        ln, text = line()
        parts = text.split()
        if len(parts) != 4 or parts[0] != "3":
            raise FileFormatError(path, ln, "face line must read '3 i j k'")
        faces[i] = [int(p) for p in parts[1:]]

    sections: dict[str, list[tuple[int, str]]] = {}
    current: list[tuple[int, str]] | None = None
    while idx < len(raw):
        ln = idx + 1
        text = raw[idx].strip()
        idx += 1
        if not text:
            continue
        if text.startswith("#"):
            current = sections.setdefault(text, [])
        elif current is not None:
            current.append((ln, text))
        else:
            raise FileFormatError(path, ln, f"unexpected content {text!r}")

    labels = sections.get("#LABELS")
    if labels is None or len(labels) != nf:
        raise FileFormatError(path, len(raw), "missing or incomplete #LABELS section")
    face_region = np.zeros(nf, dtype=np.int8)
    face_collar = np.full(nf, -1, dtype=np.int64)
    collar_ids: list[str] = []
    for i, (ln, tok) in enumerate(labels):
        if tok == "M":
            face_region[i] = MINUS
        elif tok == "P":
            face_region[i] = PLUS
        elif tok.startswith("C:"):
            cid = tok[2:]
            if cid not in collar_ids:
                collar_ids.append(cid)
            face_region[i] = COLLAR
            face_collar[i] = collar_ids.index(cid)
        else:
            raise FileFormatError(path, ln, f"unknown face label {tok!r}")

    collar_s = np.full(nv, np.nan)
    for ln, text in sections.get("#COLLAR_S", []):
        parts = text.split()
        if len(parts) != 2:
            raise FileFormatError(path, ln, "collar_s line must read 'index value'")
        collar_s[int(parts[0])] = float(parts[1])
    gamma = []
    for ln, text in sections.get("#GAMMA", []):
        gamma.extend(int(t) for t in text.split())

    # two passes: the edge table must exist before lengths can be aligned
    probe = TriMesh(verts, faces, edge_lengths=np.ones(_count_edges(faces)))
    lengths = np.linalg.norm(
        verts[probe.edges[:, 0]] - verts[probe.edges[:, 1]], axis=1
    )
    table = sections.get("#EDGE_LENGTHS")
    if table:
        for ln, text in table:
            parts = text.split()
            if len(parts) != 3:
                raise FileFormatError(path, ln, "edge length line must read 'i j value'")
            a, b = int(parts[0]), int(parts[1])
            try:
                eidx, _ = probe.edge_index(a, b)
            except MeshError:
                raise FileFormatError(path, ln, f"no edge between {a} and {b}") from None
            lengths[eidx] = float(parts[2])
    mesh = LabeledSurfaceMesh(
        vertices=verts,
        faces=faces,
        edge_lengths=lengths,
        face_region=face_region,
        face_collar=face_collar,
        collar_ids=collar_ids,
        collar_s=collar_s,
        gamma_vertices=np.array(sorted(set(gamma)), dtype=np.int64),
    )
    mesh.validate()
    return mesh


def _count_edges(faces: np.ndarray) -> int:
    directed = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    return len(np.unique(directed, axis=0))


def save_field(values: np.ndarray, path, on_faces: bool = False) -> None:
    """Plain-text field file: 'index value' per line; face fields start
    with a '#FACES' header line."""
    lines = []
    if on_faces:
        lines.append("#FACES")
    for i, v in enumerate(np.asarray(values, dtype=float)):
        lines.append(f"{i} {_fmt(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> tuple[np.ndarray, bool]:
    """Returns (values, on_faces)."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    on_faces = False
    pairs: dict[int, float] = {}
    for lineno, text in enumerate(raw, 1):
        text = text.strip()
        if not text:
            continue
        if text == "#FACES":
            on_faces = True
            continue
        parts = text.split()
        if len(parts) != 2:
            raise FileFormatError(path, lineno, "field line must read 'index value'")
        pairs[int(parts[0])] = float(parts[1])
    if not pairs:
        raise FileFormatError(path, len(raw), "empty field file")
    n = max(pairs) + 1
    if sorted(pairs) != list(range(n)):
        raise FileFormatError(path, len(raw), "field indices are not contiguous")
    values = np.array([pairs[i] for i in range(n)])
    return values, on_faces
