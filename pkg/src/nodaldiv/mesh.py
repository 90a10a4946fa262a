"""Triangulated closed surfaces with intrinsic metrics and region labels.

Geometry is carried by per-edge lengths; 3-D vertex positions are kept only
for visualization.  A labeled mesh partitions its faces into a Minus region,
flat collar cylinders around each dividing circle, and a Plus region, with a
per-vertex collar coordinate s in [-1, 1] that vanishes exactly on the
dividing circles.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable

import numpy as np

MINUS = 0
COLLAR = 1
PLUS = 2

_REGION_NAMES = {MINUS: "minus", COLLAR: "collar", PLUS: "plus"}

# Relative tolerance for the flat-product-metric check on collars.
FLATNESS_RTOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh topology, labeling, or metric."""


def _heron_area(a, b, c):
    """Numerically stable triangle area from side lengths (Kahan's ordering)."""
    a, b, c = np.broadcast_arrays(a, b, c)
    s = np.sort(np.stack([a, b, c], axis=-1), axis=-1)
    x, y, z = s[..., 2], s[..., 1], s[..., 0]  # x >= y >= z
    t = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    t = np.maximum(t, 0.0)
    return 0.25 * np.sqrt(t)


@dataclasses.dataclass
class TriMesh:
    """Oriented triangle mesh with an intrinsic metric.

    Parameters
    ----------
    vertices : (nv, 3) float array
        Positions, used for visualization only.
    faces : (nf, 3) int array
        Vertex triples, consistently oriented.
    edge_lengths : (ne,) float array
        Intrinsic lengths, aligned with the canonical `edges` array
        (unique sorted vertex pairs in lexicographic order).
    """

    vertices: np.ndarray
    faces: np.ndarray
    edge_lengths: np.ndarray

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be an (nf, 3) array")
        directed = self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        und = np.sort(directed, axis=1)
        self.edges, inverse = np.unique(und, axis=0, return_inverse=True)
        self.face_edges = inverse.reshape(-1, 3)
        # +1 where the face traverses the edge in its canonical (low -> high) direction
        self.face_edge_signs = np.where(
            directed[:, 0] < directed[:, 1], 1, -1
        ).reshape(-1, 3).astype(np.int64)
        self.edge_lengths = np.ascontiguousarray(self.edge_lengths, dtype=float)
        if self.edge_lengths.shape != (len(self.edges),):
            raise MeshError(
                f"edge_lengths has length {len(self.edge_lengths)}, "
                f"expected {len(self.edges)}"
            )
        self._edge_index = {
            (int(a), int(b)): i for i, (a, b) in enumerate(self.edges)
        }
        counts = np.zeros(len(self.edges), dtype=np.int64)
        np.add.at(counts, self.face_edges.ravel(), 1)
        self.edge_face_count = counts

    # -- basic queries ---------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def edge_index(self, a: int, b: int) -> tuple[int, int]:
        """Edge id and sign of the direction a -> b relative to canonical."""
        key = (a, b) if a < b else (b, a)
        idx = self._edge_index.get(key)
        if idx is None:
            raise MeshError(f"no edge between vertices {a} and {b}")
        return idx, (1 if a < b else -1)

    def face_corner_lengths(self) -> np.ndarray:
        """(nf, 3) lengths; column k is the edge opposite corner k."""
        L = self.edge_lengths[self.face_edges]
        # face_edges column 0 is edge (v0,v1), opposite corner 2, etc.
        return L[:, [1, 2, 0]]

    def face_areas(self) -> np.ndarray:
        L = self.edge_lengths[self.face_edges]
        return _heron_area(L[:, 0], L[:, 1], L[:, 2])

    def corner_cotans(self) -> np.ndarray:
        """(nf, 3) cotangents of the interior angle at each face corner."""
        opp = self.face_corner_lengths()
        a2 = opp**2
        areas = self.face_areas()
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise MeshError(f"degenerate face {bad} (zero area)")
        cot = np.empty_like(opp)
        for k in range(3):
            b2 = a2[:, (k + 1) % 3]
            c2 = a2[:, (k + 2) % 3]
            cot[:, k] = (b2 + c2 - a2[:, k]) / (4.0 * areas)
        return cot

    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_face_count == 1)

    def boundary_vertices(self) -> np.ndarray:
        be = self.boundary_edges()
        return np.unique(self.edges[be])

    def is_closed(self) -> bool:
        return bool(np.all(self.edge_face_count == 2))

    def vertex_faces(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for f, tri in enumerate(self.faces):
            for v in tri:
                out[int(v)].append(f)
        return out

    def boundary_loops(self) -> list[list[int]]:
        """Boundary cycles as vertex lists, in induced orientation.

        A boundary edge is traversed by its single face in one direction;
        the induced boundary keeps the surface on the left, i.e. follows
        that direction.
        """
        succ: dict[int, int] = {}
        directed = self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        face_of_directed = np.repeat(np.arange(self.n_faces), 3)
        edge_ids = self.face_edges.ravel()
        boundary = self.edge_face_count[edge_ids] == 1
        for (a, b), is_b in zip(directed, boundary):
            if is_b:
                a, b = int(a), int(b)
                if a in succ:
                    raise MeshError(f"non-manifold boundary at vertex {a}")
                succ[a] = b
        _ = face_of_directed
        loops = []
        seen: set[int] = set()
        for start in sorted(succ):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            v = succ[start]
            while v != start:
                loop.append(v)
                seen.add(v)
                v = succ[v]
            loops.append(loop)
        return loops

    def connected_components(self) -> np.ndarray:
        """Component id per vertex (union over edges)."""
        parent = np.arange(self.n_vertices)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[ra] = rb
        return np.array([find(i) for i in range(self.n_vertices)])

    # -- validation ------------------------------------------------------

    def validate(self, require_closed: bool = True) -> None:
        if np.any(self.faces < 0) or np.any(self.faces >= self.n_vertices):
            raise MeshError("face references a vertex out of range")
        if np.any(self.edge_lengths <= 0.0):
            bad = int(np.argmin(self.edge_lengths))
            raise MeshError(f"nonpositive length on edge {bad}")
        counts = self.edge_face_count
        if require_closed:
            if np.any(counts != 2):
                bad = int(np.argmax(counts != 2))
                raise MeshError(
                    f"not a closed manifold: edge {bad} has {counts[bad]} faces"
                )
        elif np.any(counts > 2):
            bad = int(np.argmax(counts > 2))
            raise MeshError(f"non-manifold edge {bad} with {counts[bad]} faces")
        # orientation: every interior edge must be traversed once each way
        directed = self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        seen: set[tuple[int, int]] = set()
        for a, b in directed:
            key = (int(a), int(b))
            if key in seen:
                raise MeshError(
                    f"orientation not consistent: edge {key} traversed twice "
                    "in the same direction"
                )
            seen.add(key)
        # strict triangle inequality
        L = self.edge_lengths[self.face_edges]
        slack = L.sum(axis=1) - 2.0 * L.max(axis=1)
        tol = 1e-12 * L.max(axis=1)
        if np.any(slack <= tol):
            bad = int(np.argmin(slack - tol))
            raise MeshError(f"triangle inequality fails on face {bad}")
        comp = self.connected_components()
        if len(np.unique(comp)) != 1:
            raise MeshError("mesh is not connected")

    def submesh(self, face_mask: np.ndarray) -> tuple["TriMesh", np.ndarray]:
        """Extract the faces selected by `face_mask`.

        Returns the sub-mesh and the array mapping its vertex ids back to
        ids in this mesh.
        """
        faces = self.faces[face_mask]
        used = np.unique(faces)
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(len(used))
        sub_faces = remap[faces]
        directed = np.sort(sub_faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        n_sub_edges = len(np.unique(directed, axis=0))
        sub = TriMesh(
            vertices=self.vertices[used],
            faces=sub_faces,
            edge_lengths=np.ones(n_sub_edges),
        )
        lengths = np.empty(sub.n_edges)
        for i, (a, b) in enumerate(sub.edges):
            ga, gb = int(used[a]), int(used[b])
            idx, _ = self.edge_index(ga, gb)
            lengths[i] = self.edge_lengths[idx]
        sub.edge_lengths = lengths
        return sub, used


@dataclasses.dataclass
class CollarInfo:
    """Ring decomposition of one collar cylinder."""

    circle_id: str
    ring_s: np.ndarray          # (2R+1,) increasing, -1 .. 1
    rings: list[np.ndarray]     # vertex ids per ring
    spacing: float              # coordinate and metric ring spacing, 1/R
    circumference: float        # sum of ring edge lengths
    t_edge: float               # uniform ring edge length

    @property
    def n_around(self) -> int:
        return len(self.rings[0])


class LabeledSurfaceMesh(TriMesh):
    """Closed surface decomposed as Minus | flat collars | Plus.

    Extra per-face data: `face_region` in {MINUS, COLLAR, PLUS} and
    `face_collar` (index into `collar_ids`, -1 off collars).  Per-vertex
    `collar_s` is NaN away from collars and exactly 0.0 on `gamma_vertices`.
    """

    def __init__(
        self,
        vertices: np.ndarray,
        faces: np.ndarray,
        edge_lengths: np.ndarray,
        face_region: np.ndarray,
        face_collar: np.ndarray,
        collar_ids: Iterable[str],
        collar_s: np.ndarray,
        gamma_vertices: np.ndarray,
    ):
        super().__init__(vertices, faces, edge_lengths)
        self.face_region = np.ascontiguousarray(face_region, dtype=np.int8)
        self.face_collar = np.ascontiguousarray(face_collar, dtype=np.int64)
        self.collar_ids = tuple(str(c) for c in collar_ids)
        self.collar_s = np.ascontiguousarray(collar_s, dtype=float)
        self.gamma_vertices = np.ascontiguousarray(
            np.sort(np.asarray(gamma_vertices, dtype=np.int64))
        )
        if self.face_region.shape != (self.n_faces,):
            raise MeshError("face_region must have one entry per face")
        if self.collar_s.shape != (self.n_vertices,):
            raise MeshError("collar_s must have one entry per vertex")

    # -- region queries --------------------------------------------------

    def region_faces(self, region: int) -> np.ndarray:
        return np.flatnonzero(self.face_region == region)

    def region_vertices(self, region: int) -> np.ndarray:
        faces = self.faces[self.face_region == region]
        return np.unique(faces)

    def side_vertices(self, region: int) -> np.ndarray:
        """Vertices of one side: region vertices plus collar vertices with
        collar_s strictly of that sign."""
        base = set(int(v) for v in self.region_vertices(region))
        sign = -1.0 if region == MINUS else 1.0
        on_collar = np.flatnonzero(
            np.isfinite(self.collar_s) & (np.sign(self.collar_s) == sign)
        )
        base.update(int(v) for v in on_collar)
        return np.array(sorted(base), dtype=np.int64)

    def collar_info(self, circle_id: str) -> CollarInfo:
        try:
            cidx = self.collar_ids.index(circle_id)
        except ValueError:
            raise MeshError(f"unknown collar circle {circle_id!r}") from None
        faces = np.flatnonzero(
            (self.face_region == COLLAR) & (self.face_collar == cidx)
        )
        verts = np.unique(self.faces[faces])
        s = self.collar_s[verts]
        if np.any(~np.isfinite(s)):
            raise MeshError(f"collar {circle_id!r} has vertices without collar_s")
        values = np.unique(s)
        rings = [verts[s == val] for val in values]
        n = len(rings[0])
        if any(len(r) != n for r in rings):
            raise MeshError(f"collar {circle_id!r} rings vary in size")
        spacing = float(values[1] - values[0]) if len(values) > 1 else 0.0
        # uniform ring edge length from the middle (Gamma) ring
        mid = rings[len(rings) // 2]
        mid_set = set(int(v) for v in mid)
        t_lengths = [
            self.edge_lengths[i]
            for i, (a, b) in enumerate(self.edges)
            if int(a) in mid_set and int(b) in mid_set
        ]
        t_edge = float(t_lengths[0]) if t_lengths else 0.0
        return CollarInfo(
            circle_id=circle_id,
            ring_s=values,
            rings=rings,
            spacing=spacing,
            circumference=t_edge * n,
            t_edge=t_edge,
        )

    def min_collar_spacing(self) -> float:
        return min(self.collar_info(cid).spacing for cid in self.collar_ids)

    def region_euler_characteristics(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {"minus": [], "plus": []}
        for region, key in ((MINUS, "minus"), (PLUS, "plus")):
            mask = self.face_region == region
            if not mask.any():
                continue
            sub, used = self.submesh(mask)
            comp = sub.connected_components()
            for cid in np.unique(comp):
                cmask = comp == cid
                cverts = int(cmask.sum())
                cfaces = int(np.all(cmask[sub.faces], axis=1).sum())
                inc = cmask[sub.edges]
                cedges = int(np.all(inc, axis=1).sum())
                out[key].append(cverts - cedges + cfaces)
            _ = used
        return out

    # -- validation ------------------------------------------------------

    def validate(self, require_closed: bool = True) -> None:
        super().validate(require_closed=require_closed)
        if set(np.unique(self.face_region)) - {MINUS, COLLAR, PLUS}:
            raise MeshError("face_region contains unknown labels")
        on_collar = self.face_region == COLLAR
        if np.any(self.face_collar[on_collar] < 0):
            raise MeshError("collar face without a circle id")
        if np.any(self.face_collar[~on_collar] != -1):
            raise MeshError("non-collar face carries a circle id")
        # Euler characteristic additivity (collar cylinders contribute 0)
        chis = self.region_euler_characteristics()
        total = sum(chis["minus"]) + sum(chis["plus"])
        if total != self.euler_characteristic():
            raise MeshError(
                f"Euler characteristic mismatch: surface {self.euler_characteristic()}, "
                f"regions sum to {total}"
            )
        gamma = set(int(v) for v in self.gamma_vertices)
        zero_s = set(int(v) for v in np.flatnonzero(self.collar_s == 0.0))
        if gamma != zero_s:
            raise MeshError("gamma_vertices do not match the collar_s zero set")
        for cid in self.collar_ids:
            self._validate_collar(cid)

    def _validate_collar(self, circle_id: str) -> None:
        info = self.collar_info(circle_id)
        values = info.ring_s
        if len(values) < 3 or len(values) % 2 == 0:
            raise MeshError(
                f"collar {circle_id!r} must have an odd number of rings >= 3"
            )
        if not (values[0] == -1.0 and values[-1] == 1.0):
            raise MeshError(f"collar coordinate not monotone on {circle_id!r}")
        steps = np.diff(values)
        if np.any(steps <= 0):
            raise MeshError(f"collar coordinate not monotone on {circle_id!r}")
        if np.any(np.abs(steps - info.spacing) > 1e-12):
            raise MeshError(f"collar rings of {circle_id!r} are not uniform in s")
        n = info.n_around
        expected_faces = 2 * n * (len(values) - 1)
        cidx = self.collar_ids.index(circle_id)
        actual = int(np.sum((self.face_region == COLLAR) & (self.face_collar == cidx)))
        if actual != expected_faces:
            raise MeshError(
                f"collar {circle_id!r} is not a cylinder grid: "
                f"{actual} faces, expected {expected_faces}"
            )
        # flat product metric: each face carries one s-edge, one t-edge and
        # the hypotenuse, with lengths (spacing, t_edge, hyp) exactly
        ds, dt = info.spacing, info.t_edge
        hyp = float(np.hypot(ds, dt))
        expect = np.sort(np.array([ds, dt, hyp]))
        faces = np.flatnonzero((self.face_region == COLLAR) & (self.face_collar == cidx))
        L = np.sort(self.edge_lengths[self.face_edges[faces]], axis=1)
        rel = np.abs(L - expect) / hyp
        if np.any(rel > FLATNESS_RTOL):
            bad = int(faces[np.argmax(rel.max(axis=1))])
            raise MeshError(
                f"collar {circle_id!r} is not intrinsically flat at face {bad}"
            )

    def summary(self) -> str:
        chis = self.region_euler_characteristics()
        return (
            f"vertices={self.n_vertices} faces={self.n_faces} "
            f"chi={self.euler_characteristic()} "
            f"circles={len(self.collar_ids)} "
            f"chi_minus={chis['minus']} chi_plus={chis['plus']}"
        )


def swap_regions(mesh: LabeledSurfaceMesh) -> LabeledSurfaceMesh:
    """Relabel Minus as Plus and vice versa, flipping the collar coordinate.

    The orientation convention keeps ds^dt positive, so the collar
    coordinate must change sign along with the labels.
    """
    region = mesh.face_region.copy()
    region[mesh.face_region == MINUS] = PLUS
    region[mesh.face_region == PLUS] = MINUS
    return LabeledSurfaceMesh(
        vertices=mesh.vertices.copy(),
        faces=mesh.faces.copy(),
        edge_lengths=mesh.edge_lengths.copy(),
        face_region=region,
        face_collar=mesh.face_collar.copy(),
        collar_ids=mesh.collar_ids,
        collar_s=-mesh.collar_s,
        gamma_vertices=mesh.gamma_vertices.copy(),
    )
