"""Deterministic generation of labeled decomposed surfaces.

Region pieces come from fixed structured templates (polar disk, flat tube,
canonical 4g-gon frame with one hole, D-split pants), collars are exactly
flat cylinders, and parts are glued along full circles by reverse
identification with a lowest-vertex-index base-point rule.  All templates
are parameter free given the surface spec, so identical inputs yield
bit-identical meshes.

Boundary convention: every dividing circle with n vertices is meshed with
uniform edge length 2/n (circumference 2), and collars have metric ring
spacing equal to the collar-coordinate spacing 1/collar_rings, so they
carry the flat product metric with |ds| = 1.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .mesh import COLLAR, MINUS, PLUS, LabeledSurfaceMesh, MeshError, TriMesh

PRESET_NAMES = (
    "sphere-equator",
    "sphere-two-circles",
    "torus-two-meridians",
    "genus2-separating",
)

MAX_LEVEL = 6
_GLUE_RTOL = 1e-9


@dataclasses.dataclass
class SurfaceSpec:
    """Combinatorial description of S = Minus | collars | Plus.

    Each component is a (genus, circle-ids) pair; every circle id must
    appear exactly once on the minus side and exactly once on the plus side.
    """

    minus_components: Sequence[tuple[int, Sequence[str]]]
    plus_components: Sequence[tuple[int, Sequence[str]]]
    circle_counts: dict[str, int]
    collar_rings: int = 8
    refinement_level: int = 0

    def validate(self) -> None:
        for side, comps in (
            ("minus", self.minus_components),
            ("plus", self.plus_components),
        ):
            for genus, circles in comps:
                if genus < 0:
                    raise MeshError(f"negative genus on {side} component")
                if len(circles) == 0:
                    raise MeshError(f"{side} component with no boundary circle")
        for cid, n in self.circle_counts.items():
            if n < 8:
                raise MeshError(f"circle {cid!r} needs at least 8 vertices, got {n}")
        if self.collar_rings < 4:
            raise MeshError("collar_rings must be at least 4")
        if self.refinement_level < 0:
            raise MeshError("refinement_level must be nonnegative")
        minus_ids = [c for _, circles in self.minus_components for c in circles]
        plus_ids = [c for _, circles in self.plus_components for c in circles]
        for name, ids in (("minus", minus_ids), ("plus", plus_ids)):
            dup = {c for c in ids if ids.count(c) > 1}
            if dup:
                raise MeshError(
                    f"circle {sorted(dup)[0]!r} appears twice on the {name} side"
                )
        known = set(self.circle_counts)
        for name, ids in (("minus", minus_ids), ("plus", plus_ids)):
            off = set(ids) ^ known
            if off:
                raise MeshError(
                    f"circle pairing inconsistent at {sorted(off)[0]!r}: every "
                    f"circle must appear exactly once on the {name} side"
                )


def _circle_radius(n: int, edge: float) -> float:
    """Radius of the regular n-gon whose chords have the given length."""
    return edge / (2.0 * math.sin(math.pi / n))


class _Builder:
    """Accumulates vertices, faces, lengths and labels; merges via union-find."""

    def __init__(self):
        self.pos: list[tuple[float, float, float]] = []
        self.faces: list[tuple[int, int, int]] = []
        self.face_region: list[int] = []
        self.face_collar: list[int] = []
        self.lengths: dict[tuple[int, int], float] = {}
        self.collar_s: dict[int, float] = {}
        self.gamma: set[int] = set()
        self._parent: dict[int, int] = {}

    # union-find ---------------------------------------------------------

    def find(self, v: int) -> int:
        p = self._parent.get(v, v)
        if p == v:
            return v
        root = self.find(p)
        self._parent[v] = root
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            self._parent[hi] = lo

    # construction ---------------------------------------------------------

    def vertex(self, x: float, y: float, z: float) -> int:
        self.pos.append((float(x), float(y), float(z)))
        return len(self.pos) - 1

    def face(self, a: int, b: int, c: int, region: int, collar: int = -1) -> None:
        self.faces.append((a, b, c))
        self.face_region.append(region)
        self.face_collar.append(collar)

    def set_len(self, a: int, b: int, L: float) -> None:
        key = (a, b) if a < b else (b, a)
        self.lengths[key] = float(L)

    def set_len_from_plane(self, a: int, b: int) -> None:
        xa, ya, _ = self.pos[a]
        xb, yb, _ = self.pos[b]
        self.set_len(a, b, math.hypot(xb - xa, yb - ya))

    def length(self, a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        return self.lengths[key]

    # gluing ----------------------------------------------------------------

    def merge_loops(
        self, loop_a: Sequence[int], loop_b: Sequence[int], where: str
    ) -> None:
        """Identify two boundary circles given in induced orientation.

        Orientation-reversing identification with the base point at the
        lowest vertex index of each loop.
        """
        if len(loop_a) != len(loop_b):
            raise MeshError(
                f"vertex-count mismatch at {where}: {len(loop_a)} vs {len(loop_b)}"
            )
        n = len(loop_a)
        a = list(loop_a)
        b = list(reversed(loop_b))
        a = a[a.index(min(a)):] + a[: a.index(min(a))]
        b = b[b.index(min(b)):] + b[: b.index(min(b))]
        for i in range(n):
            la = self.length(a[i], a[(i + 1) % n])
            lb = self.length(b[i], b[(i + 1) % n])
            if abs(la - lb) > _GLUE_RTOL * max(la, lb):
                raise MeshError(f"edge-length mismatch at {where}: {la!r} vs {lb!r}")
        for va, vb in zip(a, b):
            self.union(va, vb)

    # finalization ----------------------------------------------------------

    def finalize(self) -> dict:
        roots = [self.find(v) for v in range(len(self.pos))]
        unique_roots = sorted(set(roots))
        remap = {r: i for i, r in enumerate(unique_roots)}
        vmap = np.array([remap[r] for r in roots], dtype=np.int64)
        verts = np.array([self.pos[r] for r in unique_roots], dtype=float)
        faces = vmap[np.array(self.faces, dtype=np.int64)]
        if np.any(
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 0] == faces[:, 2])
        ):
            raise MeshError("gluing produced a degenerate face")
        lengths: dict[tuple[int, int], float] = {}
        for (a, b), L in self.lengths.items():
            ka, kb = int(vmap[a]), int(vmap[b])
            key = (ka, kb) if ka < kb else (kb, ka)
            prev = lengths.get(key)
            if prev is None:
                lengths[key] = L
            elif abs(prev - L) > _GLUE_RTOL * max(prev, L):
                raise MeshError(f"edge-length conflict after gluing at {key}")
        collar_s = np.full(len(verts), np.nan)
        for v, s in self.collar_s.items():
            collar_s[vmap[v]] = s
        gamma = np.unique(vmap[np.array(sorted(self.gamma), dtype=np.int64)]) \
            if self.gamma else np.array([], dtype=np.int64)
        return {
            "vertices": verts,
            "faces": faces,
            "lengths": lengths,
            "collar_s": collar_s,
            "gamma": gamma,
            "face_region": np.array(self.face_region, dtype=np.int8),
            "face_collar": np.array(self.face_collar, dtype=np.int64),
        }


def _edge_length_array(data: dict) -> np.ndarray:
    faces = data["faces"]
    directed = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    edges = np.unique(directed, axis=0)
    lengths = np.empty(len(edges))
    table = data["lengths"]
    for i, (a, b) in enumerate(edges):
        key = (int(a), int(b))
        if key not in table:
            raise MeshError(f"no length recorded for edge {key}")
        lengths[i] = table[key]
    return lengths


# -- band primitives ----------------------------------------------------------
#
# Band faces are CCW in their plane.  A band traverses its inner ring in
# decreasing index order and its outer ring in increasing order, so stacking
# bands outward is orientation-consistent, an outer boundary ring is induced
# in increasing order, and an inner boundary ring in decreasing order.


def _quad_band(builder: _Builder, inner: Sequence[int], outer: Sequence[int],
               region: int, collar: int = -1) -> None:
    """Same-count band: quads (in_m, out_m, out_{m+1}, in_{m+1}) split along
    the (in_m, out_{m+1}) diagonal; lengths from plane positions."""
    n = len(inner)
    for m in range(n):
        m1 = (m + 1) % n
        builder.face(inner[m], outer[m], outer[m1], region, collar)
        builder.face(inner[m], outer[m1], inner[m1], region, collar)
        builder.set_len_from_plane(inner[m], outer[m])
        builder.set_len_from_plane(inner[m], outer[m1])
        builder.set_len_from_plane(outer[m], outer[m1])
        builder.set_len_from_plane(inner[m], inner[m1])


def _march_band(
    builder: _Builder,
    inner: Sequence[int],
    inner_angles: Sequence[float],
    outer: Sequence[int],
    outer_angles: Sequence[float],
    region: int,
) -> None:
    """Triangulate the planar annulus between nested rings of arbitrary
    counts by advancing whichever ring has the smaller next angle."""
    p, q = len(inner), len(outer)
    two_pi = 2.0 * math.pi

    def unwrapped(angles, base):
        out = [0.0] * len(angles)
        prev = None
        for k, ang in enumerate(angles):
            a = (ang - base) % two_pi
            if prev is not None and a < prev - 1e-12:
                a += two_pi
            out[k] = a
            prev = a
        return out

    base = float(inner_angles[0])
    ia = unwrapped(inner_angles, base)
    oa_all = [(float(a) - base) % two_pi for a in outer_angles]
    start = int(np.argmin(oa_all))
    oa = unwrapped([outer_angles[(start + k) % q] for k in range(q)], base)
    ia.append(ia[0] + two_pi)
    oa.append(oa[0] + two_pi)

    def iv(i):
        return inner[i % p]

    def ov(j):
        return outer[(start + j) % q]

    i = j = 0
    while i < p or j < q:
        take_inner = j >= q or (i < p and ia[i + 1] <= oa[j + 1])
        if take_inner:
            builder.face(iv(i), ov(j), iv(i + 1), region)
            builder.set_len_from_plane(iv(i), ov(j))
            builder.set_len_from_plane(ov(j), iv(i + 1))
            builder.set_len_from_plane(iv(i), iv(i + 1))
            i += 1
        else:
            builder.face(iv(i), ov(j), ov(j + 1), region)
            builder.set_len_from_plane(iv(i), ov(j))
            builder.set_len_from_plane(iv(i), ov(j + 1))
            builder.set_len_from_plane(ov(j), ov(j + 1))
            j += 1


def _uniform_ring(
    builder: _Builder, n: int, radius: float, z: float,
    center: tuple[float, float] = (0.0, 0.0), offset: float = 0.0,
) -> list[int]:
    ring = []
    for k in range(n):
        ang = offset + 2.0 * math.pi * k / n
        ring.append(
            builder.vertex(
                center[0] + radius * math.cos(ang),
                center[1] + radius * math.sin(ang),
                z,
            )
        )
    return ring


def _taper_band(
    builder: _Builder, ring: Sequence[int], edge_in: float, edge_out: float,
    slant: float, z: float, region: int,
) -> list[int]:
    """Intrinsic cone-frustum band changing the uniform ring edge length.

    Every quad is the same planar isoceles trapezoid (parallel sides edge_in
    and edge_out, legs `slant`), a valid flat metric for
    |edge_in - edge_out| < 2 * slant.
    """
    n = len(ring)
    half = 0.5 * (edge_in - edge_out)
    if abs(half) >= slant:
        raise MeshError("taper step too aggressive for the given slant")
    h = math.sqrt(slant * slant - half * half)
    diag = math.hypot(0.5 * (edge_in + edge_out), h)
    r_out = _circle_radius(n, edge_out)
    out = _uniform_ring(builder, n, r_out, z)
    for m in range(n):
        m1 = (m + 1) % n
        builder.face(ring[m], out[m], out[m1], region)
        builder.face(ring[m], out[m1], ring[m1], region)
        builder.set_len(ring[m], out[m], slant)
        builder.set_len(ring[m], out[m1], diag)
        builder.set_len(out[m], out[m1], edge_out)
    return out


def _taper_chain(
    builder: _Builder, ring: list[int], edge_in: float, edge_out: float,
    z: float, region: int,
) -> list[int]:
    """Tapers stepping the edge length geometrically (ratio <= 1.35/step)
    and landing exactly on edge_out.  Attach only to outer boundaries."""
    if math.isclose(edge_in, edge_out, rel_tol=1e-12):
        return ring
    ratio = edge_out / edge_in
    K = max(1, math.ceil(abs(math.log(ratio)) / math.log(1.35)))
    cur, e_cur = ring, edge_in
    for k in range(1, K + 1):
        e_next = edge_out if k == K else edge_in * ratio ** (k / K)
        slant = 0.9 * max(e_cur, e_next)
        cur = _taper_band(builder, cur, e_cur, e_next, slant, z, region)
        e_cur = e_next
    return cur


def _funnel_part(
    builder: _Builder, n_in: int, edge_in: float, n_out: int, edge_out: float,
    z: float, region: int,
) -> tuple[list[int], list[int]]:
    """Standalone adapter between circle types (count and edge length).

    Returns (inner loop, outer loop) in induced orientation; the inner loop
    is meant to be glued onto an existing boundary circle with merge_loops.
    """
    r0 = _circle_radius(n_in, edge_in)
    ring0 = _uniform_ring(builder, n_in, r0, z)
    for m in range(n_in):
        builder.set_len(ring0[m], ring0[(m + 1) % n_in], edge_in)
    cur, n_cur, e_cur = list(ring0), n_in, edge_in
    guard = 0
    while n_cur != n_out:
        n_next = max(n_out, (n_cur + 1) // 2) if n_cur > n_out else min(
            n_out, 2 * n_cur
        )
        r_in = _circle_radius(n_cur, e_cur)
        r_out = r_in + 0.8 * e_cur
        out = _uniform_ring(builder, n_next, r_out, z)
        _march_band(
            builder,
            cur, [2.0 * math.pi * k / n_cur for k in range(n_cur)],
            out, [2.0 * math.pi * k / n_next for k in range(n_next)],
            region,
        )
        cur, n_cur = out, n_next
        e_cur = 2.0 * r_out * math.sin(math.pi / n_cur)
        guard += 1
        if guard > 32:
            raise MeshError("circle adapter did not converge")
    cur = _taper_chain(builder, cur, e_cur, edge_out, z, region)
    return list(reversed(ring0)), cur


# -- region piece templates -----------------------------------------------------


def _disk_piece(
    builder: _Builder, n: int, edge: float, z: float, region: int,
    rings: int | None = None,
) -> list[int]:
    """Polar-grid disk; the boundary is a uniform n-gon with the given edge.
    Returns the boundary in induced orientation (increasing angle)."""
    radius = _circle_radius(n, edge)
    if rings is None:
        rings = max(2, int(round(3 * n / 16)))
    center = builder.vertex(0.0, 0.0, z)
    prev: list[int] | None = None
    boundary: list[int] = []
    for j in range(1, rings + 1):
        ring = _uniform_ring(builder, n, radius * j / rings, z)
        if prev is None:
            for m in range(n):
                m1 = (m + 1) % n
                builder.face(center, ring[m], ring[m1], region)
                builder.set_len_from_plane(center, ring[m])
                builder.set_len_from_plane(ring[m], ring[m1])
        else:
            _quad_band(builder, prev, ring, region)
        prev = ring
        boundary = ring
    return boundary


def _tube_piece(
    builder: _Builder, n: int, edge: float, z: float, region: int,
    rings: int | None = None, height: float = 1.0,
) -> tuple[list[int], list[int]]:
    """Flat cylinder [0, height] x circle with square cells.

    Returns (low, high) boundary rings in induced orientation.
    """
    if rings is None:
        rings = max(2, int(round(height * n / 2)))
    spacing = height / rings
    radius = n * edge / (2.0 * math.pi)
    diag = math.hypot(spacing, edge)
    grid = []
    for k in range(rings + 1):
        ring = []
        for m in range(n):
            ang = 2.0 * math.pi * m / n
            ring.append(
                builder.vertex(radius * math.cos(ang), radius * math.sin(ang),
                               z + spacing * k)
            )
        grid.append(ring)
    for k in range(rings):
        for m in range(n):
            m1 = (m + 1) % n
            a, b = grid[k][m], grid[k + 1][m]
            c, d_ = grid[k + 1][m1], grid[k][m1]
            builder.face(a, b, c, region)
            builder.face(a, c, d_, region)
            builder.set_len(a, b, spacing)
            builder.set_len(a, d_, edge)
            builder.set_len(b, c, edge)
            builder.set_len(a, c, diag)
    return list(reversed(grid[0])), grid[rings]


def _frame_piece(
    builder: _Builder, genus: int, n: int, edge: float, z: float, region: int,
) -> list[int]:
    """Genus-g piece with one boundary circle from the canonical 4g-gon.

    A regular 4g-gon outline sampled with P vertices (corners included) is
    star-morphed inward to a uniform hole circle; the polygon sides are then
    identified pairwise by the word a b a^-1 b^-1 ... (reversed pairing), so
    all corners merge into a single cone vertex.  The hole is the boundary.
    """
    sides = 4 * genus
    # at least 3 samples per side: with 2, both edges at an interior sample
    # join it to the merged cone vertex and distinct edge pairs collapse
    per_side = max(3, -(-n // sides))
    P = sides * per_side
    r_hole = _circle_radius(n, edge) if P == n else _circle_radius(P, 2.0 / P)
    r_poly = max(2.6 * r_hole, r_hole + 10.0 * edge)
    corner_angle = 2.0 * math.pi / sides
    apothem = r_poly * math.cos(corner_angle / 2.0)

    def poly_radius(theta: float) -> float:
        t = math.fmod(theta, corner_angle)
        return apothem / math.cos(t - corner_angle / 2.0)

    angles = [2.0 * math.pi * p / P for p in range(P)]
    hole = _uniform_ring(builder, P, r_hole, z)
    n_rings = max(2, int(round((apothem - r_hole) / edge)))
    prev = hole
    outline: list[int] = []
    for j in range(1, n_rings + 1):
        tau = j / n_rings
        ring = []
        for p in range(P):
            rr = (1.0 - tau) * r_hole + tau * poly_radius(angles[p])
            ring.append(
                builder.vertex(rr * math.cos(angles[p]), rr * math.sin(angles[p]), z)
            )
        _quad_band(builder, prev, ring, region)
        prev = ring
        outline = ring
    q = per_side
    for h in range(genus):
        for (sa, sb) in ((4 * h, 4 * h + 2), (4 * h + 1, 4 * h + 3)):
            for jj in range(q + 1):
                va = outline[(sa * q + jj) % P]
                vb = outline[(sb * q + (q - jj)) % P]
                if jj < q:
                    la = builder.length(outline[(sa * q + jj) % P],
                                        outline[(sa * q + jj + 1) % P])
                    lb = builder.length(outline[(sb * q + q - jj) % P],
                                        outline[(sb * q + q - jj - 1) % P])
                    if abs(la - lb) > _GLUE_RTOL * max(la, lb):
                        raise MeshError("polygon side lengths do not match")
                builder.union(va, vb)
    hole_induced = list(reversed(hole))
    if P != n:
        f_in, f_out = _funnel_part(builder, P, builder.length(hole[0], hole[1]),
                                   n, edge, z, region)
        builder.merge_loops(hole_induced, f_in, "frame hole adapter")
        return f_out
    return hole_induced


def _pants_piece(
    builder: _Builder, counts: tuple[int, int, int],
    edges: tuple[float, float, float], z: float, region: int,
) -> tuple[list[int], list[int], list[int]]:
    """Sphere with three boundary circles (waist, leg1, leg2).

    Two star-morphed half annuli share a sampled diameter; the leg circles
    are meshed directly at their exact uniform edge lengths, the waist is
    normalized through a marching band and a taper chain.  Returns
    (waist, leg1, leg2) in induced orientation.
    """
    n_w, n_1, n_2 = counts
    e_w, e_1, e_2 = edges
    scale_edge = max(e_1, e_2)
    r1 = _circle_radius(n_1, e_1)
    r2 = _circle_radius(n_2, e_2)
    R_w = 2.2 * max(r1, r2)
    d = 1.15 * max(r1, r2) + 0.08 * R_w
    M = min(n_1, n_2) // 2
    a1, a2 = n_1 - M, n_2 - M
    if a1 < 3 or a2 < 3:
        raise MeshError("pants legs too coarse")
    diameter = [
        builder.vertex(0.0, -R_w + 2.0 * R_w * qq / M, z) for qq in range(M + 1)
    ]

    def build_half(center_x: float, n_leg: int, r_leg: float, arc_n: int,
                   arc_low: float, arc_high: float, flip: bool
                   ) -> tuple[list[int], list[int]]:
        center = (center_x, 0.0)
        arc = []
        for a in range(1, arc_n):
            th = arc_low + (arc_high - arc_low) * a / arc_n
            arc.append(builder.vertex(R_w * math.cos(th), R_w * math.sin(th), z))
        # D-loop in CCW order around the leg center
        loop = (list(reversed(diameter)) + arc) if flip else (list(diameter) + arc)
        nL = len(loop)
        if nL != n_leg:
            raise MeshError("pants sampling mismatch")
        ang = []
        rad = []
        for v in loop:
            x, y, _ = builder.pos[v]
            ang.append(math.atan2(y - center[1], x - center[0]))
            rad.append(math.hypot(x - center[0], y - center[1]))
        ang = np.unwrap(np.array(ang))
        rad = np.array(rad)
        leg_ang = ang[0] + 2.0 * math.pi * np.arange(nL) / nL
        leg = [
            builder.vertex(center[0] + r_leg * math.cos(t),
                           center[1] + r_leg * math.sin(t), z)
            for t in leg_ang
        ]
        gap = float(np.mean(rad - r_leg))
        n_rings = max(2, int(round(gap / scale_edge)))
        prev = leg
        for j in range(1, n_rings + 1):
            tau = j / n_rings
            if j < n_rings:
                ring = []
                for p in range(nL):
                    rr = (1.0 - tau) * r_leg + tau * rad[p]
                    tt = (1.0 - tau) * leg_ang[p] + tau * ang[p]
                    ring.append(
                        builder.vertex(center[0] + rr * math.cos(tt),
                                       center[1] + rr * math.sin(tt), z)
                    )
            else:
                ring = loop
            _quad_band(builder, prev, ring, region)
            prev = ring
        return leg, arc

    leg1, arc1 = build_half(-d, n_1, r1, a1, math.pi / 2.0, 3.0 * math.pi / 2.0, False)
    leg2, arc2 = build_half(+d, n_2, r2, a2, -math.pi / 2.0, math.pi / 2.0, True)
    # waist loop, CCW around the origin starting at the bottom corner
    waist_loop = [diameter[0]] + arc2 + [diameter[M]] + arc1
    wa = []
    for v in waist_loop:
        x, y, _ = builder.pos[v]
        wa.append(math.atan2(y, x))
    ring = _uniform_ring(builder, n_w, R_w + 1.2 * scale_edge, z, offset=wa[0])
    ring_angles = [wa[0] + 2.0 * math.pi * k / n_w for k in range(n_w)]
    _march_band(builder, waist_loop, wa, ring, ring_angles, region)
    e_cur = 2.0 * (R_w + 1.2 * scale_edge) * math.sin(math.pi / n_w)
    waist = _taper_chain(builder, ring, e_cur, e_w, z, region)
    return waist, list(reversed(leg1)), list(reversed(leg2))


# -- piece dispatch --------------------------------------------------------------


def _build_piece(
    builder: _Builder, genus: int, circles: Sequence[str],
    counts: dict[str, int], z: float, region: int, fresh_id: list[int],
) -> dict[str, list[int]]:
    """Build one region component; boundary rings keyed by circle id."""
    counts = dict(counts)

    def internal_name() -> str:
        fresh_id[0] += 1
        return f"_internal{fresh_id[0]}"

    def build(genus: int, circles: tuple[str, ...]) -> dict[str, list[int]]:
        b = len(circles)
        if genus == 0 and b == 1:
            cid = circles[0]
            n = counts[cid]
            return {cid: _disk_piece(builder, n, 2.0 / n, z, region)}
        if genus == 0 and b == 2:
            c1, c2 = circles
            n1, n2 = counts[c1], counts[c2]
            low, high = _tube_piece(builder, n1, 2.0 / n1, z, region)
            if n1 != n2:
                f_in, f_out = _funnel_part(builder, n1, 2.0 / n1, n2, 2.0 / n2,
                                           z, region)
                builder.merge_loops(high, f_in, f"tube adapter for {c2!r}")
                high = f_out
            return {c1: low, c2: high}
        if genus == 0 and b == 3:
            cw, c1, c2 = circles
            rings = _pants_piece(
                builder,
                (counts[cw], counts[c1], counts[c2]),
                (2.0 / counts[cw], 2.0 / counts[c1], 2.0 / counts[c2]),
                z, region,
            )
            return {cw: rings[0], c1: rings[1], c2: rings[2]}
        if genus == 0:
            inner = internal_name()
            counts[inner] = max(8, max(counts[c] for c in circles))
            first = build(0, (inner, circles[0], circles[1]))
            rest = build(0, (inner,) + tuple(circles[2:]))
            builder.merge_loops(first.pop(inner), rest.pop(inner),
                                "internal circle of a genus-0 piece")
            first.update(rest)
            return first
        if b == 1:
            cid = circles[0]
            n = counts[cid]
            return {cid: _frame_piece(builder, genus, n, 2.0 / n, z, region)}
        inner = internal_name()
        counts[inner] = max(8, max(counts[c] for c in circles))
        handle = build(genus, (inner,))
        rest = build(0, (inner,) + tuple(circles))
        builder.merge_loops(handle.pop(inner), rest.pop(inner),
                            "internal circle of a genus piece")
        return rest

    return build(genus, tuple(circles))


def _collar_part(
    builder: _Builder, collar_idx: int, n: int, R: int, z: float,
) -> tuple[list[int], list[int]]:
    """Flat collar cylinder [-1, 1] x circle; ring spacing 1/R in both the
    coordinate and the metric, ring edge 2/n.  Returns boundary rings at
    s = -1 and s = +1 in induced orientation."""
    dt = 2.0 / n
    ds = 1.0 / R
    diag = math.hypot(ds, dt)
    radius = n * dt / (2.0 * math.pi)
    grid = []
    for k in range(2 * R + 1):
        s = (k - R) / R
        ring = []
        for m in range(n):
            ang = 2.0 * math.pi * m / n
            v = builder.vertex(radius * math.cos(ang), radius * math.sin(ang), z + s)
            builder.collar_s[v] = s
            ring.append(v)
        if k == R:
            builder.gamma.update(ring)
        grid.append(ring)
    for k in range(2 * R):
        for m in range(n):
            m1 = (m + 1) % n
            a, b = grid[k][m], grid[k + 1][m]
            c, d_ = grid[k + 1][m1], grid[k][m1]
            builder.face(a, b, c, COLLAR, collar_idx)
            builder.face(a, c, d_, COLLAR, collar_idx)
            builder.set_len(a, b, ds)
            builder.set_len(a, d_, dt)
            builder.set_len(b, c, dt)
            builder.set_len(a, c, diag)
    return list(reversed(grid[0])), grid[2 * R]


# -- assembly ---------------------------------------------------------------------


def build_from_spec(spec: SurfaceSpec) -> LabeledSurfaceMesh:
    """Generate the labeled surface described by `spec`."""
    spec.validate()
    lvl = spec.refinement_level
    if lvl > MAX_LEVEL:
        raise MeshError(
            f"refinement level {lvl} exceeds the supported maximum {MAX_LEVEL}"
        )
    scale = 2 ** lvl
    counts = {cid: n * scale for cid, n in spec.circle_counts.items()}
    R = spec.collar_rings * scale
    builder = _Builder()
    collar_ends: dict[str, tuple[list[int], list[int]]] = {}
    collar_ids = sorted(counts)
    for idx, cid in enumerate(collar_ids):
        collar_ends[cid] = _collar_part(builder, idx, counts[cid], R, z=3.0 * idx)
    fresh = [0]
    z = -10.0
    for side, comps, region in (
        (0, spec.minus_components, MINUS),
        (1, spec.plus_components, PLUS),
    ):
        for genus, circles in comps:
            rings = _build_piece(builder, genus, circles, counts, z, region, fresh)
            for cid in circles:
                builder.merge_loops(rings[cid], collar_ends[cid][side],
                                    f"circle {cid!r}")
            z -= 10.0
    data = builder.finalize()
    lengths = _edge_length_array(data)
    mesh = LabeledSurfaceMesh(
        vertices=data["vertices"],
        faces=data["faces"],
        edge_lengths=lengths,
        face_region=data["face_region"],
        face_collar=data["face_collar"],
        collar_ids=collar_ids,
        collar_s=data["collar_s"],
        gamma_vertices=data["gamma"],
    )
    mesh.validate()
    return mesh


_PRESET_SPECS = {
    "sphere-equator": SurfaceSpec(
        minus_components=[(0, ("c0",))],
        plus_components=[(0, ("c0",))],
        circle_counts={"c0": 16},
    ),
    "sphere-two-circles": SurfaceSpec(
        minus_components=[(0, ("c0", "c1"))],
        plus_components=[(0, ("c0",)), (0, ("c1",))],
        circle_counts={"c0": 16, "c1": 16},
    ),
    "torus-two-meridians": SurfaceSpec(
        minus_components=[(0, ("c0", "c1"))],
        plus_components=[(0, ("c0", "c1"))],
        circle_counts={"c0": 16, "c1": 16},
    ),
    "genus2-separating": SurfaceSpec(
        minus_components=[(1, ("c0",))],
        plus_components=[(1, ("c0",))],
        circle_counts={"c0": 16},
    ),
}


def generate_preset(name: str, level: int = 0) -> LabeledSurfaceMesh:
    """Build one of the fixed example surfaces at the given refinement level.

    Vertex counts grow by a factor of about 4 per level; level is capped at
    6 to bound memory.
    """
    if name not in _PRESET_SPECS:
        raise MeshError(
            f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}"
        )
    if level > MAX_LEVEL:
        raise MeshError(f"level {level} exceeds the supported maximum {MAX_LEVEL}")
    if level < 0:
        raise MeshError("level must be nonnegative")
    base = _PRESET_SPECS[name]
    spec = dataclasses.replace(base, refinement_level=level)
    return build_from_spec(spec)


# -- analytic oracle meshes --------------------------------------------------------


def flat_torus_mesh(n: int) -> TriMesh:
    """Unit square flat torus, n x n grid with NE diagonals, exact lengths."""
    verts = np.zeros((n * n, 3))
    for i in range(n):
        for j in range(n):
            verts[i * n + j] = (i / n, j / n, 0.0)
    faces = []
    for i in range(n):
        for j in range(n):
            a = i * n + j
            b = ((i + 1) % n) * n + j
            c = ((i + 1) % n) * n + (j + 1) % n
            d = i * n + (j + 1) % n
            faces.append((a, b, c))
            faces.append((a, c, d))
    faces = np.array(faces, dtype=np.int64)
    mesh = TriMesh(verts, faces, edge_lengths=np.ones(3 * n * n))
    h = 1.0 / n
    lengths = np.empty(mesh.n_edges)
    for idx, (a, b) in enumerate(mesh.edges):
        ia, ja = divmod(int(a), n)
        ib, jb = divmod(int(b), n)
        di = min((ia - ib) % n, (ib - ia) % n)
        dj = min((ja - jb) % n, (jb - ja) % n)
        lengths[idx] = h * math.sqrt(di * di + dj * dj)
    mesh.edge_lengths = lengths
    return mesh


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
    (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
    (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
], dtype=float)
_ICO_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
], dtype=np.int64)


def round_sphere_mesh(level: int, radius: float = math.sqrt(2.0)) -> TriMesh:
    """Subdivided icosahedron projected to the sphere of the given radius.

    `level` counts refinement steps on top of a fixed base subdivision, so
    level 0 is already inside the asymptotic convergence regime.
    """
    subdiv = level + 3
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdiv):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for (a, b, c) in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = new_faces
    V = np.array(verts) * radius
    F = np.array(faces, dtype=np.int64)
    vol = float(np.einsum("ij,ij->", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]]))) / 6.0
    if vol < 0:
        F = F[:, [0, 2, 1]]
    mesh = TriMesh(V, F, edge_lengths=np.ones(3 * len(F) // 2))
    mesh.edge_lengths = np.linalg.norm(
        V[mesh.edges[:, 0]] - V[mesh.edges[:, 1]], axis=1
    )
    return mesh


def disk_mesh(n: int, rings: int, radius: float = 1.0) -> TriMesh:
    """Planar polar-grid disk of the given radius (analytic Poisson tests)."""
    builder = _Builder()
    edge = 2.0 * radius * math.sin(math.pi / n)
    _disk_piece(builder, n, edge, 0.0, PLUS, rings=rings)
    data = builder.finalize()
    lengths = _edge_length_array(data)
    mesh = TriMesh(data["vertices"], data["faces"], lengths)
    mesh.validate(require_closed=False)
    return mesh
