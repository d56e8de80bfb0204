"""Procedural solids on the integer quantization grid.

Every family is built from integer grid coordinates, so vertices survive
quantization exactly.  Arc mid-points use Pythagorean offsets (3k, 4k, 5k)
or exact half-sweep points so circles through them are exact.

Families: ``box`` (planes), ``pocket`` (planes with inner wires),
``fillet`` (cylinders), ``cone``, ``sphere`` and ``torus``.
"""
from __future__ import annotations

import itertools

import numpy as np

from .core import DEFAULT_BITS, IndexedBRep, canonicalize

FAMILIES = ("box", "pocket", "fillet", "cone", "sphere", "torus")


class _Builder:
    """Accumulates grid vertices, hyperedges and faces with dedup."""

    def __init__(self):
        self.verts: list[tuple[int, int, int]] = []
        self._vid: dict = {}
        self.edges: list[tuple] = []
        self._eid: dict = {}
        self.faces: list[list[int]] = []

    def v(self, x, y, z) -> int:
        key = (int(x), int(y), int(z))
        if key not in self._vid:
            self._vid[key] = len(self.verts)
            self.verts.append(key)
        return self._vid[key]

    def _edge(self, ids) -> int:
        key = frozenset(ids)
        if key not in self._eid:
            self._eid[key] = len(self.edges)
            self.edges.append(tuple(ids))
        return self._eid[key]

    def line(self, a, b) -> int:
        return self._edge((self.v(*a), self.v(*b)))

    def arc(self, a, m, b) -> int:
        return self._edge((self.v(*a), self.v(*m), self.v(*b)))

    def face(self, edges) -> None:
        self.faces.append(list(edges))

    def build(self, bits: int = DEFAULT_BITS, transform=None) -> IndexedBRep:
        verts = self.verts if transform is None else [transform(p) for p in self.verts]
        return canonicalize([(z, y, x) for x, y, z in verts], self.edges, self.faces, bits=bits)


def _seg(b: _Builder, seg, z):
    """Edge for one profile segment lifted to height ``z``."""
    if len(seg) == 2:
        return b.line((*seg[0], z), (*seg[1], z))
    return b.arc((*seg[0], z), (*seg[1], z), (*seg[2], z))


def extrude(b: _Builder, profile, z0: int, z1: int, cap_bottom=True, cap_top=True, top_holes=(), bottom_holes=()):
    """Prism over a closed 2D profile of lines ``(p, q)`` and arcs ``(p, mid, q)``.

    Returns the bottom and top profile edge ids.
    """
    bottom = [_seg(b, s, z0) for s in profile]
    top = [_seg(b, s, z1) for s in profile]
    for k, s in enumerate(profile):
        p, q = s[0], s[-1]
        b.face([bottom[k], top[k], b.line((*p, z0), (*p, z1)), b.line((*q, z0), (*q, z1))])
    if cap_bottom:
        b.face(bottom + [e for h in bottom_holes for e in h])
    if cap_top:
        b.face(top + [e for h in top_holes for e in h])
    return bottom, top


def rect(x0, y0, x1, y1):
    return [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))]


def _transform(rng, levels: int):
    """Random axis permutation and mirroring of grid points."""
    perm = [int(i) for i in rng.permutation(3)]
    flip = [bool(f) for f in rng.integers(0, 2, size=3)]

    def t(p):
        q = [p[i] for i in perm]
        return tuple(levels - 1 - c if f else c for c, f in zip(q, flip))

    return t


def _span(rng, lo, hi, min_len):
    a = int(rng.integers(lo, hi - min_len + 1))
    b = int(rng.integers(a + min_len, hi + 1))
    return a, b


def box(x0, y0, z0, x1, y1, z1, bits=DEFAULT_BITS) -> IndexedBRep:
    b = _Builder()
    extrude(b, rect(x0, y0, x1, y1), z0, z1)
    return b.build(bits)


def _box(rng, bits):
    hi = (1 << bits) - 1
    (x0, x1), (y0, y1), (z0, z1) = (_span(rng, 0, hi, 3) for _ in range(3))
    return box(x0, y0, z0, x1, y1, z1, bits)


def _pocket(rng, bits):
    hi = (1 << bits) - 1
    x0, x1 = _span(rng, 0, hi, 16)
    y0, y1 = _span(rng, 0, hi, 10)
    z0, z1 = _span(rng, 0, hi, 6)
    b = _Builder()
    n_pockets = int(rng.integers(1, 3))
    holes = []
    # split the top face into n side-by-side slots, one pocket per slot
    bounds = np.linspace(x0, x1, n_pockets + 1).astype(int)
    for k in range(n_pockets):
        sx0, sx1 = int(bounds[k]) + 2, int(bounds[k + 1]) - 2
        if k > 0:
            sx0 += 1
        px0, px1 = _span(rng, sx0, sx1, 2)
        py0, py1 = _span(rng, y0 + 2, y1 - 2, 2)
        depth = int(rng.integers(2, z1 - z0 - 1))
        rim, _ = extrude(b, rect(px0, py0, px1, py1), z1, z1 - depth, cap_bottom=False, cap_top=True)
        holes.append(rim)
    extrude(b, rect(x0, y0, x1, y1), z0, z1, top_holes=holes)
    return b.build(bits, _transform(rng, 1 << bits))


def _corner_profile(x0, y0, x1, y1, fillets):
    """Rectangle profile with quarter-circle fillets at the flagged corners.

    ``fillets`` maps corner index (0..3, counter-clockwise from min-min) to
    ``k``; the fillet radius is ``5k`` with mid-point offset ``(4k, 3k)``.
    """
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    inward = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
    pieces = []
    for c, (cx, cy) in enumerate(corners):
        k = fillets.get(c)
        if not k:
            pieces.append(((cx, cy),))
            continue
        sx, sy = inward[c]
        r = 5 * k
        ox, oy = cx + sx * r, cy + sy * r
        # incoming edge direction decides which tangent point comes first
        if c in (0, 2):
            p, q = (cx, oy), (ox, cy)
            mid = (ox - sx * 3 * k, oy - sy * 4 * k)
        else:
            p, q = (ox, cy), (cx, oy)
            mid = (ox - sx * 4 * k, oy - sy * 3 * k)
        pieces.append((p, mid, q))
    profile = []
    for c in range(4):
        cur, nxt = pieces[c], pieces[(c + 1) % 4]
        if len(cur) == 3:
            profile.append(cur)
        profile.append((cur[-1], nxt[0]))
    return profile


def _fillet(rng, bits):
    hi = (1 << bits) - 1
    x0, x1 = _span(rng, 0, hi, 24)
    y0, y1 = _span(rng, 0, hi, 24)
    z0, z1 = _span(rng, 0, hi, 3)
    kmax = max(1, (min(x1 - x0, y1 - y0) - 2) // 10)
    n = int(rng.integers(1, 5))
    corners = sorted(int(c) for c in rng.choice(4, size=n, replace=False))
    fillets = {c: int(rng.integers(1, kmax + 1)) for c in corners}
    b = _Builder()
    extrude(b, _corner_profile(x0, y0, x1, y1, fillets), z0, z1)
    return b.build(bits, _transform(rng, 1 << bits))


def frustum(cx, cy, z0, z1, r0, r1, full=True, bits=DEFAULT_BITS) -> IndexedBRep:
    """Frustum of a cone with radius ``r0`` at ``z0`` and ``r1`` at ``z1``.

    ``full`` builds both halves (split at the xz-plane); otherwise the half
    with ``y >= cy`` closed by a planar back face.
    """
    b = _Builder()

    def half(r, z, sign):
        return b.arc((cx + r, cy, z), (cx, cy + sign * r, z), (cx - r, cy, z))

    lo_a, hi_a = half(r0, z0, 1), half(r1, z1, 1)
    right = b.line((cx + r0, cy, z0), (cx + r1, cy, z1))
    left = b.line((cx - r0, cy, z0), (cx - r1, cy, z1))
    b.face([lo_a, hi_a, right, left])
    if full:
        lo_b, hi_b = half(r0, z0, -1), half(r1, z1, -1)
        b.face([lo_b, hi_b, right, left])
        b.face([lo_a, lo_b])
        b.face([hi_a, hi_b])
    else:
        lo_d = b.line((cx + r0, cy, z0), (cx - r0, cy, z0))
        hi_d = b.line((cx + r1, cy, z1), (cx - r1, cy, z1))
        b.face([lo_d, hi_d, right, left])
        b.face([lo_a, lo_d])
        b.face([hi_a, hi_d])
    return b.build(bits)


def _cone(rng, bits):
    hi = (1 << bits) - 1
    r0 = int(rng.integers(4, hi // 2 - 2))
    r1 = int(rng.integers(2, r0 - 1))
    cx = int(rng.integers(r0, hi - r0 + 1))
    cy = int(rng.integers(r0, hi - r0 + 1))
    z0, z1 = _span(rng, 0, hi, 3)
    if rng.random() < 0.5:
        z0, z1 = z1, z0
    full = bool(rng.random() < 0.5)
    t = _transform(rng, 1 << bits)
    brep = frustum(cx, cy, z0, z1, r0, r1, full, bits)
    return _apply(brep, t, bits)


def _apply(brep: IndexedBRep, t, bits) -> IndexedBRep:
    verts = [t((x, y, z)) for z, y, x in brep.vertices]
    return canonicalize([(z, y, x) for x, y, z in verts], brep.edges, brep.faces, bits=bits)


def octant(cx, cy, cz, k, signs=(1, 1, 1), bits=DEFAULT_BITS) -> IndexedBRep:
    """Solid octant of a sphere of radius ``5k`` centered at ``(cx, cy, cz)``."""
    sx, sy, sz = signs
    c = np.array([cx, cy, cz])
    d = np.diag([sx, sy, sz])
    r = 5 * k

    def p(x, y, z):
        return tuple(int(v) for v in c + d @ np.array([x, y, z]))

    b = _Builder()
    a, bb, cc = p(r, 0, 0), p(0, r, 0), p(0, 0, r)
    o = p(0, 0, 0)
    ab = b.arc(a, p(4 * k, 3 * k, 0), bb)
    bc = b.arc(bb, p(0, 4 * k, 3 * k), cc)
    ca = b.arc(cc, p(3 * k, 0, 4 * k), a)
    oa, ob, oc = b.line(o, a), b.line(o, bb), b.line(o, cc)
    b.face([ab, bc, ca])
    b.face([oa, ob, ab])
    b.face([ob, oc, bc])
    b.face([oc, oa, ca])
    return b.build(bits)


def _sphere(rng, bits):
    hi = (1 << bits) - 1
    k = int(rng.integers(1, (hi - 1) // 5 + 1))
    r = 5 * k
    signs = tuple(int(s) for s in rng.choice([-1, 1], size=3))
    lo = [r if s < 0 else 0 for s in signs]
    up = [hi - r if s > 0 else hi for s in signs]
    cx, cy, cz = (int(rng.integers(lo[i], up[i] + 1)) for i in range(3))
    return octant(cx, cy, cz, k, signs, bits)


def ring(cx, cy, cz, major, minor, bits=DEFAULT_BITS) -> IndexedBRep:
    """Torus split into four patches along two meridians and two parallels."""
    big, small = major, minor
    b = _Builder()

    def p(x, y, z):
        return (cx + x, cy + y, cz + z)

    corners = {(sx, sz): p(sx * big, 0, sz * small) for sx in (1, -1) for sz in (1, -1)}
    par = {}
    for sz in (1, -1):
        for sy in (1, -1):
            par[sz, sy] = b.arc(corners[1, sz], p(0, sy * big, sz * small), corners[-1, sz])
    mer = {}
    for sx in (1, -1):
        for side, rad in (("out", big + small), ("in", big - small)):
            mer[sx, side] = b.arc(corners[sx, 1], p(sx * rad, 0, 0), corners[sx, -1])
    for sy in (1, -1):
        for side in ("out", "in"):
            b.face([par[1, sy], par[-1, sy], mer[1, side], mer[-1, side]])
    return b.build(bits)


def _torus(rng, bits):
    hi = (1 << bits) - 1
    small = int(rng.integers(2, 7))
    big = int(rng.integers(small + 3, (hi - 2 * small) // 2 + 1))
    cx = int(rng.integers(big + small, hi - big - small + 1))
    cy = int(rng.integers(big + small, hi - big - small + 1))
    cz = int(rng.integers(small, hi - small + 1))
    return _apply(ring(cx, cy, cz, big, small, bits), _transform(rng, 1 << bits), bits)


_MAKERS = {"box": _box, "pocket": _pocket, "fillet": _fillet, "cone": _cone, "sphere": _sphere, "torus": _torus}


def generate(family: str, n: int, seed: int = 0, bits: int = DEFAULT_BITS) -> list[IndexedBRep]:
    """``n`` random solids of one family, deterministic in ``seed``."""
    if family not in _MAKERS:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if bits != DEFAULT_BITS:
        raise ValueError(f"fixtures are laid out on the {DEFAULT_BITS}-bit grid")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(FAMILIES.index(family),)))
    return [_MAKERS[family](rng, bits) for _ in range(n)]


def corpus(n_per_family: int = 100, seed: int = 0) -> list[IndexedBRep]:
    return list(itertools.chain.from_iterable(generate(f, n_per_family, seed) for f in FAMILIES))


def cube(lo: int = 10, hi: int = 50) -> IndexedBRep:
    return box(lo, lo, lo, hi, hi, hi)


def half_cylinder(cx=32, cy=20, z0=10, z1=50, r=20) -> IndexedBRep:
    """Extruded half-disk: two planar caps, a planar back face and a cylindrical face."""
    b = _Builder()
    extrude(b, [((cx + r, cy), (cx, cy + r), (cx - r, cy)), ((cx - r, cy), (cx + r, cy))], z0, z1)
    return b.build()


def canonical_fixtures() -> dict[str, IndexedBRep]:
    """One fixture per surface type, keyed by the type of its curved face."""
    return {
        "plane": cube(),
        "cylinder": half_cylinder(),
        "cone": frustum(32, 32, 8, 48, 20, 8, full=True),
        "sphere": octant(12, 12, 12, 8),
        "torus": ring(32, 32, 32, 18, 6),
    }


def open_box() -> IndexedBRep:
    """Cube with its top face removed."""
    c = cube()
    top = max(range(len(c.faces)), key=lambda i: min(c.vertices[v][0] for e in c.faces[i] for v in c.edges[e]))
    return IndexedBRep(c.vertices, c.edges, tuple(f for i, f in enumerate(c.faces) if i != top), c.bits)


def bowtie() -> IndexedBRep:
    """Single planar face whose four-line wire crosses itself."""
    b = _Builder()
    a, c, d, e = (10, 10, 5), (40, 40, 5), (40, 10, 5), (10, 40, 5)
    b.face([b.line(a, c), b.line(c, d), b.line(d, e), b.line(e, a)])
    return b.build()


def permuted(b: IndexedBRep, rng: np.random.Generator) -> IndexedBRep:
    """``b`` rebuilt from shuffled vertex, edge, face and within-record orders."""
    pv = rng.permutation(len(b.vertices))
    new_v = np.argsort(pv)
    pe = rng.permutation(len(b.edges))
    new_e = np.argsort(pe)
    verts = [b.vertices[i] for i in pv]
    edges = [[int(new_v[v]) for v in rng.permutation(b.edges[i])] for i in pe]
    faces = [[int(new_e[e]) for e in rng.permutation(b.faces[i])] for i in rng.permutation(len(b.faces))]
    return canonicalize(verts, edges, faces, bits=b.bits)
