"""The indexed boundary representation: quantization, canonical ordering and
structural validation of the ``(vertices, edges, faces)`` triple.

Vertices are stored as integer ``(z, y, x)`` triples so that lexicographic
tuple order matches the token grammar.  Edges are ascending tuples of 2
(line) or 3 (arc) vertex indices; faces are ascending tuples of edge indices.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_BITS = 6
MAX_FACES = 130
MIN_FACES = 8
MAX_TOKENS = 200


class StructureError(ValueError):
    """Input cannot be turned into a well-formed indexed B-rep."""


class MergedVertexCollision(StructureError):
    """Distinct input points fell into the same quantization bin."""

    def __init__(self, message, pairs=()):
        super().__init__(message)
        self.pairs = tuple(pairs)


@dataclass(frozen=True)
class QuantGrid:
    """Uniform quantization grid plus the box the model was normalized from.

    Normalization scales the tight bounding box uniformly so that its longest
    side spans [0, 1] and centers the shorter sides inside the unit cube.
    """

    bits: int = DEFAULT_BITS
    bbox_min: tuple = (0.0, 0.0, 0.0)
    bbox_max: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not (2 <= int(self.bits) <= 16) or int(self.bits) != self.bits:
            raise ValueError(f"bits must be an integer in [2, 16], got {self.bits}")
        lo = tuple(float(v) for v in self.bbox_min)
        hi = tuple(float(v) for v in self.bbox_max)
        if len(lo) != 3 or len(hi) != 3 or not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("bbox must hold 3 finite values per corner")
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError("bbox_max must be >= bbox_min")
        object.__setattr__(self, "bits", int(self.bits))
        object.__setattr__(self, "bbox_min", lo)
        object.__setattr__(self, "bbox_max", hi)

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def scale(self) -> float:
        ext = max(h - l for l, h in zip(self.bbox_min, self.bbox_max))
        return ext if ext > 0 else 1.0

    @property
    def shift(self) -> np.ndarray:
        ext = np.subtract(self.bbox_max, self.bbox_min)
        return (1.0 - ext / self.scale) / 2.0

    def normalize(self, points) -> np.ndarray:
        """Model-space ``(x, y, z)`` points to unit-cube coordinates."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        return (pts - np.asarray(self.bbox_min)) / self.scale + self.shift

    def denormalize(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        return (pts - self.shift) * self.scale + np.asarray(self.bbox_min)

    def bin(self, c):
        """Unit-interval coordinate(s) to bin index: ``min(floor(c * L), L - 1)``."""
        b = np.floor(np.asarray(c, dtype=float) * self.levels).astype(np.int64)
        return np.clip(b, 0, self.levels - 1)

    def bin_center(self, b):
        return (np.asarray(b, dtype=float) + 0.5) / self.levels


UNIT_GRID = QuantGrid()


def quantize(points, bits: int = DEFAULT_BITS) -> tuple[QuantGrid, list[tuple[int, int, int]]]:
    """Normalize real ``(x, y, z)`` points and quantize them.

    Returns the grid (carrying the source bounding box) and one ``(z, y, x)``
    integer triple per input point, in input order.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("cannot quantize an empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    grid = QuantGrid(bits, tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))
    bins = grid.bin(grid.normalize(pts))
    return grid, [(int(b[2]), int(b[1]), int(b[0])) for b in bins]


def dequantize(grid: QuantGrid, triple) -> np.ndarray:
    """Bin center of a ``(z, y, x)`` triple, mapped back to model ``(x, y, z)``."""
    z, y, x = (int(v) for v in triple)
    if not all(0 <= v < grid.levels for v in (z, y, x)):
        raise ValueError(f"vertex {tuple(triple)} out of range for {grid.bits}-bit grid")
    unit_pt = grid.bin_center([x, y, z])
    return grid.denormalize(unit_pt)[0]


def dequantize_all(grid: QuantGrid, vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=np.int64).reshape(-1, 3)
    if v.size and (v.min() < 0 or v.max() >= grid.levels):
        raise ValueError(f"vertex out of range for {grid.bits}-bit grid")
    return grid.denormalize(grid.bin_center(v[:, ::-1]))


@dataclass(frozen=True)
class IndexedBRep:
    """Quantized vertices, hyperedges and faces.

    Construction does not validate; use :func:`canonicalize` to build one
    from arbitrary input and :func:`structural_check` to audit one.
    """

    vertices: tuple = ()
    edges: tuple = ()
    faces: tuple = ()
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(tuple(int(c) for c in v) for v in self.vertices))
        object.__setattr__(self, "edges", tuple(tuple(int(i) for i in e) for e in self.edges))
        object.__setattr__(self, "faces", tuple(tuple(int(i) for i in f) for f in self.faces))

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def n_arcs(self) -> int:
        return sum(1 for e in self.edges if len(e) == 3)

    @property
    def n_lines(self) -> int:
        return sum(1 for e in self.edges if len(e) == 2)

    def __repr__(self):
        return f"IndexedBRep(|V|={len(self.vertices)}, |E|={len(self.edges)}, |F|={len(self.faces)}, bits={self.bits})"


def canonicalize(vertices, edges, faces, bits: int = DEFAULT_BITS, on_duplicate: str = "merge") -> IndexedBRep:
    """Sort and deduplicate a raw ``(V, E, F)`` triple into canonical form.

    Vertices are ordered by ``(z, y, x)``; every edge and face is sorted
    ascending and the edge and face lists are sorted lexicographically.
    Exact duplicate vertices, edges and faces are merged (indices remapped).

    Args:
        on_duplicate: ``"merge"`` merges repeated vertex triples, ``"raise"``
            raises :class:`MergedVertexCollision` instead.

    Raises:
        StructureError: out-of-range indices, bad hyperedge cardinality, an
            edge used by more than two faces, or a face with < 2 edges.
    """
    if on_duplicate not in ("merge", "raise"):
        raise ValueError(f"on_duplicate must be 'merge' or 'raise', got {on_duplicate!r}")
    levels = 1 << bits
    verts = [tuple(int(c) for c in v) for v in vertices]
    for i, v in enumerate(verts):
        if len(v) != 3:
            raise StructureError(f"vertex {i} does not have 3 coordinates")
        if not all(0 <= c < levels for c in v):
            raise StructureError(f"vertex {i} = {v} outside the {bits}-bit grid")

    uniq = sorted(set(verts))
    if on_duplicate == "raise" and len(uniq) != len(verts):
        seen: dict = {}
        pairs = []
        for i, v in enumerate(verts):
            if v in seen:
                pairs.append((seen[v], i))
            seen.setdefault(v, i)
        raise MergedVertexCollision(f"{len(pairs)} duplicate vertices after quantization", pairs)
    vpos = {v: i for i, v in enumerate(uniq)}
    vmap = [vpos[v] for v in verts]

    new_edges = []
    for ei, e in enumerate(edges):
        e = [int(i) for i in e]
        if len(e) not in (2, 3):
            raise StructureError(f"edge {ei} has cardinality {len(e)}; expected 2 (line) or 3 (arc)")
        for i in e:
            if not 0 <= i < len(verts):
                raise StructureError(f"edge {ei} references missing vertex {i}")
        mapped = tuple(sorted(vmap[i] for i in e))
        if len(set(mapped)) != len(mapped):
            raise StructureError(f"edge {ei} repeats a vertex")
        new_edges.append(mapped)
    uniq_edges = sorted(set(new_edges))
    epos = {e: i for i, e in enumerate(uniq_edges)}
    emap = [epos[e] for e in new_edges]

    new_faces = set()
    for fi, f in enumerate(faces):
        f = [int(i) for i in f]
        for i in f:
            if not 0 <= i < len(new_edges):
                raise StructureError(f"face {fi} references missing edge {i}")
        mapped = tuple(sorted(set(emap[i] for i in f)))
        if len(mapped) < 2:
            raise StructureError(f"face {fi} has fewer than 2 distinct edges")
        new_faces.add(mapped)
    uniq_faces = sorted(new_faces)
    use = Counter(i for f in uniq_faces for i in f)
    over = sorted(i for i, c in use.items() if c > 2)
    if over:
        raise StructureError(f"edges {over} are shared by more than two faces")
    return IndexedBRep(tuple(uniq), tuple(uniq_edges), tuple(uniq_faces), bits)


def from_points(points, edges, faces, bits: int = DEFAULT_BITS, on_collision: str = "raise"):
    """Quantize real ``(x, y, z)`` points and canonicalize the topology.

    Distinct input points that share a bin raise
    :class:`MergedVertexCollision` unless ``on_collision="merge"``.
    Returns ``(grid, brep)``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    grid, triples = quantize(pts, bits)
    if on_collision == "raise":
        first: dict = {}
        pairs = []
        for i, t in enumerate(triples):
            j = first.setdefault(t, i)
            if j != i and not np.array_equal(pts[i], pts[j]):
                pairs.append((j, i))
        if pairs:
            raise MergedVertexCollision(f"{len(pairs)} distinct points share a quantization bin", pairs)
    return grid, canonicalize(triples, edges, faces, bits=bits, on_duplicate="merge")


class Violation(NamedTuple):
    entity: str  # "vertex" | "edge" | "face"
    index: int
    rule: str

    def __str__(self):
        return f"{self.entity} {self.index}: {self.rule}"


def structural_check(b: IndexedBRep) -> list[Violation]:
    """List every broken invariant of an indexed B-rep (empty when valid)."""
    out: list[Violation] = []
    levels = b.levels
    nv, ne = len(b.vertices), len(b.edges)
    for i, v in enumerate(b.vertices):
        if len(v) != 3 or not all(0 <= c < levels for c in v):
            out.append(Violation("vertex", i, "coordinate out of range"))
        if i and v <= b.vertices[i - 1]:
            rule = "duplicate vertex" if v == b.vertices[i - 1] else "vertices not sorted by (z, y, x)"
            out.append(Violation("vertex", i, rule))
    for i, e in enumerate(b.edges):
        if len(e) not in (2, 3):
            out.append(Violation("edge", i, f"cardinality {len(e)} not in {{2, 3}}"))
        if any(not 0 <= k < nv for k in e):
            out.append(Violation("edge", i, "vertex index out of range"))
        if any(e[k] >= e[k + 1] for k in range(len(e) - 1)):
            out.append(Violation("edge", i, "vertex indices not strictly ascending"))
        if i and e <= b.edges[i - 1]:
            rule = "duplicate edge" if e == b.edges[i - 1] else "edges not sorted"
            out.append(Violation("edge", i, rule))
    use: Counter = Counter()
    for i, f in enumerate(b.faces):
        if len(f) < 2:
            out.append(Violation("face", i, "fewer than 2 edges"))
        if any(not 0 <= k < ne for k in f):
            out.append(Violation("face", i, "edge index out of range"))
        if len(set(f)) != len(f):
            out.append(Violation("face", i, "duplicate edge in face"))
        elif any(f[k] >= f[k + 1] for k in range(len(f) - 1)):
            out.append(Violation("face", i, "edge indices not strictly ascending"))
        if i and f <= b.faces[i - 1]:
            rule = "duplicate face" if f == b.faces[i - 1] else "faces not sorted"
            out.append(Violation("face", i, rule))
        use.update(set(f))
    for k in sorted(k for k, c in use.items() if c > 2):
        out.append(Violation("edge", k, "edge shared by >2 faces"))
    return out


def token_lengths(b: IndexedBRep) -> tuple[int, int, int]:
    """Lengths of the flattened vertex, edge and face sequences (separators included)."""
    nv = 3 * len(b.vertices) + 1
    ne = sum(len(e) for e in b.edges) + max(len(b.edges) - 1, 0) + 1
    nf = sum(len(f) for f in b.faces) + max(len(b.faces) - 1, 0) + 1
    return nv, ne, nf


class FilterDecision(NamedTuple):
    keep: bool
    reason: str


def corpus_filter(b: IndexedBRep, max_tokens: int = MAX_TOKENS, merged_vertices: bool = False,
                  min_faces: int = MIN_FACES, max_faces: int = MAX_FACES) -> FilterDecision:
    """Dataset filter: drop trivial, overly complex, merged or too-long models.

    The token count is the total over the three flattened sequences.
    """
    nf = len(b.faces)
    if nf < min_faces:
        return FilterDecision(False, f"trivial (<{min_faces} faces)")
    if nf > max_faces:
        return FilterDecision(False, f">{max_faces} faces")
    if merged_vertices:
        return FilterDecision(False, "merged vertices after quantization")
    total = sum(token_lengths(b))
    if total > max_tokens:
        return FilterDecision(False, f">{max_tokens} tokens ({total})")
    return FilterDecision(True, "ok")
