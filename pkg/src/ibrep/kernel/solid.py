"""Whole-model reconstruction, shell sewing and the four validity checks."""
from __future__ import annotations

import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import IndexedBRep, QuantGrid
from ..geom import GeometryError, Tolerances, polyline_self_intersects
from .curves import CurveGeom, build_curve, vertex_positions
from .faces import TriangulatedFace, build_face
from .surfaces import infer_surface
from .wires import OpenWire, assemble_wires


@dataclass
class FaceResult:
    index: int
    curves: list  # CurveGeom per face edge, in the face's edge order; None if unbuildable
    edge_ids: tuple
    wires: list = field(default_factory=list)
    surface: object = None
    mesh: TriangulatedFace | None = None
    error: str | None = None
    stage: str | None = None  # where construction stopped: curves, wires, surface, face
    sense: int = 1

    @property
    def n_triangles(self) -> int:
        return 0 if self.mesh is None else len(self.mesh.triangles)

    @property
    def surface_kind(self) -> str | None:
        return None if self.surface is None else self.surface.kind

    def edge_uses(self):
        """``(global edge id, +1 or -1)`` for each oriented edge, after applying the sense."""
        for w in self.wires:
            for pos, rev in w.edges:
                yield self.edge_ids[pos], (-1 if rev else 1) * self.sense


@dataclass
class ValidityReport:
    triangulatable: bool
    wire_ordering: bool
    no_self_intersection: bool
    no_bad_edges: bool
    closed_solid: bool
    faces: list = field(default_factory=list)  # one dict per face
    bad_edges: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.triangulatable and self.wire_ordering and self.no_self_intersection and self.no_bad_edges

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "triangulatable": self.triangulatable,
            "wire_ordering": self.wire_ordering,
            "no_self_intersection": self.no_self_intersection,
            "no_bad_edges": self.no_bad_edges,
            "closed_solid": self.closed_solid,
            "bad_edges": list(self.bad_edges),
            "faces": list(self.faces),
            "notes": list(self.notes),
        }


@dataclass
class SolidModel:
    brep: IndexedBRep
    vertices: np.ndarray  # normalized (x, y, z) per quantized vertex
    curves: list  # CurveGeom or None per edge
    faces: list  # FaceResult per face
    shells: list = field(default_factory=list)  # sorted face index lists
    tol: Tolerances = field(default_factory=Tolerances)
    report: ValidityReport | None = None

    def mesh(self, grid: QuantGrid | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated triangle soup, outward-wound where sewing succeeded.

        With ``grid`` the positions are mapped back to model space.
        """
        pts, tris, off = [], [], 0
        for f in self.faces:
            if f.mesh is None or not len(f.mesh.triangles):
                continue
            t = f.mesh.triangles if f.sense > 0 else f.mesh.triangles[:, ::-1]
            pts.append(f.mesh.points)
            tris.append(t + off)
            off += len(f.mesh.points)
        if not pts:
            return np.empty((0, 3)), np.empty((0, 3), dtype=np.int64)
        p = np.concatenate(pts)
        if grid is not None:
            p = grid.denormalize(p)
        return p, np.concatenate(tris)


def _build_one(b: IndexedBRep, fi: int, curves: list, curve_errors: dict, tol: Tolerances) -> FaceResult:
    ids = tuple(b.faces[fi])
    fr = FaceResult(fi, [curves[e] for e in ids], ids)
    bad = [e for e in ids if e in curve_errors]
    if bad:
        fr.error, fr.stage = f"edge {bad[0]}: {curve_errors[bad[0]]}", "curves"
        return fr
    stage = "wires"
    try:
        fr.wires = assemble_wires(fr.curves, tol)
        stage = "surface"
        fr.surface = infer_surface(fr.curves, tol)
        stage = "face"
        fr.mesh = build_face(fr.wires, fr.curves, fr.surface, tol)
        fr.wires = fr.mesh.wires
    except GeometryError as exc:
        fr.error, fr.stage = f"{type(exc).__name__}: {exc}", stage
    return fr


def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("IBREP_THREADS", "1")))
    except ValueError:
        return 1


def reconstruct(b: IndexedBRep, tol: Tolerances = Tolerances(), workers: int | None = None) -> SolidModel:
    """Curves, wires, surfaces and triangulated faces, sewn into shells and validated.

    Per-face failures are recorded rather than raised.  Faces are built
    concurrently when ``workers`` (or ``IBREP_THREADS``) exceeds 1; results
    do not depend on the thread count.
    """
    pts = vertex_positions(b)
    curves: list[CurveGeom | None] = []
    curve_errors = {}
    for i, e in enumerate(b.edges):
        try:
            curves.append(build_curve(pts, i, e, tol))
        except (GeometryError, ValueError) as exc:
            curves.append(None)
            curve_errors[i] = f"{type(exc).__name__}: {exc}"
    n = _threads(workers)
    idx = range(len(b.faces))
    if n > 1 and len(b.faces) > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            faces = list(ex.map(lambda fi: _build_one(b, fi, curves, curve_errors, tol), idx))
    else:
        faces = [_build_one(b, fi, curves, curve_errors, tol) for fi in idx]
    model = SolidModel(b, pts, curves, faces, tol=tol)
    sew(model)
    model.report = validate(model, tol)
    return model


def _edge_table(faces) -> dict:
    table = defaultdict(list)  # edge id -> [(face index, raw direction)]
    for f in faces:
        for w in f.wires:
            for pos, rev in w.edges:
                table[f.edge_ids[pos]].append((f.index, -1 if rev else 1))
    return table


def sew(model: SolidModel) -> list:
    """Group faces into shells over shared edges and orient them consistently.

    Face senses are propagated so that every shared edge is traversed in
    opposite directions by its two faces.  A shell in which every edge is
    shared is then flipped if needed so its enclosed volume is positive.
    Returns the shells as sorted lists of face indices.
    """
    faces = {f.index: f for f in model.faces if f.wires}
    table = _edge_table(faces.values())
    nbrs = defaultdict(list)
    for e, uses in table.items():
        if len(uses) == 2:
            (f, df), (g, dg) = uses
            if f != g:
                nbrs[f].append((g, -df * dg))
                nbrs[g].append((f, -df * dg))
    seen = {}
    shells = []
    for start in sorted(faces):
        if start in seen:
            continue
        seen[start] = 1
        shell, queue = [start], [start]
        while queue:
            f = queue.pop(0)
            for g, rel in nbrs[f]:
                if g not in seen:
                    seen[g] = seen[f] * rel
                    shell.append(g)
                    queue.append(g)
        shells.append(sorted(shell))
    for fi, s in seen.items():
        faces[fi].sense = s
    for shell in shells:
        edges = {e for fi in shell for e, _ in faces[fi].edge_uses()}
        if all(len(table[e]) == 2 for e in edges) and _signed_volume([faces[fi] for fi in shell]) < 0:
            for fi in shell:
                faces[fi].sense = -faces[fi].sense
    model.shells = shells
    return shells


def _signed_volume(faces) -> float:
    vol = 0.0
    for f in faces:
        if f.mesh is None or not len(f.mesh.triangles):
            continue
        t = f.mesh.triangles if f.sense > 0 else f.mesh.triangles[:, ::-1]
        p = f.mesh.points
        vol += float(np.einsum("ij,ij->i", p[t[:, 0]], np.cross(p[t[:, 1]], p[t[:, 2]])).sum()) / 6.0
    return vol


def validate(model: SolidModel, tol: Tolerances = Tolerances()) -> ValidityReport:
    """The four validity checks plus the closed-solid flag.

    Results depend only on the set of faces, not their order.
    """
    faces = sorted(model.faces, key=lambda f: f.index)
    triangulatable = bool(faces) and all(f.n_triangles > 0 for f in faces)
    ordering = True
    crossing = False
    for f in faces:
        if f.stage == "curves" or isinstance(f.error, str) and f.error.startswith(OpenWire.__name__):
            ordering = False
        for w in f.wires:
            ends = [(c.geom.end, c.geom.start) if rev else (c.geom.start, c.geom.end)
                    for c, rev in ((f.curves[pos], rev) for pos, rev in w.edges)]
            for k in range(len(ends)):
                if np.linalg.norm(ends[k][1] - ends[(k + 1) % len(ends)][0]) > tol.wire_eps:
                    ordering = False
            if polyline_self_intersects(w.polylines(f.curves, tol.arc_samples), tol.wire_eps):
                crossing = True
    table = defaultdict(list)
    for f in faces:
        for e, d in f.edge_uses():
            table[e].append(d)
    bad = sorted(e for e, ds in table.items() if len(ds) > 2 or (len(ds) == 2 and ds[0] == ds[1]))
    used = {e for f in faces for e in f.edge_ids}
    closed = bool(faces) and all(len(table.get(e, ())) == 2 for e in range(len(model.curves))) \
        and used == set(range(len(model.curves)))
    face_rows = []
    notes = []
    for f in faces:
        row = {"face": f.index, "surface": f.surface_kind, "triangles": f.n_triangles,
               "wires": len(f.wires), "error": f.error}
        fnotes = list(f.surface.notes) if f.surface is not None else []
        if f.mesh is not None:
            fnotes += f.mesh.notes
        if any(c is not None and c.kind == "arc" and c.ambiguous for c in f.curves):
            fnotes.append("ambiguous arc midpoint resolved to the smallest sweep")
        if fnotes:
            row["notes"] = fnotes
            notes.extend(f"face {f.index}: {n}" for n in fnotes)
        face_rows.append(row)
    return ValidityReport(triangulatable, ordering, not crossing, not bad, closed, face_rows, bad, notes)
