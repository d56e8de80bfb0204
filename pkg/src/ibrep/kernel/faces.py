"""Face construction: wires projected to uv, oriented and triangulated."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geom import GeometryError, Tolerances
from .curves import CurveGeom
from .surfaces import SurfaceGeom, UVMap
from .triangulate import signed_area, triangulate
from .wires import OUTER, Wire


class DegenerateDomain(GeometryError):
    """A wire collapses to zero area in the surface's parameter domain."""


@dataclass
class TriangulatedFace:
    wires: list  # oriented: outer counter-clockwise in uv, inner clockwise
    surface: SurfaceGeom
    chart: UVMap
    uv: np.ndarray
    points: np.ndarray  # uv points mapped back onto the surface
    triangles: np.ndarray
    notes: list = field(default_factory=list)


def build_face(wires: Sequence[Wire], curves: Sequence[CurveGeom], surface: SurfaceGeom,
               tol: Tolerances = Tolerances()) -> TriangulatedFace:
    """Triangulate a face in the parameter domain of its surface.

    The chart is mirrored if needed so the outer loop runs counter-clockwise;
    inner loops that do not run clockwise are reversed and noted.

    Raises:
        DegenerateDomain: if a loop has no area in uv.
        TriangulationFailure: if ear clipping fails.
    """
    wires = list(wires)
    if not wires or wires[0].role != OUTER:
        raise ValueError("first wire must be the outer wire")
    loops = [w.loop_points(curves, tol.arc_samples) for w in wires]
    chart = surface.chart(np.concatenate(loops, axis=0))
    notes = []
    uv = [chart.to_uv(p) for p in loops]
    scale = max(float(np.ptp(np.concatenate(uv), axis=0).max()), 1e-300)
    tiny = 1e-12 * scale * scale
    a0 = signed_area(uv[0])
    if abs(a0) <= tiny:
        raise DegenerateDomain("outer wire has zero area in uv")
    if a0 < 0:
        chart = chart.flipped()
        uv = [chart.to_uv(p) for p in loops]
    for k in range(1, len(wires)):
        a = signed_area(uv[k])
        if abs(a) <= tiny:
            raise DegenerateDomain(f"inner wire {k} has zero area in uv")
        if a > 0:
            wires[k] = wires[k].reversed()
            loops[k] = wires[k].loop_points(curves, tol.arc_samples)
            uv[k] = chart.to_uv(loops[k])
            notes.append(f"inner wire {k} reoriented clockwise")
    pts2, tris = triangulate(uv[0], uv[1:])
    return TriangulatedFace(wires, surface, chart, pts2, chart.to_xyz(pts2), tris, notes)
