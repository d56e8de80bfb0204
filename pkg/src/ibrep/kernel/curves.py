"""Edge geometry: two-vertex hyperedges become lines, three-vertex ones arcs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import IndexedBRep, QuantGrid, dequantize_all
from ..geom import TWO_PI, Arc3, CollinearError, LineSeg, Tolerances, resolve_arc_mid


class CollinearArc(CollinearError):
    def __init__(self, edge: int):
        self.edge = edge
        super().__init__(f"edge {edge}: arc points are collinear")


@dataclass(frozen=True)
class CurveGeom:
    """Geometry of one hyperedge.

    ``vertices`` holds vertex indices in curve order: ``(start, end)`` for a
    line and ``(start, mid, end)`` for an arc.
    """

    edge: int
    vertices: tuple
    geom: LineSeg | Arc3
    ambiguous: bool = False

    @property
    def kind(self) -> str:
        return "arc" if isinstance(self.geom, Arc3) else "line"

    @property
    def start_vertex(self) -> int:
        return self.vertices[0]

    @property
    def end_vertex(self) -> int:
        return self.vertices[-1]

    def polyline(self, n_arc_segments: int, reverse: bool = False) -> np.ndarray:
        """Discretization with one segment per line and ``n_arc_segments`` per arc."""
        pts = self.geom.polyline(1 if self.kind == "line" else n_arc_segments)
        return pts[::-1] if reverse else pts

    def adaptive_polyline(self, arc_samples: int, reverse: bool = False) -> np.ndarray:
        """Discretization with arc segment count proportional to the sweep."""
        if self.kind == "line":
            n = 1
        else:
            n = max(4, math.ceil(arc_samples * self.geom.sweep / TWO_PI))
        pts = self.geom.polyline(n)
        return pts[::-1] if reverse else pts

    def tangent(self, at_end: bool, reverse: bool = False) -> np.ndarray:
        """Unit tangent leaving the start (or arriving at the end) of the traversal."""
        g = self.geom
        if isinstance(g, LineSeg):
            d = g.direction
        else:
            t = 1.0 if at_end != reverse else 0.0
            d = g.tangent_at(t)
        return -d if reverse else d


def build_curve(points: np.ndarray, edge_index: int, edge: tuple, tol: Tolerances = Tolerances()) -> CurveGeom:
    """Geometry of a single hyperedge given dequantized vertex positions."""
    if len(edge) == 2:
        return CurveGeom(edge_index, tuple(edge), LineSeg(points[edge[0]], points[edge[1]]))
    if len(edge) != 3:
        raise ValueError(f"edge {edge_index} has cardinality {len(edge)}")
    try:
        res = resolve_arc_mid([points[i] for i in edge], tol.geom_eps)
    except CollinearError:
        raise CollinearArc(edge_index) from None
    s, m, e = (edge[k] for k in res.order)
    return CurveGeom(edge_index, (s, m, e), Arc3(points[s], points[m], points[e]), res.ambiguous)


def build_curves(b: IndexedBRep, grid: QuantGrid | None = None, tol: Tolerances = Tolerances()) -> list[CurveGeom]:
    """Line or arc geometry for every hyperedge of ``b``.

    Arc point roles are recovered by testing which point sits at the
    half-sweep parameter of the arc through the other two.

    Raises:
        CollinearArc: if a three-vertex edge has collinear points.
    """
    pts = vertex_positions(b, grid)
    return [build_curve(pts, i, e, tol) for i, e in enumerate(b.edges)]


def vertex_positions(b: IndexedBRep, grid: QuantGrid | None = None) -> np.ndarray:
    """Bin-center coordinates ``(x, y, z)`` of every vertex.

    Without a grid the unit cube is used, which keeps tolerances in
    normalized model units.
    """
    grid = grid if grid is not None else QuantGrid(b.bits)
    if grid.bits != b.bits:
        raise ValueError(f"grid has {grid.bits} bits but model has {b.bits}")
    return dequantize_all(grid, b.vertices)
