"""Closed-loop extraction from the edges of one face."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..geom import GeometryError, Tolerances
from .curves import CurveGeom

OUTER = "outer"
INNER = "inner"


class WireError(GeometryError):
    pass


class OpenWire(WireError):
    """A vertex has odd incidence, so the edges cannot form closed loops."""


class NestedAmbiguity(WireError):
    """Two candidate outer wires have the same bounding-box diagonal."""


@dataclass(frozen=True)
class Wire:
    """Closed loop of oriented edges.

    ``edges`` holds ``(curve position, reversed)`` pairs in traversal order,
    where the curve position indexes the face's curve list.
    """

    edges: tuple
    role: str = OUTER
    closed: bool = True

    def __len__(self):
        return len(self.edges)

    def reversed(self) -> "Wire":
        return Wire(tuple((i, not r) for i, r in reversed(self.edges)), self.role, self.closed)

    def with_role(self, role: str) -> "Wire":
        return Wire(self.edges, role, self.closed)

    def vertex_chain(self, curves: Sequence[CurveGeom]) -> list[tuple[int, int]]:
        """``(from, to)`` vertex ids for each oriented edge."""
        out = []
        for i, rev in self.edges:
            c = curves[i]
            out.append((c.end_vertex, c.start_vertex) if rev else (c.start_vertex, c.end_vertex))
        return out

    def polylines(self, curves: Sequence[CurveGeom], n_arc_segments: int) -> list[np.ndarray]:
        return [curves[i].polyline(n_arc_segments, reverse=rev) for i, rev in self.edges]

    def loop_points(self, curves: Sequence[CurveGeom], arc_samples: int) -> np.ndarray:
        """Closed polygon (start point not repeated) with sweep-adaptive arcs."""
        parts = [curves[i].adaptive_polyline(arc_samples, reverse=rev)[:-1] for i, rev in self.edges]
        return np.concatenate(parts, axis=0)

    def bbox_diagonal(self, curves: Sequence[CurveGeom], arc_samples: int) -> float:
        pts = np.concatenate(self.polylines(curves, arc_samples), axis=0)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def _turn_angle(incoming: np.ndarray, outgoing: np.ndarray) -> float:
    c = float(np.clip(np.dot(incoming, outgoing), -1.0, 1.0))
    return math.acos(c)


def extract_cycles(curves: Sequence[CurveGeom]) -> list[list[tuple[int, bool]]]:
    """Partition the edges into closed cycles.

    Greedy walk from the lowest unused edge; at a vertex with several unused
    edges the one with the smallest turning angle is taken.

    Raises:
        OpenWire: if some vertex has odd degree.
    """
    incident: dict[int, list[int]] = defaultdict(list)
    for i, c in enumerate(curves):
        incident[c.start_vertex].append(i)
        incident[c.end_vertex].append(i)
    odd = sorted(v for v, es in incident.items() if len(es) % 2)
    if odd:
        raise OpenWire(f"vertices {odd} have odd incidence")
    used = [False] * len(curves)
    cycles = []
    for seed in range(len(curves)):
        if used[seed]:
            continue
        used[seed] = True
        cycle = [(seed, False)]
        start = curves[seed].start_vertex
        at = curves[seed].end_vertex
        while at != start:
            last, last_rev = cycle[-1]
            inc = curves[last].tangent(at_end=True, reverse=last_rev)
            best = None
            for j in incident[at]:
                if used[j]:
                    continue
                rev = curves[j].start_vertex != at
                turn = _turn_angle(inc, curves[j].tangent(at_end=False, reverse=rev))
                if best is None or turn < best[0] - 1e-12:
                    best = (turn, j, rev)
            if best is None:
                raise OpenWire(f"walk from edge {curves[seed].edge} is stuck at vertex {at}")
            _, j, rev = best
            used[j] = True
            cycle.append((j, rev))
            at = curves[j].start_vertex if rev else curves[j].end_vertex
        cycles.append(cycle)
    return cycles


def assemble_wires(curves: Sequence[CurveGeom], tol: Tolerances = Tolerances()) -> list[Wire]:
    """Closed wires of a face; the one with the largest bounding box is outer.

    The outer wire comes first.  Direction is the walk direction; orientation
    relative to the surface normal is settled when the face is built.

    Raises:
        OpenWire: if the edges do not close up.
        NestedAmbiguity: if the largest bounding-box diagonal is not unique.
    """
    if len(curves) < 2:
        raise OpenWire(f"a face needs at least 2 edges, got {len(curves)}")
    cycles = [c for c in extract_cycles(curves) if len(c) >= 2]
    if not cycles:
        raise OpenWire("no closed cycle")
    wires = [Wire(tuple(c), INNER) for c in cycles]
    diags = [w.bbox_diagonal(curves, tol.arc_samples) for w in wires]
    k = int(np.argmax(diags))
    ties = [i for i, d in enumerate(diags) if i != k and abs(d - diags[k]) <= tol.geom_eps]
    if ties:
        raise NestedAmbiguity(f"wires {k} and {ties[0]} share the largest bounding-box diagonal {diags[k]:.6g}")
    return [wires[k].with_role(OUTER)] + [w for i, w in enumerate(wires) if i != k]
