"""Ear-clipping triangulation of a 2D polygon with holes.

Holes are joined to the outer ring by zero-width bridges to mutually
visible vertices, then the resulting simple ring is clipped ear by ear.
The outer ring must be counter-clockwise and holes clockwise.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..geom import GeometryError


class TriangulationFailure(GeometryError):
    pass


def signed_area(loop) -> float:
    """Shoelace area; positive for counter-clockwise loops."""
    p = np.asarray(loop, dtype=float).reshape(-1, 2)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _dedup_ring(idx: list[int], pts: np.ndarray, eps: float) -> list[int]:
    out = []
    for i in idx:
        if out and np.linalg.norm(pts[i] - pts[out[-1]]) <= eps:
            continue
        out.append(i)
    while len(out) > 1 and np.linalg.norm(pts[out[0]] - pts[out[-1]]) <= eps:
        out.pop()
    return out


def _locally_inside(pts, ring, k, target, eps) -> bool:
    """Whether the direction from ring vertex ``k`` to ``target`` enters the polygon."""
    a = pts[ring[k]]
    prv = pts[ring[k - 1]]
    nxt = pts[ring[(k + 1) % len(ring)]]
    if _cross(prv, a, nxt) >= 0:
        return _cross(a, nxt, target) > eps and _cross(a, target, prv) > eps
    return not (_cross(a, prv, target) > -eps and _cross(a, target, nxt) > -eps)


def _crosses_any(p, q, seg_a, seg_b, eps) -> bool:
    """Proper crossing of segment pq with any of the segments, ignoring shared endpoints."""
    if len(seg_a) == 0:
        return False
    d = q - p
    d1 = d[0] * (seg_a[:, 1] - p[1]) - d[1] * (seg_a[:, 0] - p[0])
    d2 = d[0] * (seg_b[:, 1] - p[1]) - d[1] * (seg_b[:, 0] - p[0])
    e = seg_b - seg_a
    d3 = e[:, 0] * (p[1] - seg_a[:, 1]) - e[:, 1] * (p[0] - seg_a[:, 0])
    d4 = e[:, 0] * (q[1] - seg_a[:, 1]) - e[:, 1] * (q[0] - seg_a[:, 0])
    touches = np.zeros(len(seg_a), dtype=bool)
    for end in (p, q):
        touches |= np.linalg.norm(seg_a - end, axis=1) <= eps
        touches |= np.linalg.norm(seg_b - end, axis=1) <= eps
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    return bool((proper & ~touches).any())


def _ring_segments(pts, rings):
    a, b = [], []
    for r in rings:
        if len(r) < 2:
            continue
        a.append(pts[r])
        b.append(pts[np.roll(r, -1)])
    if not a:
        return np.empty((0, 2)), np.empty((0, 2))
    return np.concatenate(a), np.concatenate(b)


def _bridge(pts, ring, holes, eps) -> list[int]:
    holes = sorted(holes, key=lambda h: -pts[h][:, 0].max())
    for hi, hole in enumerate(holes):
        rest = holes[hi + 1:]
        joined = None
        order_h = sorted(range(len(hole)), key=lambda k: -pts[hole[k]][0])
        for hk in order_h:
            m = pts[hole[hk]]
            dists = np.linalg.norm(pts[ring] - m, axis=1)
            seg_a, seg_b = _ring_segments(pts, [ring, hole] + rest)
            for rk in np.argsort(dists, kind="stable"):
                p = pts[ring[rk]]
                if dists[rk] <= eps:
                    continue
                if not _locally_inside(pts, ring, rk, m, eps) or not _locally_inside(pts, hole, hk, p, eps):
                    continue
                if _crosses_any(m, p, seg_a, seg_b, eps):
                    continue
                joined = (int(rk), hk)
                break
            if joined:
                break
        if joined is None:
            raise TriangulationFailure(f"hole {hi} has no visible bridge vertex")
        rk, hk = joined
        cycle = hole[hk:] + hole[:hk]
        ring = ring[:rk + 1] + cycle + [cycle[0], ring[rk]] + ring[rk + 1:]
    return ring


def _inside_any(pts_xy, a, b, c, eps, inclusive):
    d1 = (b[0] - a[0]) * (pts_xy[:, 1] - a[1]) - (b[1] - a[1]) * (pts_xy[:, 0] - a[0])
    d2 = (c[0] - b[0]) * (pts_xy[:, 1] - b[1]) - (c[1] - b[1]) * (pts_xy[:, 0] - b[0])
    d3 = (a[0] - c[0]) * (pts_xy[:, 1] - c[1]) - (a[1] - c[1]) * (pts_xy[:, 0] - c[0])
    if inclusive:
        inside = (d1 >= -eps) & (d2 >= -eps) & (d3 >= -eps)
    else:
        inside = (d1 > eps) & (d2 > eps) & (d3 > eps)
    for corner in (a, b, c):
        inside &= np.abs(pts_xy - corner).max(axis=1) > 1e-15
    return bool(inside.any())


def _clip(pts, ring, area_eps) -> list[tuple[int, int, int]]:
    n = len(ring)
    nxt = [(i + 1) % n for i in range(n)]
    prv = [(i - 1) % n for i in range(n)]
    alive = n
    tris = []
    i = 0
    mode = 0  # 0: strict ears, 1: boundary contacts allowed, 2: any convex vertex
    stalled = 0
    while alive > 3:
        a, b, c = pts[ring[prv[i]]], pts[ring[i]], pts[ring[nxt[i]]]
        cr = _cross(a, b, c)
        ear = False
        if abs(cr) <= area_eps:
            # zero-area corner: drop it without emitting a triangle
            ear, emit = True, False
        elif cr > 0:
            emit = True
            if mode == 2:
                ear = True
            else:
                others = []
                k = nxt[nxt[i]]
                while k != prv[i]:
                    others.append(ring[k])
                    k = nxt[k]
                ear = not others or not _inside_any(pts[others], a, b, c, area_eps, inclusive=(mode == 0))
        if ear:
            if emit:
                tris.append((ring[prv[i]], ring[i], ring[nxt[i]]))
            p, q = prv[i], nxt[i]
            nxt[p], prv[q] = q, p
            alive -= 1
            i = p
            stalled = 0
            mode = 0
            continue
        i = nxt[i]
        stalled += 1
        if stalled > alive:
            if mode == 2:
                raise TriangulationFailure(f"no ear among {alive} remaining vertices")
            mode += 1
            stalled = 0
    a, b, c = pts[ring[prv[i]]], pts[ring[i]], pts[ring[nxt[i]]]
    if _cross(a, b, c) > area_eps:
        tris.append((ring[prv[i]], ring[i], ring[nxt[i]]))
    return tris


def triangulate(outer, holes: Sequence = ()) -> tuple[np.ndarray, np.ndarray]:
    """Triangulate a polygon with holes.

    Args:
        outer: ``(n, 2)`` counter-clockwise ring, first point not repeated.
        holes: clockwise rings inside ``outer``.

    Returns:
        ``(points, triangles)`` where ``points`` stacks ``outer`` and the holes
        in order and ``triangles`` is an ``(m, 3)`` index array of
        counter-clockwise triangles.

    Raises:
        TriangulationFailure: if the rings cannot be triangulated.
    """
    rings = [np.asarray(outer, dtype=float).reshape(-1, 2)] + [np.asarray(h, dtype=float).reshape(-1, 2) for h in holes]
    pts = np.concatenate(rings, axis=0)
    if not np.all(np.isfinite(pts)):
        raise TriangulationFailure("non-finite coordinates")
    span = float(np.ptp(pts, axis=0).max()) if len(pts) else 0.0
    if span == 0.0:
        raise TriangulationFailure("polygon has zero extent")
    eps = 1e-12 * span
    area_eps = 1e-12 * span * span
    offsets = np.cumsum([0] + [len(r) for r in rings])
    idx = [_dedup_ring(list(range(offsets[k], offsets[k + 1])), pts, eps) for k in range(len(rings))]
    if len(idx[0]) < 3:
        raise TriangulationFailure("outer ring has fewer than 3 distinct points")
    hole_idx = [h for h in idx[1:] if len(h) >= 3]
    ring = _bridge(pts, idx[0], hole_idx, eps) if hole_idx else idx[0]
    tris = _clip(pts, ring, area_eps)
    if not tris:
        raise TriangulationFailure("polygon has zero area")
    return pts, np.asarray(tris, dtype=np.int64)
