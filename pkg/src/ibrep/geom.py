"""Tolerance-aware primitive geometry shared by the reconstruction kernel.

Points are plain ``numpy`` arrays of shape ``(3,)``.  Arcs are stored by their
three defining points (start, mid, end) and everything else (center, radius,
normal, sweep) is derived on construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Base class for geometric construction failures."""


class CollinearError(GeometryError):
    """Three points do not define a circle."""


class DegenerateError(GeometryError):
    """A point set has no unique fitting primitive."""


@dataclass(frozen=True)
class Tolerances:
    """Distance tolerances used across the kernel, in normalized model units.

    ``wire_eps`` is the tolerance used by the wire ordering and
    self-intersection checks; ``arc_samples`` is the number of polyline
    segments used to discretize a full arc for intersection tests.
    """

    geom_eps: float = 1e-6
    wire_eps: float = 0.01
    arc_samples: int = 32

    def __post_init__(self):
        if not self.geom_eps > 0:
            raise ValueError(f"geom_eps must be positive, got {self.geom_eps}")
        if not self.wire_eps > 0:
            raise ValueError(f"wire_eps must be positive, got {self.wire_eps}")
        if int(self.arc_samples) != self.arc_samples or self.arc_samples < 8:
            raise ValueError(f"arc_samples must be an integer >= 8, got {self.arc_samples}")


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"non-finite coordinates: {arr}")
    return arr


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateError("cannot normalize a zero vector")
    return v / n


def any_perpendicular(v) -> np.ndarray:
    """Return a unit vector orthogonal to ``v``."""
    v = unit(v)
    helper = np.eye(3)[int(np.argmin(np.abs(v)))]
    return unit(np.cross(v, helper))


def rotate(v, axis, angle: float) -> np.ndarray:
    """Rodrigues rotation of ``v`` about ``axis``."""
    k = unit(axis)
    v = np.asarray(v, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(k, v) * s + k * np.dot(k, v) * (1.0 - c)


class Circle(NamedTuple):
    center: np.ndarray
    radius: float
    normal: np.ndarray


def circle_through_3(a, b, c, rel_eps: float = 1e-12) -> Circle:
    """Circumscribed circle of three points.

    The normal follows the orientation of the triangle ``a, b, c``.

    Raises:
        CollinearError: if the points are (numerically) collinear.
    """
    a, b, c = as_point(a), as_point(b), as_point(c)
    # anchor at the vertex opposite the longest side; a cyclic shift keeps the orientation
    sides = (np.dot(c - b, c - b), np.dot(a - c, a - c), np.dot(b - a, b - a))
    k = int(np.argmax(sides))
    if k == 1:
        a, b, c = b, c, a
    elif k == 2:
        a, b, c = c, a, b
    u = b - a
    v = c - a
    w = np.cross(u, v)
    ww = float(np.dot(w, w))
    scale = float(np.dot(u, u) * np.dot(v, v))
    if scale == 0.0 or ww <= (rel_eps**2) * scale:
        raise CollinearError(f"points are collinear: {a}, {b}, {c}")
    offset = (np.dot(u, u) * np.cross(v, w) + np.dot(v, v) * np.cross(w, u)) / (2.0 * ww)
    center = a + offset
    radius = float(np.linalg.norm(offset))
    return Circle(center, radius, w / math.sqrt(ww))


@dataclass(frozen=True)
class LineSeg:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b))
        if np.array_equal(self.a, self.b):
            raise DegenerateError("line endpoints coincide")

    @property
    def start(self) -> np.ndarray:
        return self.a

    @property
    def end(self) -> np.ndarray:
        return self.b

    @property
    def direction(self) -> np.ndarray:
        return unit(self.b - self.a)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))

    def point_at(self, t: float) -> np.ndarray:
        return self.a + t * (self.b - self.a)

    def polyline(self, n_segments: int = 1) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n_segments + 1)[:, None]
        return self.a + t * (self.b - self.a)

    def reversed(self) -> "LineSeg":
        return LineSeg(self.b, self.a)


@dataclass(frozen=True)
class Arc3:
    """Circular arc from ``start`` through ``mid`` to ``end``."""

    start: np.ndarray
    mid: np.ndarray
    end: np.ndarray
    center: np.ndarray = field(init=False, repr=False)
    radius: float = field(init=False, repr=False)
    normal: np.ndarray = field(init=False, repr=False)
    sweep: float = field(init=False, repr=False)

    def __post_init__(self):
        s, m, e = as_point(self.start), as_point(self.mid), as_point(self.end)
        circle = circle_through_3(s, m, e)
        r0 = s - circle.center
        r1 = e - circle.center
        sweep = math.atan2(np.dot(np.cross(r0, r1), circle.normal), np.dot(r0, r1))
        if sweep <= 0.0:
            sweep += TWO_PI
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "mid", m)
        object.__setattr__(self, "end", e)
        object.__setattr__(self, "center", circle.center)
        object.__setattr__(self, "radius", circle.radius)
        object.__setattr__(self, "normal", circle.normal)
        object.__setattr__(self, "sweep", sweep)

    @property
    def length(self) -> float:
        return self.radius * self.sweep

    def _basis(self):
        e1 = unit(self.start - self.center)
        return e1, np.cross(self.normal, e1)

    def point_at(self, t):
        """Point(s) at normalized angular parameter ``t`` in [0, 1]."""
        e1, e2 = self._basis()
        ang = np.asarray(t, dtype=float) * self.sweep
        pts = self.center + self.radius * (np.multiply.outer(np.cos(ang), e1) + np.multiply.outer(np.sin(ang), e2))
        return pts

    def tangent_at(self, t: float) -> np.ndarray:
        e1, e2 = self._basis()
        ang = t * self.sweep
        return -math.sin(ang) * e1 + math.cos(ang) * e2

    def polyline(self, n_segments: int) -> np.ndarray:
        pts = self.point_at(np.linspace(0.0, 1.0, n_segments + 1))
        pts[0] = self.start
        pts[-1] = self.end
        return pts

    def reversed(self) -> "Arc3":
        return Arc3(self.end, self.mid, self.start)


def eval_arc_midparam(arc: Arc3) -> np.ndarray:
    """Point on ``arc`` at half of its angular sweep."""
    return arc.point_at(0.5)


class MidResolution(NamedTuple):
    """Outcome of deciding which of three arc points is the middle one."""

    order: tuple  # (start, mid, end) positions into the input triple
    deviation: float  # distance between the chosen mid and the half-sweep point
    ambiguous: bool


_MID_CANDIDATES = ((1, 0, 2), (0, 1, 2), (0, 2, 1))


def resolve_arc_mid(points: Sequence, eps: float = 1e-6) -> MidResolution:
    """Pick which of three unordered arc points is the arc midpoint.

    Each point in turn is tried as the middle of the arc through the other
    two; the candidate whose half-sweep evaluation lands closest to it wins.
    When more than one candidate matches within ``eps`` the smallest-sweep
    arc is chosen and the result is flagged ambiguous.

    Raises:
        CollinearError: if the points are collinear.
    """
    pts = [as_point(p) for p in points]
    scored = []
    for order in _MID_CANDIDATES:
        arc = Arc3(pts[order[0]], pts[order[1]], pts[order[2]])
        dev = float(np.linalg.norm(eval_arc_midparam(arc) - arc.mid))
        scored.append((dev, arc.sweep, order))
    matches = [s for s in scored if s[0] <= eps]
    if len(matches) > 1:
        dev, _, order = min(matches, key=lambda s: (s[1], s[0]))
        return MidResolution(order, dev, True)
    dev, _, order = min(scored, key=lambda s: s[0])
    return MidResolution(order, dev, False)


@dataclass(frozen=True)
class PlaneFit:
    normal: np.ndarray
    offset: float  # plane is {p : normal . p == offset}
    residual: float  # max orthogonal distance of the fitted points
    degenerate: bool = False

    def distance(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.normal - self.offset


def fit_plane(points) -> PlaneFit:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 3:
        raise ValueError("plane fit needs at least 3 points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(float(sv[0]), 1e-300)
    degenerate = bool(sv[1] <= 1e-12 * scale)
    normal = vt[-1] if vt.shape[0] == 3 else any_perpendicular(vt[0])
    if degenerate:
        normal = any_perpendicular(vt[0]) if sv[0] > 0 else np.array([0.0, 0.0, 1.0])
    # deterministic sign: first non-negligible component positive
    idx = int(np.argmax(np.abs(normal) > 1e-12))
    if normal[idx] < 0:
        normal = -normal
    normal = normal / np.linalg.norm(normal)
    offset = float(centroid @ normal)
    residual = float(np.max(np.abs(pts @ normal - offset)))
    return PlaneFit(normal, offset, residual, degenerate)


def coplanar(points, eps: float) -> tuple[bool, PlaneFit]:
    """Whether ``points`` lie within ``eps`` of their least-squares plane.

    Collinear inputs return ``True`` with a plane flagged ``degenerate``.
    """
    fit = fit_plane(points)
    return fit.residual <= eps, fit


def segment_distances(p1, q1, p2, q2):
    """Closest distance between segment batches ``p1q1`` and ``p2q2``.

    All arguments broadcast to ``(..., 3)``.  Returns ``(dist, c1, c2)`` with
    the closest points on each segment.
    """
    p1, q1, p2, q2 = (np.asarray(x, dtype=float) for x in (p1, q1, p2, q2))
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    tiny = 1e-300
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > tiny, np.clip((b * f - c * e) / np.where(denom > tiny, denom, 1.0), 0.0, 1.0), 0.0)
        t = (b * s + f) / np.where(e > tiny, e, 1.0)
        s_lo = np.clip(-c / np.where(a > tiny, a, 1.0), 0.0, 1.0)
        s_hi = np.clip((b - c) / np.where(a > tiny, a, 1.0), 0.0, 1.0)
    s = np.where(t < 0.0, s_lo, np.where(t > 1.0, s_hi, s))
    t = np.clip(t, 0.0, 1.0)
    # degenerate segments
    s = np.where(a <= tiny, 0.0, s)
    t = np.where(a <= tiny, np.clip(f / np.where(e > tiny, e, 1.0), 0.0, 1.0), t)
    t = np.where(e <= tiny, 0.0, t)
    s = np.where((e <= tiny) & (a > tiny), np.clip(-c / np.where(a > tiny, a, 1.0), 0.0, 1.0), s)
    c1 = p1 + s[..., None] * d1
    c2 = p2 + t[..., None] * d2
    return np.linalg.norm(c1 - c2, axis=-1), c1, c2


def polyline_self_intersects(wire_polylines: Sequence, eps: float) -> bool:
    """Whether a closed wire, given as one polyline per edge, touches itself.

    Polylines are in wire order and each runs in the wire's direction.  Two
    segments conflict when they belong to different edges and come within
    ``eps``; for edges that are consecutive in the wire, contacts within
    ``eps`` of their shared vertex are ignored.
    """
    polys = [np.asarray(p, dtype=float).reshape(-1, 3) for p in wire_polylines]
    n = len(polys)
    if n < 2:
        return False
    segs = [(p[:-1], p[1:]) for p in polys]
    for i in range(n):
        for j in range(i + 1, n):
            junctions = []
            if j == i + 1:
                junctions.append(polys[i][-1])
            if (i - 1) % n == j:
                junctions.append(polys[j][-1])
            a0, a1 = segs[i]
            b0, b1 = segs[j]
            dist, c1, c2 = segment_distances(a0[:, None, :], a1[:, None, :], b0[None, :, :], b1[None, :, :])
            hit = dist <= eps
            if not hit.any():
                continue
            if not junctions:
                return True
            near_junction = np.zeros_like(hit)
            for jp in junctions:
                far = np.maximum(np.linalg.norm(c1 - jp, axis=-1), np.linalg.norm(c2 - jp, axis=-1))
                near_junction |= far <= eps
            if (hit & ~near_junction).any():
                return True
    return False
