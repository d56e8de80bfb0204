"""Analytic surfaces, their uv maps, and the face classification cascade."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geom import GeometryError, Tolerances, any_perpendicular, coplanar, unit
from .curves import CurveGeom

PLANE = "plane"
CYLINDER = "cylinder"
CONE = "cone"
SPHERE = "sphere"
TORUS = "torus"
SURFACE_KINDS = (PLANE, CYLINDER, CONE, SPHERE, TORUS)


class UnclassifiableFace(GeometryError):
    pass


def _wrap(a):
    return (np.asarray(a) + math.pi) % (2.0 * math.pi) - math.pi


def _frame(axis, ref_dirs):
    """Orthonormal ``(e1, e2)`` perpendicular to ``axis``, ``e1`` along the mean of ``ref_dirs``."""
    axis = unit(axis)
    d = np.asarray(ref_dirs, dtype=float).reshape(-1, 3)
    d = d - np.outer(d @ axis, axis)
    m = d.sum(axis=0)
    e1 = unit(m) if np.linalg.norm(m) > 1e-9 * max(1.0, len(d)) else any_perpendicular(axis)
    return e1, np.cross(axis, e1)


@dataclass
class UVMap:
    """Chart of a surface patch: ``to_uv`` and ``to_xyz`` are mutual inverses on it.

    ``flip`` mirrors the u coordinate, which reverses the chart's normal.
    """

    surface: "SurfaceGeom"
    forward: object
    inverse: object
    flip: bool = False

    def to_uv(self, pts) -> np.ndarray:
        uv = self.forward(np.asarray(pts, dtype=float).reshape(-1, 3))
        if self.flip:
            uv[:, 0] = -uv[:, 0]
        return uv

    def to_xyz(self, uv) -> np.ndarray:
        uv = np.array(uv, dtype=float).reshape(-1, 2)
        if self.flip:
            uv[:, 0] = -uv[:, 0]
        return self.inverse(uv)

    def flipped(self) -> "UVMap":
        return UVMap(self.surface, self.forward, self.inverse, not self.flip)


@dataclass(frozen=True, eq=False)
class SurfaceGeom:
    kind: str
    notes: tuple = field(default=(), compare=False)

    def distance(self, pts) -> np.ndarray:
        raise NotImplementedError

    def chart(self, boundary: np.ndarray) -> UVMap:
        raise NotImplementedError

    def max_distance(self, pts) -> float:
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        return float(np.abs(self.distance(pts)).max()) if len(pts) else 0.0


@dataclass(frozen=True, eq=False)
class Plane(SurfaceGeom):
    normal: np.ndarray = None
    offset: float = 0.0
    kind: str = PLANE

    def distance(self, pts):
        return np.asarray(pts, dtype=float).reshape(-1, 3) @ self.normal - self.offset

    def chart(self, boundary):
        n = self.normal
        o = n * self.offset
        e1 = any_perpendicular(n)
        e2 = np.cross(n, e1)

        def fwd(p):
            q = p - o
            return np.stack([q @ e1, q @ e2], axis=1)

        def inv(uv):
            return o + np.outer(uv[:, 0], e1) + np.outer(uv[:, 1], e2)

        return UVMap(self, fwd, inv)


@dataclass(frozen=True, eq=False)
class Cylinder(SurfaceGeom):
    point: np.ndarray = None
    axis: np.ndarray = None
    radius: float = 1.0
    kind: str = CYLINDER

    def _split(self, pts):
        q = np.asarray(pts, dtype=float).reshape(-1, 3) - self.point
        h = q @ self.axis
        return q - np.outer(h, self.axis), h

    def distance(self, pts):
        radial, _ = self._split(pts)
        return np.linalg.norm(radial, axis=1) - self.radius

    def chart(self, boundary):
        radial, _ = self._split(boundary)
        e1, e2 = _frame(self.axis, radial)
        r = self.radius

        def fwd(p):
            rad, h = self._split(p)
            th = np.arctan2(rad @ e2, rad @ e1)
            return np.stack([r * th, h], axis=1)

        def inv(uv):
            th = uv[:, 0] / r
            return (self.point + np.outer(uv[:, 1], self.axis)
                    + r * (np.outer(np.cos(th), e1) + np.outer(np.sin(th), e2)))

        return UVMap(self, fwd, inv)


@dataclass(frozen=True, eq=False)
class Cone(SurfaceGeom):
    apex: np.ndarray = None
    axis: np.ndarray = None  # points from the apex into the nappe
    half_angle: float = 0.5
    kind: str = CONE

    def _split(self, pts):
        q = np.asarray(pts, dtype=float).reshape(-1, 3) - self.apex
        s = q @ self.axis
        return q - np.outer(s, self.axis), s

    def distance(self, pts):
        radial, s = self._split(pts)
        rho = np.linalg.norm(radial, axis=1)
        return rho * math.cos(self.half_angle) - s * math.sin(self.half_angle)

    def chart(self, boundary):
        radial, _ = self._split(boundary)
        e1, e2 = _frame(self.axis, radial)
        scale = max(float(np.linalg.norm(radial, axis=1).mean()), 1e-12)
        tan_a = math.tan(self.half_angle)

        def fwd(p):
            rad, s = self._split(p)
            th = np.arctan2(rad @ e2, rad @ e1)
            return np.stack([scale * th, s], axis=1)

        def inv(uv):
            th = uv[:, 0] / scale
            s = uv[:, 1]
            rho = s * tan_a
            return (self.apex + np.outer(s, self.axis)
                    + rho[:, None] * (np.outer(np.cos(th), e1) + np.outer(np.sin(th), e2)))

        return UVMap(self, fwd, inv)


@dataclass(frozen=True, eq=False)
class Sphere(SurfaceGeom):
    center: np.ndarray = None
    radius: float = 1.0
    kind: str = SPHERE

    def distance(self, pts):
        q = np.asarray(pts, dtype=float).reshape(-1, 3) - self.center
        return np.linalg.norm(q, axis=1) - self.radius

    def chart(self, boundary):
        q = np.asarray(boundary, dtype=float).reshape(-1, 3) - self.center
        m = q.sum(axis=0)
        e1 = unit(m) if np.linalg.norm(m) > 1e-9 else unit(q[0])
        w = any_perpendicular(e1)
        e2 = np.cross(w, e1)
        r = self.radius

        def fwd(p):
            d = np.asarray(p, dtype=float) - self.center
            d = d / np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
            th = np.arctan2(d @ e2, d @ e1)
            ph = np.arcsin(np.clip(d @ w, -1.0, 1.0))
            return np.stack([r * th, r * ph], axis=1)

        def inv(uv):
            th, ph = uv[:, 0] / r, uv[:, 1] / r
            c = np.cos(ph)
            return self.center + r * (np.outer(c * np.cos(th), e1) + np.outer(c * np.sin(th), e2)
                                      + np.outer(np.sin(ph), w))

        return UVMap(self, fwd, inv)


@dataclass(frozen=True, eq=False)
class Torus(SurfaceGeom):
    center: np.ndarray = None
    axis: np.ndarray = None
    major: float = 2.0
    minor: float = 1.0
    kind: str = TORUS

    def _split(self, pts):
        q = np.asarray(pts, dtype=float).reshape(-1, 3) - self.center
        h = q @ self.axis
        return q - np.outer(h, self.axis), h

    def distance(self, pts):
        radial, h = self._split(pts)
        rho = np.linalg.norm(radial, axis=1)
        return np.hypot(rho - self.major, h) - self.minor

    def _angles(self, pts, e1, e2):
        radial, h = self._split(pts)
        th = np.arctan2(radial @ e2, radial @ e1)
        rho = np.linalg.norm(radial, axis=1)
        ph = np.arctan2(h, rho - self.major)
        return th, ph

    def chart(self, boundary):
        radial, _ = self._split(boundary)
        e1, e2 = _frame(self.axis, radial)
        _, ph = self._angles(boundary, e1, e2)
        ph0 = math.atan2(np.sin(ph).sum(), np.cos(ph).sum())
        big, small = self.major, self.minor

        def fwd(p):
            th, ph = self._angles(p, e1, e2)
            return np.stack([big * th, small * (_wrap(ph - ph0) + ph0)], axis=1)

        def inv(uv):
            th, ph = uv[:, 0] / big, uv[:, 1] / small
            rho = big + small * np.cos(ph)
            return (self.center + np.outer(small * np.sin(ph), self.axis)
                    + rho[:, None] * (np.outer(np.cos(th), e1) + np.outer(np.sin(th), e2)))

        return UVMap(self, fwd, inv)


def _parallel(a, b, eps) -> bool:
    return float(np.linalg.norm(np.cross(unit(a), unit(b)))) <= eps


def _samples(curves: Sequence[CurveGeom], tol: Tolerances) -> np.ndarray:
    return np.concatenate([c.polyline(tol.arc_samples) for c in curves], axis=0)


def _check(surface: SurfaceGeom, pts, tol: Tolerances) -> SurfaceGeom:
    dev = surface.max_distance(pts)
    if dev > tol.geom_eps:
        raise UnclassifiableFace(f"{surface.kind} fit deviates by {dev:.3g} > {tol.geom_eps:g}")
    return surface


def _cylinder_or_cone(curves, pts, tol) -> SurfaceGeom:
    arcs = [c.geom for c in curves if c.kind == "arc"]
    lines = [c.geom for c in curves if c.kind == "line"]
    eps = tol.geom_eps
    n0 = arcs[0].normal
    c0 = arcs[0].center
    same_radius = all(abs(a.radius - arcs[0].radius) <= eps for a in arcs)
    normals_parallel = all(_parallel(a.normal, n0, eps) for a in arcs)
    centers_aligned = all(np.linalg.norm(np.cross(a.center - c0, n0)) <= eps for a in arcs)
    lines_axial = all(_parallel(ln.direction, n0, eps) for ln in lines)
    if same_radius and normals_parallel and centers_aligned and lines_axial:
        r = float(np.mean([a.radius for a in arcs]))
        return _check(Cylinder(point=c0, axis=unit(n0), radius=r), pts, tol)
    return _check(_fit_cone(arcs, lines, eps), pts, tol)


def _fit_cone(arcs, lines, eps) -> Cone:
    centers = np.array([a.center for a in arcs])
    radii = np.array([a.radius for a in arcs])
    spread = centers - centers.mean(axis=0)
    if len(arcs) >= 2 and np.linalg.norm(spread, axis=1).max() > eps:
        _, _, vt = np.linalg.svd(spread)
        axis = vt[0]
        if np.dot(axis, arcs[0].normal) < 0:
            axis = -axis
        origin = centers.mean(axis=0)
        s = (centers - origin) @ axis
        slope, icpt = np.polyfit(s, radii, 1)
        if abs(slope) <= eps:
            raise UnclassifiableFace("arc radii do not vary along the axis")
        s_apex = -icpt / slope
        apex = origin + s_apex * axis
        if slope < 0:
            axis = -axis
        half = math.atan(abs(slope))
    else:
        if not lines:
            raise UnclassifiableFace("cone needs two arcs at distinct centers or a generator line")
        axis = unit(arcs[0].normal)
        origin = arcs[0].center
        ln = lines[0]
        pa, pb = ln.start - origin, ln.end - origin
        sa, sb = pa @ axis, pb @ axis
        ra = np.linalg.norm(pa - sa * axis)
        rb = np.linalg.norm(pb - sb * axis)
        if abs(rb - ra) <= eps:
            raise UnclassifiableFace("generator line is parallel to the axis")
        s_apex = sa - ra * (sb - sa) / (rb - ra)
        apex = origin + s_apex * axis
        s_ref = (sa if ra > rb else sb) - s_apex
        if s_ref < 0:
            axis = -axis
            s_ref = -s_ref
        if s_ref <= eps:
            raise UnclassifiableFace("generator line meets the axis at its far end")
        half = math.atan(max(ra, rb) / s_ref)
    if not 0.0 < half < math.pi / 2:
        raise UnclassifiableFace(f"cone half-angle {half:.3g} out of range")
    return Cone(apex=apex, axis=unit(axis), half_angle=half)


def _sphere_or_torus(curves, pts, tol) -> SurfaceGeom:
    arcs = [c.geom for c in curves]
    eps = tol.geom_eps
    for a in arcs:
        sph = Sphere(center=a.center, radius=a.radius)
        if sph.max_distance(pts) <= eps:
            return sph
    by_r = sorted(arcs, key=lambda a: -a.radius)
    if len(by_r) < 3:
        raise UnclassifiableFace("arc-only face fits neither a sphere nor a torus")
    big = by_r[0]
    small = by_r[-1]
    major = (by_r[0].radius + by_r[1].radius) / 2.0
    minor = small.radius
    if not major > minor:
        raise UnclassifiableFace("torus major radius does not exceed minor radius")
    axis = unit(big.normal)
    center = big.center + ((small.center - big.center) @ axis) * axis
    return _check(Torus(center=center, axis=axis, major=major, minor=minor), pts, tol)


def infer_surface(curves: Sequence[CurveGeom], tol: Tolerances = Tolerances()) -> SurfaceGeom:
    """Simplest analytic surface consistent with a face's boundary curves.

    Plane if everything is coplanar; lines with arcs give a cylinder when the
    arcs and lines agree on one axis and a cone otherwise; arcs alone give a
    sphere centered on one of the arc centers, else a torus.

    Raises:
        UnclassifiableFace: if no candidate fits within ``tol.geom_eps``.
    """
    if not curves:
        raise UnclassifiableFace("face has no curves")
    pts = _samples(curves, tol)
    flat, fit = coplanar(pts, tol.geom_eps)
    if flat and not fit.degenerate:
        notes = ()
        if all(c.kind == "arc" for c in curves):
            notes = ("arc-only planar face treated as a plane",)
        return Plane(normal=fit.normal, offset=fit.offset, notes=notes)
    kinds = {c.kind for c in curves}
    if kinds == {"line"}:
        raise UnclassifiableFace("non-planar face bounded by lines only")
    if kinds == {"line", "arc"}:
        return _cylinder_or_cone(curves, pts, tol)
    return _sphere_or_torus(curves, pts, tol)
