import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import least_squares

from ibrep.geom import (Arc3, CollinearError, LineSeg, Tolerances, circle_through_3, coplanar, eval_arc_midparam,
                        fit_plane, polyline_self_intersects, resolve_arc_mid, rotate, segment_distances)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord, coord).map(np.array)


def lsq_circle(pts):
    """Independent oracle: minimize radial residuals in the plane of the points."""
    pts = np.asarray(pts, float)
    n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
    n /= np.linalg.norm(n)

    def res(x):
        c, r = x[:3], x[3]
        return np.concatenate([np.linalg.norm(pts - c, axis=1) - r, [np.dot(c - pts[0], n)]])

    c0 = pts.mean(axis=0)
    sol = least_squares(res, np.r_[c0, np.linalg.norm(pts[0] - c0)], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return sol.x[:3], sol.x[3]


def test_circle_unit():
    c = circle_through_3((1, 0, 0), (0, 1, 0), (-1, 0, 0))
    assert np.allclose(c.center, 0) and c.radius == pytest.approx(1)
    assert abs(abs(c.normal[2]) - 1) < 1e-12


def test_circle_collinear():
    with pytest.raises(CollinearError):
        circle_through_3((0, 0, 0), (1, 0, 0), (2, 0, 0))


def test_circle_pythagorean():
    c = circle_through_3((3, 4, 0), (-4, 3, 0), (0, -5, 0))
    assert np.allclose(c.center, 0, atol=1e-12) and c.radius == pytest.approx(5)


def test_circle_matches_least_squares_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = rng.normal(size=(3, 3))
        c = circle_through_3(*p)
        oc, orad = lsq_circle(p)
        assert np.linalg.norm(c.center - oc) <= 1e-8 * max(1.0, orad)
        assert c.radius == pytest.approx(orad, rel=1e-8)


@given(point, point, point)
@settings(max_examples=200, deadline=None)
def test_circle_permutation_invariant(a, b, c):
    try:
        c1 = circle_through_3(a, b, c)
    except CollinearError:
        return
    if c1.radius > 1e6:
        return
    c2 = circle_through_3(c, a, b)
    c3 = circle_through_3(b, a, c)
    for other in (c2, c3):
        assert np.allclose(other.center, c1.center, atol=1e-6 * max(1, c1.radius))
        assert abs(abs(np.dot(other.normal, c1.normal)) - 1) < 1e-6


def test_midparam_examples():
    arc = Arc3((1, 0, 0), (0, 1, 0), (-1, 0, 0))
    assert np.allclose(eval_arc_midparam(arc), (0, 1, 0))
    s = math.sqrt(0.5)
    arc = Arc3((1, 0, 0), (s, s, 0), (0, 1, 0))
    assert np.allclose(eval_arc_midparam(arc), (s, s, 0))


def test_midparam_three_quarter_sweep_bisects_arc_length():
    arc = Arc3((1, 0, 0), (-1, 0, 0), (0, -1, 0))
    assert arc.sweep == pytest.approx(1.5 * math.pi)
    dense = arc.polyline(20000)
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    cum = np.r_[0, np.cumsum(seg)]
    k = int(np.searchsorted(cum, cum[-1] / 2))
    assert np.linalg.norm(eval_arc_midparam(arc) - dense[k]) < 1e-3
    # half of 270 degrees from +x, counter-clockwise
    assert np.allclose(eval_arc_midparam(arc), (math.cos(0.75 * math.pi), math.sin(0.75 * math.pi), 0))


@given(point, point, point)
@settings(max_examples=200, deadline=None)
def test_midparam_on_circle_same_side_as_mid(a, b, c):
    try:
        arc = Arc3(a, b, c)
    except CollinearError:
        return
    if arc.radius > 1e4 or np.linalg.norm(a - c) < 1e-3 * arc.radius:
        return
    m = eval_arc_midparam(arc)
    assert abs(np.linalg.norm(m - arc.center) - arc.radius) <= 1e-9 * max(1, arc.radius)
    chord = arc.end - arc.start
    side = np.cross(chord, arc.normal)
    assert np.sign(np.dot(m - arc.start, side)) == np.sign(np.dot(arc.mid - arc.start, side))


def test_arc_polyline_endpoints_and_length():
    arc = Arc3((1, 0, 0), (0, 1, 0), (-1, 0, 0))
    pl = arc.polyline(64)
    assert np.array_equal(pl[0], arc.start) and np.array_equal(pl[-1], arc.end)
    assert np.linalg.norm(np.diff(pl, axis=0), axis=1).sum() == pytest.approx(math.pi, rel=1e-3)
    assert arc.reversed().sweep == pytest.approx(arc.sweep)


def test_resolve_arc_mid_quarter_45():
    s = math.sqrt(0.5)
    pts = [(0, 1, 0), (s, s, 0), (1, 0, 0)]
    for perm in ([0, 1, 2], [1, 0, 2], [2, 1, 0], [1, 2, 0]):
        res = resolve_arc_mid([pts[i] for i in perm])
        assert perm[res.order[1]] == 1
        assert not res.ambiguous


def test_resolve_arc_mid_semicircle():
    pts = [(-1, 0, 0), (0, 1, 0), (1, 0, 0)]
    assert resolve_arc_mid(pts).order[1] == 1
    assert resolve_arc_mid([pts[1], pts[0], pts[2]]).order[1] == 0


def test_coplanar_examples():
    sq = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float)
    ok, fit = coplanar(sq, 1e-6)
    assert ok and abs(abs(fit.normal[2]) - 1) < 1e-12
    lifted = sq.copy()
    lifted[2, 2] = 1e-5
    assert not coplanar(lifted, 1e-6)[0]
    cube = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)
    assert not coplanar(cube, 1e-6)[0]


def test_coplanar_rigid_motion_invariant():
    rng = np.random.default_rng(1)
    pts = np.c_[rng.normal(size=(20, 2)), np.zeros(20)]
    pts[:, 2] += rng.normal(scale=1e-3, size=20)
    f0 = fit_plane(pts)
    moved = np.array([rotate(p, (1, 2, 3), 0.7) for p in pts]) + (5, -2, 1)
    f1 = fit_plane(moved)
    assert f1.residual == pytest.approx(f0.residual, abs=1e-9)


def test_segment_distances_brute_force():
    rng = np.random.default_rng(3)
    p1, q1, p2, q2 = rng.normal(size=(4, 100, 3))
    d, _, _ = segment_distances(p1, q1, p2, q2)
    t = np.linspace(0, 1, 401)
    for i in range(0, 100, 10):
        a = p1[i] + t[:, None] * (q1[i] - p1[i])
        b = p2[i] + t[:, None] * (q2[i] - p2[i])
        brute = np.linalg.norm(a[:, None] - b[None], axis=2).min()
        assert d[i] <= brute + 1e-12
        assert d[i] == pytest.approx(brute, abs=1e-2)


def _square(s=1.0, z=0.0):
    c = [(0, 0, z), (s, 0, z), (s, s, z), (0, s, z)]
    return [np.array([c[k], c[(k + 1) % 4]], float) for k in range(4)]


def test_self_intersection_examples():
    tol = Tolerances()
    assert not polyline_self_intersects(_square(), tol.wire_eps)
    bow = [(0, 0, 0), (1, 1, 0), (1, 0, 0), (0, 1, 0)]
    wire = [np.array([bow[k], bow[(k + 1) % 4]], float) for k in range(4)]
    assert polyline_self_intersects(wire, tol.wire_eps)
    inner = [p * 0.5 + 0.25 for p in _square()]
    assert not polyline_self_intersects(_square(), tol.wire_eps)
    assert not polyline_self_intersects(inner, tol.wire_eps)


def test_self_intersection_reversal_invariant():
    rng = np.random.default_rng(5)
    for _ in range(30):
        pts = rng.uniform(size=(5, 3))
        pts[:, 2] = 0
        wire = [np.array([pts[k], pts[(k + 1) % 5]]) for k in range(5)]
        rev = [w[::-1] for w in wire[::-1]]
        assert polyline_self_intersects(wire, 0.01) == polyline_self_intersects(rev, 0.01)


def test_two_arc_wire_is_clean():
    top = Arc3((1, 0, 0), (0, 1, 0), (-1, 0, 0))
    bottom = Arc3((-1, 0, 0), (0, -1, 0), (1, 0, 0))
    assert not polyline_self_intersects([top.polyline(32), bottom.polyline(32)], 0.01)


def test_line_seg():
    ln = LineSeg((0, 0, 0), (2, 0, 0))
    assert ln.length == 2 and np.allclose(ln.direction, (1, 0, 0))
    assert np.allclose(ln.point_at(0.25), (0.5, 0, 0))


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerances(geom_eps=0)
    with pytest.raises(ValueError):
        Tolerances(arc_samples=3)
