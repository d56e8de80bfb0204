import numpy as np
import pytest

from ibrep import fixtures
from ibrep.core import canonicalize
from ibrep.geom import Tolerances
from ibrep.kernel import (CONE, CYLINDER, PLANE, SPHERE, TORUS, NestedAmbiguity, OpenWire, UnclassifiableFace,
                          assemble_wires, build_curves, build_face, infer_surface, reconstruct, signed_area,
                          triangulate)

TOL = Tolerances()


def _square(with_hole=False, open_=False):
    v = [(0, 0, 0), (0, 0, 60), (0, 60, 60), (0, 60, 0)]
    e = [(0, 1), (1, 2), (2, 3)] + ([] if open_ else [(3, 0)])
    if with_hole:
        v += [(0, 20, 20), (0, 20, 40), (0, 40, 40), (0, 40, 20)]
        e += [(4, 5), (5, 6), (6, 7), (7, 4)]
    return canonicalize(v, e, [list(range(len(e)))])


def test_build_curves_kinds():
    curves = build_curves(fixtures.half_cylinder())
    kinds = {c.kind for c in curves}
    assert kinds == {"line", "arc"}
    for c in curves:
        assert len(c.polyline(16)) >= 2


def test_assemble_square_and_hole():
    b = _square()
    wires = assemble_wires(build_curves(b))
    assert len(wires) == 1 and len(wires[0]) == 4
    chain = wires[0].vertex_chain(build_curves(b))
    assert all(chain[k][1] == chain[(k + 1) % 4][0] for k in range(4))
    b = _square(with_hole=True)
    wires = assemble_wires(build_curves(b))
    assert [len(w) for w in wires] == [4, 4]
    assert wires[0].role == "outer" and wires[1].role == "inner"


def test_assemble_open_wire():
    with pytest.raises(OpenWire):
        assemble_wires(build_curves(_square(open_=True)))


def test_nested_ambiguity():
    # two disjoint squares of equal size
    v = [(0, 0, 0), (0, 0, 10), (0, 10, 10), (0, 10, 0), (0, 30, 30), (0, 30, 40), (0, 40, 40), (0, 40, 30)]
    e = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4)]
    with pytest.raises(NestedAmbiguity):
        assemble_wires(build_curves(canonicalize(v, e, [list(range(8))])))


def test_face_triangle_counts():
    for b, n in ((_square(), 2), (_square(with_hole=True), 8)):
        curves = build_curves(b)
        face = build_face(assemble_wires(curves), curves, infer_surface(curves))
        assert len(face.triangles) == n


def test_planar_triangulation_area():
    rng = np.random.default_rng(2)
    for _ in range(100):
        k = rng.integers(5, 30)
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        r = rng.uniform(0.5, 1.0, k)
        poly = np.c_[r * np.cos(ang), r * np.sin(ang)]
        if np.diff(np.r_[ang, ang[0] + 2 * np.pi]).max() >= 2 * np.pi / 3:
            continue  # keep the origin well inside so the hole fits
        hole = 0.15 * np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], float)[::-1]
        pts, tris = triangulate(poly, [hole])
        tri_area = sum(signed_area(pts[t]) for t in tris)
        assert tri_area == pytest.approx(signed_area(poly) - abs(signed_area(hole)), abs=1e-6)
        assert all(signed_area(pts[t]) > 0 for t in tris)


def test_canonical_classification():
    want = {"plane": PLANE, "cylinder": CYLINDER, "cone": CONE, "sphere": SPHERE, "torus": TORUS}
    for name, b in fixtures.canonical_fixtures().items():
        m = reconstruct(b)
        kinds = {f.surface_kind for f in m.faces}
        assert want[name] in kinds
        assert kinds <= {PLANE, want[name]}
        assert m.report.valid and m.report.closed_solid


def test_half_cylinder_distance():
    b = fixtures.half_cylinder()
    m = reconstruct(b)
    for f in m.faces:
        pts = np.concatenate([c.polyline(64) for c in f.curves])
        assert np.abs(f.surface.distance(pts)).max() <= TOL.geom_eps


def test_lines_only_nonplanar_unclassifiable():
    v = [(0, 0, 0), (0, 0, 60), (0, 60, 60), (30, 60, 0)]
    b = canonicalize(v, [(0, 1), (1, 2), (2, 3), (3, 0)], [[0, 1, 2, 3]])
    with pytest.raises(UnclassifiableFace):
        infer_surface(build_curves(b))


def test_validate_examples():
    r = reconstruct(fixtures.cube()).report
    assert r.valid and r.closed_solid and all(f["triangles"] >= 2 for f in r.faces)
    r = reconstruct(fixtures.open_box()).report
    assert r.valid and not r.closed_solid
    r = reconstruct(fixtures.bowtie()).report
    assert not r.valid and not r.no_self_intersection


def test_face_order_independence():
    b = fixtures.generate("pocket", 1, seed=5)[0]
    base = reconstruct(b)
    perm = np.random.default_rng(0).permutation(len(b.faces))
    shuffled = canonicalize(list(b.vertices), list(b.edges), [b.faces[i] for i in perm], bits=b.bits)
    other = reconstruct(shuffled)
    assert other.report.valid == base.report.valid
    assert sorted(f.n_triangles for f in other.faces) == sorted(f.n_triangles for f in base.faces)


def test_mesh_volume_positive_and_grid_mapping():
    m = reconstruct(fixtures.cube())
    pts, tris = m.mesh()
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6
    side = (50 - 10) / 64
    assert vol == pytest.approx(side ** 3, rel=1e-9)


def test_threaded_reconstruct_matches():
    b = fixtures.generate("fillet", 1, seed=3)[0]
    a = reconstruct(b).report.to_dict()
    c = reconstruct(b, workers=4).report.to_dict()
    assert a == c
