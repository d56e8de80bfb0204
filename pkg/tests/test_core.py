import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibrep import fixtures
from ibrep.core import (IndexedBRep, MergedVertexCollision, QuantGrid, StructureError, canonicalize, corpus_filter,
                        dequantize, dequantize_all, from_points, quantize, structural_check, token_lengths)


def test_bin_examples():
    g = QuantGrid(6)
    assert g.bin(0.0) == 0 and g.bin(1.0) == 63 and g.bin(0.5) == 32


def test_dequantize_examples():
    g = QuantGrid(6)
    assert dequantize(g, (0, 0, 0))[0] == 0.0078125
    assert dequantize(g, (63, 63, 63))[2] == 0.9921875
    with pytest.raises(ValueError):
        dequantize(g, (64, 0, 0))


def test_every_bin_is_a_fixed_point():
    g = QuantGrid(6)
    centers = g.bin_center(np.arange(64))
    assert np.array_equal(g.bin(centers), np.arange(64))


def test_quantize_normalizes_longest_side():
    pts = np.array([[0, 0, 0], [10, 2, 4], [5, 1, 1]], float)
    grid, triples = quantize(pts)
    unit_pts = grid.normalize(pts)
    assert unit_pts.min() >= 0 and unit_pts.max() <= 1
    assert np.ptp(unit_pts[:, 0]) == pytest.approx(1.0)
    # shorter axes are centered
    assert unit_pts[:, 1].min() == pytest.approx(1 - unit_pts[:, 1].max())
    assert triples[0] == (int(grid.bin(unit_pts[0, 2])), int(grid.bin(unit_pts[0, 1])), 0)
    with pytest.raises(ValueError):
        quantize(np.empty((0, 3)))


@given(st.lists(st.tuples(*[st.floats(-100, 100, allow_nan=False)] * 3), min_size=1, max_size=30))
@settings(max_examples=100, deadline=None)
def test_quantize_dequantize_quantize_is_stable(pts):
    grid, triples = quantize(pts)
    back = dequantize_all(grid, triples)
    bins = grid.bin(grid.normalize(back))
    assert [tuple(int(c) for c in b[::-1]) for b in bins] == triples


def test_canonicalize_examples():
    b = canonicalize([(3, 2, 1), (3, 2, 0), (0, 0, 0)], [(0, 1), (1, 2)], [(0, 1)])
    assert b.vertices == ((0, 0, 0), (3, 2, 0), (3, 2, 1))
    assert b.edges == ((0, 1), (1, 2))
    assert canonicalize([(0, 0, 0), (0, 0, 1)], [(1, 0)], []).edges == ((0, 1),)


def test_canonicalize_idempotent(small_corpus):
    for b in small_corpus:
        again = canonicalize(b.vertices, b.edges, b.faces, b.bits)
        assert again == b
        assert structural_check(b) == []


def _shuffled(b, rng):
    vp = rng.permutation(len(b.vertices))
    inv_v = np.argsort(vp)
    verts = [b.vertices[i] for i in vp]
    ep = rng.permutation(len(b.edges))
    inv_e = np.argsort(ep)
    edges = [list(rng.permutation([int(inv_v[i]) for i in b.edges[j]])) for j in ep]
    faces = [list(rng.permutation([int(inv_e[i]) for i in f])) for f in b.faces]
    faces = [faces[i] for i in rng.permutation(len(faces))]
    return verts, edges, faces


def test_canonicalize_permutation_invariant(small_corpus):
    rng = np.random.default_rng(0)
    for b in small_corpus:
        for _ in range(5):
            assert canonicalize(*_shuffled(b, rng)) == b


def test_canonicalize_errors():
    with pytest.raises(StructureError, match="cardinality 4"):
        canonicalize([(0, 0, 0)] * 1 + [(0, 0, i) for i in range(1, 4)], [(0, 1, 2, 3)], [])
    with pytest.raises(StructureError, match="outside"):
        canonicalize([(64, 0, 0)], [], [])
    with pytest.raises(StructureError, match="more than two faces"):
        canonicalize([(0, 0, 0), (0, 0, 1), (0, 1, 0)], [(0, 1), (1, 2), (0, 2)], [(0, 1), (0, 2), (0, 1, 2)])
    with pytest.raises(MergedVertexCollision):
        canonicalize([(1, 1, 1), (1, 1, 1)], [], [], on_duplicate="raise")


def test_from_points_collision():
    pts = [(0, 0, 0), (1, 1, 1), (0.001, 0, 0)]
    with pytest.raises(MergedVertexCollision) as info:
        from_points(pts, [(0, 1)], [])
    assert info.value.pairs == ((0, 2),)
    grid, b = from_points(pts, [(0, 1)], [], on_collision="merge")
    assert len(b.vertices) == 2


def test_structural_check_examples():
    cube = fixtures.cube()
    assert structural_check(cube) == []
    assert len(cube.vertices) == 8 and len(cube.edges) == 12 and all(len(f) == 4 for f in cube.faces)
    dup = IndexedBRep(cube.vertices, cube.edges, ((0, 0, 1),) + cube.faces[1:], cube.bits)
    assert any(v.rule == "duplicate edge in face" for v in structural_check(dup))
    shared = IndexedBRep(cube.vertices, cube.edges, cube.faces + ((0, 1),), cube.bits)
    assert any(v.rule == "edge shared by >2 faces" for v in structural_check(shared))


def test_corpus_filter_examples():
    assert corpus_filter(fixtures.cube()) == (False, "trivial (<8 faces)")
    verts = [(0, 0, i) for i in range(2)]
    many = IndexedBRep(tuple(verts), ((0, 1),), tuple(((0,),) * 131), 6)
    assert corpus_filter(many) == (False, ">130 faces")
    pocket = next(b for b in fixtures.generate("pocket", 20, 1) if len(b.faces) >= 10)
    assert sum(token_lengths(pocket)) > 200 or corpus_filter(pocket).keep
    assert corpus_filter(pocket, merged_vertices=True) == (False, "merged vertices after quantization")


def test_corpus_filter_keeps_mid_size_model():
    fil = next(b for b in fixtures.generate("fillet", 50, 2) if len(b.faces) >= 8 and sum(token_lengths(b)) <= 200)
    assert corpus_filter(fil).keep
    assert corpus_filter(fil, max_tokens=sum(token_lengths(fil)) - 1).reason.startswith(">")
