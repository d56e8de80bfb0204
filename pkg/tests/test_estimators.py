import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ibrep import fixtures
from ibrep.estimators import (BRepReconstructor, ContentHasher, IndexedBRepTokenizer, MaskedSolidSampler,
                              NGramTokenScorer, check_breps)


def test_params_and_clone():
    est = MaskedSolidSampler(order=4, top_p=0.8)
    assert clone(est).get_params()["order"] == 4
    assert BRepReconstructor(wire_eps=0.02).get_params()["wire_eps"] == 0.02


def test_check_breps():
    with pytest.raises(TypeError):
        check_breps(fixtures.cube())
    with pytest.raises(TypeError):
        check_breps([1])


def test_tokenizer_round_trip(small_corpus):
    tok = IndexedBRepTokenizer().fit(small_corpus)
    assert tok.inverse_transform(tok.transform(small_corpus)) == list(small_corpus)


def test_reconstructor_predict():
    flags = BRepReconstructor().fit().predict([fixtures.cube(), fixtures.bowtie()])
    assert flags.tolist() == [True, False]


def test_sampler_and_hasher(small_corpus):
    with pytest.raises(NotFittedError):
        MaskedSolidSampler(order=3).sample(1)
    with pytest.raises(NotFittedError):
        NGramTokenScorer().scores("vertex", [], None)
    rs = MaskedSolidSampler(order=3, seed=2).fit(small_corpus).sample(5)
    assert len(rs) == 5 and all(r.structurally_valid for r in rs if r.completed)
    assert len(MaskedSolidSampler(order=0).sample(3)) == 3
    hx = ContentHasher().fit_transform([fixtures.cube(), fixtures.cube()])
    assert hx.dtype == object and hx[0] == hx[1]
