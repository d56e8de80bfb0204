"""scikit-learn style wrappers around the pipeline stages.

Inputs are sequences of :class:`IndexedBRep` rather than numeric arrays, so
validation is done by :func:`check_breps` instead of ``check_array``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import DEFAULT_BITS, IndexedBRep, structural_check
from .dedup import DEFAULT_ITERATIONS, content_hash
from .geom import Tolerances
from .kernel import reconstruct
from .sampler import NGramScorer, SamplerConfig, UniformScorer, generate_many
from .tokens import assemble, flatten


def check_breps(X, require_valid: bool = False) -> list[IndexedBRep]:
    """Validate a sequence of models; optionally reject structural violations."""
    if isinstance(X, IndexedBRep):
        raise TypeError("expected a sequence of IndexedBRep, got a single model")
    items = list(X)
    for i, b in enumerate(items):
        if not isinstance(b, IndexedBRep):
            raise TypeError(f"item {i} is {type(b).__name__}, not IndexedBRep")
        if require_valid:
            bad = structural_check(b)
            if bad:
                raise ValueError(f"item {i}: {bad[0]}")
    return items


class IndexedBRepTokenizer(TransformerMixin, BaseEstimator):
    """Models to ``(vertex, edge, face)`` token lists and back."""

    def __init__(self, bits: int = DEFAULT_BITS):
        self.bits = bits

    def fit(self, X, y=None):
        check_breps(X, require_valid=True)
        self.n_models_ = len(X)
        return self

    def transform(self, X):
        return [tuple(list(s.tokens) for s in flatten(b)) for b in check_breps(X)]

    def inverse_transform(self, T):
        return [assemble(v, e, f, bits=self.bits) for v, e, f in T]


class NGramTokenScorer(BaseEstimator):
    """Fitted n-gram scorer usable wherever a token scorer is expected."""

    def __init__(self, order: int = 3, alpha: float = 0.01):
        self.order = order
        self.alpha = alpha

    def fit(self, X, y=None):
        self.model_ = NGramScorer(self.order, self.alpha).fit(check_breps(X, require_valid=True))
        return self

    def scores(self, kind, prefix, vocab):
        check_is_fitted(self, "model_")
        return self.model_.scores(kind, prefix, vocab)


class MaskedSolidSampler(BaseEstimator):
    """Fits an n-gram scorer (or uses uniform scores) and samples models.

    ``order=0`` selects uniform scores and makes ``fit`` optional.
    """

    def __init__(self, order: int = 3, alpha: float = 0.01, top_p: float = 1.0, temperature: float = 1.0,
                 seed: int = 0, masked: bool = True, prune_dead_ends: bool = True, bits: int = DEFAULT_BITS):
        self.order = order
        self.alpha = alpha
        self.top_p = top_p
        self.temperature = temperature
        self.seed = seed
        self.masked = masked
        self.prune_dead_ends = prune_dead_ends
        self.bits = bits

    def fit(self, X, y=None):
        if self.order > 0:
            self.scorer_ = NGramScorer(self.order, self.alpha).fit(check_breps(X, require_valid=True))
        else:
            self.scorer_ = UniformScorer()
        return self

    def sample(self, n: int):
        scorer = getattr(self, "scorer_", None)
        if scorer is None:
            if self.order > 0:
                check_is_fitted(self, "scorer_")
            scorer = UniformScorer()
        cfg = SamplerConfig(top_p=self.top_p, temperature=self.temperature, seed=self.seed, bits=self.bits,
                            prune_dead_ends=self.prune_dead_ends)
        return generate_many(scorer, n, cfg, masked=self.masked)


class BRepReconstructor(TransformerMixin, BaseEstimator):
    """``transform`` builds solid models; ``predict`` returns the validity flags."""

    def __init__(self, geom_eps: float = 1e-6, wire_eps: float = 0.01, arc_samples: int = 32):
        self.geom_eps = geom_eps
        self.wire_eps = wire_eps
        self.arc_samples = arc_samples

    def _tol(self) -> Tolerances:
        return Tolerances(self.geom_eps, self.wire_eps, self.arc_samples)

    def fit(self, X=None, y=None):
        self.tol_ = self._tol()
        return self

    def transform(self, X):
        tol = getattr(self, "tol_", None) or self._tol()
        return [reconstruct(b, tol) for b in check_breps(X)]

    def predict(self, X):
        return np.array([m.report.valid for m in self.transform(X)], dtype=bool)


class ContentHasher(TransformerMixin, BaseEstimator):
    """Models to hex content hashes."""

    def __init__(self, iterations: int = DEFAULT_ITERATIONS):
        self.iterations = iterations

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return np.array([content_hash(b, self.iterations).hex for b in check_breps(X)], dtype=object)


__all__ = ["check_breps", "IndexedBRepTokenizer", "NGramTokenScorer", "MaskedSolidSampler", "BRepReconstructor",
           "ContentHasher"]
