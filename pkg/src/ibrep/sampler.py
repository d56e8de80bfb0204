"""Masked nucleus sampling of vertex, edge and face sequences.

Generation follows the factorization ``p(F | E, V) p(E | V) p(V)``: the
vertex sequence is sampled first, its length fixes the edge vocabulary
(``|V| + 2``), and the decoded edges fix the face vocabulary (``|E| + 2``).
Token scores come from a pluggable :class:`TokenScorer`; at each step the
grammar mask from :mod:`ibrep.tokens` removes invalid tokens before the
temperature softmax and nucleus truncation.

Random streams: each sequence kind draws from its own
``numpy.random.PCG64`` generator seeded with
``SeedSequence(seed, spawn_key=(k,))`` where ``k`` is 0, 1, 2 for vertex,
edge, face.  The same seed therefore reproduces the same result on any
platform with numpy's PCG64.
"""
from __future__ import annotations

import dataclasses
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .core import DEFAULT_BITS, IndexedBRep, Violation, structural_check
from .tokens import (EDGE, EOS, FACE, KINDS, VERTEX, MaskState, TokenSequence, Vocab, flatten, split_loose,
                     unflatten)

COMPLETED = "completed"
DEAD_END = "dead_end"
TRUNCATED = "truncated"

_BOS = -3


class EmptyValidSet(RuntimeError):
    """The grammar leaves no token to sample."""


@runtime_checkable
class TokenScorer(Protocol):
    def scores(self, kind: str, prefix: Sequence[int], vocab: Vocab) -> np.ndarray:
        """One finite score per vocab position, given the tokens emitted so far."""


class UniformScorer:
    """Scores every token equally."""

    def scores(self, kind, prefix, vocab):
        return np.zeros(vocab.n_tokens)

    def __repr__(self):
        return "UniformScorer()"


class NGramScorer:
    """Additive-smoothed n-gram count model over token sequences, per kind.

    Scores are ``log(count + alpha)`` for the last ``order - 1`` tokens as
    context, so a softmax at temperature 1 yields the smoothed n-gram
    distribution.  Contexts never seen in training score uniformly.
    """

    def __init__(self, order: int = 3, alpha: float = 0.01):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.order = order
        self.alpha = alpha
        self.counts: dict = {k: defaultdict(Counter) for k in KINDS}

    def _context(self, prefix) -> tuple:
        n = self.order - 1
        if n == 0:
            return ()
        ctx = tuple(prefix[-n:]) if len(prefix) else ()
        return (_BOS,) * (n - len(ctx)) + ctx

    def fit(self, corpus) -> "NGramScorer":
        """Count n-grams in ``corpus``.

        ``corpus`` holds :class:`TokenSequence` objects or whole
        :class:`IndexedBRep` models (flattened on the fly).
        """
        seqs = []
        for item in corpus:
            if isinstance(item, IndexedBRep):
                seqs.extend(flatten(item))
            else:
                seqs.append(item)
        if not seqs:
            raise ValueError("cannot fit an n-gram model on an empty corpus")
        for s in seqs:
            toks = list(s.tokens)
            for i, tok in enumerate(toks):
                self.counts[s.kind][self._context(toks[:i])][tok] += 1
        return self

    def scores(self, kind, prefix, vocab):
        table = self.counts[kind].get(self._context(list(prefix)))
        if not table:
            return np.zeros(vocab.n_tokens)
        out = np.full(vocab.n_tokens, math.log(self.alpha))
        for tok, c in table.items():
            if tok >= vocab.size:
                continue
            out[vocab.position(tok)] = math.log(c + self.alpha)
        return out

    def __repr__(self):
        return f"NGramScorer(order={self.order}, alpha={self.alpha})"


@dataclass(frozen=True)
class SamplerConfig:
    top_p: float = 1.0
    temperature: float = 1.0
    seed: int = 0
    mask_value: float = -1e9
    max_tokens: int = 2048
    bits: int = DEFAULT_BITS
    prune_dead_ends: bool = False

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if not self.temperature > 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not self.mask_value < 0:
            raise ValueError("mask_value must be negative")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


def stream_rng(seed: int, kind: str) -> np.random.Generator:
    """Independent generator for one sequence kind of one sample."""
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(KINDS.index(kind),))
    return np.random.Generator(np.random.PCG64(ss))


def nucleus_probs(scores, valid, top_p: float = 1.0, temperature: float = 1.0,
                  mask_value: float = -1e9) -> np.ndarray:
    """Probability vector after masking, temperature softmax and top-p truncation.

    The retained set is the smallest prefix of tokens (sorted by descending
    probability, ties by position) whose cumulative mass reaches ``top_p``;
    the token that crosses the threshold is kept.
    """
    scores = np.asarray(scores, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    if scores.shape != valid.shape:
        raise ValueError(f"scores {scores.shape} and mask {valid.shape} differ in shape")
    if not valid.any():
        raise EmptyValidSet("no valid token to sample")
    logits = np.where(valid, scores, mask_value) / temperature
    logits -= logits.max()
    p = np.exp(logits)
    p[~valid] = 0.0
    p /= p.sum()
    order = np.argsort(-p, kind="stable")
    cum = np.cumsum(p[order])
    keep = int(np.searchsorted(cum, top_p * (1.0 - 1e-12))) + 1
    kept = np.zeros_like(p)
    idx = order[:min(keep, len(order))]
    kept[idx] = p[idx]
    kept[~valid] = 0.0
    return kept / kept.sum()


def masked_step(scores, valid, cfg: SamplerConfig, rng: np.random.Generator) -> int:
    """Sample one vocab position from the masked nucleus distribution.

    Raises:
        EmptyValidSet: if ``valid`` has no true entry.
    """
    p = nucleus_probs(scores, valid, cfg.top_p, cfg.temperature, cfg.mask_value)
    order = np.argsort(-p, kind="stable")
    cum = np.cumsum(p[order])
    u = rng.random()
    i = int(np.searchsorted(cum, u, side="right"))
    i = min(i, int(np.count_nonzero(p)) - 1)
    return int(order[i])


@dataclass
class GenerationResult:
    vertices: TokenSequence
    edges: TokenSequence
    faces: TokenSequence
    outcome: str
    stage: str | None = None  # sequence kind where generation stopped early
    brep: IndexedBRep | None = None
    violations: list = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.outcome == COMPLETED

    @property
    def structurally_valid(self) -> bool:
        return self.brep is not None


def _sample_sequence(kind: str, size: int, scorer: TokenScorer, cfg: SamplerConfig, masked: bool):
    vocab = Vocab(kind, size)
    rng = stream_rng(cfg.seed, kind)
    state = MaskState(kind, size, cfg.prune_dead_ends)
    toks: list[int] = []
    everything = np.ones(vocab.n_tokens, dtype=bool)
    while len(toks) < cfg.max_tokens:
        valid = state.valid_positions() if masked else everything
        if not valid.any():
            return toks, DEAD_END
        scores = np.asarray(scorer.scores(kind, toks, vocab), dtype=float)
        if scores.shape != (vocab.n_tokens,) or not np.all(np.isfinite(scores)):
            raise ValueError(f"{scorer!r} returned invalid scores for {kind} vocab of {vocab.n_tokens}")
        tok = vocab.token(masked_step(scores, valid, cfg, rng))
        toks.append(tok)
        if masked:
            state.advance(tok)
        if tok == EOS:
            return toks, COMPLETED
    return toks, TRUNCATED


def _empty(kind):
    return TokenSequence(kind, ())


def generate(scorers, cfg: SamplerConfig = SamplerConfig(), masked: bool = True) -> GenerationResult:
    """Sample vertices, then edges given vertices, then faces given both.

    ``scorers`` is a single :class:`TokenScorer` or a mapping from kind to
    scorer.  With ``masked=False`` the grammar mask is skipped and the output
    is grouped loosely, which is only useful as a baseline.
    """
    if not isinstance(scorers, Mapping):
        scorers = {k: scorers for k in KINDS}
    seqs = {k: _empty(k) for k in KINDS}
    size = 1 << cfg.bits
    decoded = {}
    for kind in KINDS:
        toks, outcome = _sample_sequence(kind, size, scorers[kind], cfg, masked)
        seqs[kind] = TokenSequence(kind, toks)
        if outcome != COMPLETED:
            return GenerationResult(seqs[VERTEX], seqs[EDGE], seqs[FACE], outcome, stage=kind)
        if masked:
            decoded[kind] = unflatten(kind, toks, size=size, bits=cfg.bits)
        else:
            decoded[kind] = split_loose(kind, toks)
        size = len(decoded[kind])
    brep = IndexedBRep(decoded[VERTEX], decoded[EDGE], decoded[FACE], cfg.bits)
    problems: list[Violation] = structural_check(brep)
    return GenerationResult(seqs[VERTEX], seqs[EDGE], seqs[FACE], COMPLETED,
                            brep=None if problems else brep, violations=problems)


def generate_many(scorers, n: int, cfg: SamplerConfig = SamplerConfig(), masked: bool = True) -> list:
    """``n`` samples; sample ``i`` uses seed ``cfg.seed + i``."""
    out = []
    for i in range(n):
        sub = dataclasses.replace(cfg, seed=cfg.seed + i)
        out.append(generate(scorers, sub, masked=masked))
    return out
