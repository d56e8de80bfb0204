"""Flattening of indexed B-reps into token sequences and the masking grammar.

Three sequence kinds exist:

* ``vertex``: ``z0, y0, x0, z1, y1, x1, ..., EOS``
* ``edge``:   vertex indices of each hyperedge, ``NEW_EDGE`` between edges, ``EOS``
* ``face``:   edge indices of each face, ``NEW_FACE`` between faces, ``EOS``

Special tokens use negative sentinels (``EOS = -1``, separator ``= -2``).
Inside a score vector the layout is ``[0 .. size-1, SEP, EOS]`` for pointer
kinds and ``[0 .. levels-1, EOS]`` for the vertex kind.

:class:`MaskState` is the executable grammar: it tracks the registers needed
to produce the set of tokens allowed at the next step.  On top of the
published masking rules it requires every edge/face group to be
lexicographically greater than the previous one (and at most 3 tokens per
edge), which is what makes accepted sequences decode into canonical data.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import DEFAULT_BITS, IndexedBRep

EOS = -1
SEP = -2
NEW_EDGE = SEP
NEW_FACE = SEP

VERTEX = "vertex"
EDGE = "edge"
FACE = "face"
KINDS = (VERTEX, EDGE, FACE)

RULES = {
    "V-z": "z-coordinate must be >= the previous z-coordinate",
    "V-y": "y-coordinate must be >= the previous y-coordinate when z repeats",
    "V-x": "x-coordinate must be > the previous x-coordinate when z and y repeat",
    "V-eos": "EOS can only appear after an x-coordinate (t > 0 and t mod 3 = 0)",
    "V-sep": "vertex sequences have no separator token",
    "V-range": "coordinate outside the quantization grid",
    "E-special": "EOS/NEW_EDGE can only appear if t != 0 and cannot repeat consecutively",
    "E-order": "first index of an edge must be >= the first index of the previous edge",
    "E-ascending": "indices within an edge must be strictly ascending",
    "E-card": "NEW_EDGE/EOS can only appear after two or three edge tokens",
    "E-lex": "each edge must sort strictly after the previous edge",
    "E-range": "vertex index out of range",
    "F-special": "EOS/NEW_FACE can only appear if t != 0 and cannot repeat consecutively",
    "F-order": "first index of a face must be >= the first index of the previous face",
    "F-ascending": "indices within a face must be strictly ascending",
    "F-card": "NEW_FACE/EOS can only appear after at least two face tokens",
    "F-twice": "an edge index can only be used twice",
    "F-lex": "each face must sort strictly after the previous face",
    "F-range": "edge index out of range",
    "after-eos": "no token may follow EOS",
    "unterminated": "sequence does not end with EOS",
}


class GrammarViolation(ValueError):
    def __init__(self, kind: str, step: int, token: int, rule: str):
        self.kind = kind
        self.step = step
        self.token = token
        self.rule = rule
        super().__init__(f"{kind} sequence, step {step}, token {token}: [{rule}] {RULES.get(rule, rule)}")


class DeadEnd(RuntimeError):
    """No token is valid in the current grammar state."""


class SequenceViolation(NamedTuple):
    step: int
    token: int
    rule: str

    @property
    def message(self) -> str:
        return RULES.get(self.rule, self.rule)


@dataclass(frozen=True)
class Vocab:
    """Token vocabulary for one sequence kind.

    ``size`` is the number of non-special tokens: quantization levels for
    vertices, ``|V|`` for edges and ``|E|`` for faces.
    """

    kind: str
    size: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.size < 0:
            raise ValueError("vocab size must be non-negative")

    @classmethod
    def for_vertices(cls, bits: int = DEFAULT_BITS) -> "Vocab":
        return cls(VERTEX, 1 << bits)

    @property
    def n_tokens(self) -> int:
        return self.size + (1 if self.kind == VERTEX else 2)

    def position(self, token: int) -> int:
        if token >= 0:
            if token >= self.size:
                raise ValueError(f"token {token} outside vocab of size {self.size}")
            return token
        if token == EOS:
            return self.n_tokens - 1
        if token == SEP and self.kind != VERTEX:
            return self.size
        raise ValueError(f"token {token} not in {self.kind} vocab")

    def token(self, position: int) -> int:
        if position < self.size:
            return int(position)
        if position == self.n_tokens - 1:
            return EOS
        if position == self.size and self.kind != VERTEX:
            return SEP
        raise ValueError(f"position {position} outside vocab")


@dataclass(frozen=True)
class TokenSequence:
    kind: str
    tokens: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))

    @property
    def terminated(self) -> bool:
        return len(self.tokens) > 0 and self.tokens[-1] == EOS and self.tokens.count(EOS) == 1

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def flatten_vertices(b: IndexedBRep) -> TokenSequence:
    toks = [c for v in b.vertices for c in v]
    return TokenSequence(VERTEX, toks + [EOS])


def _flatten_groups(kind: str, groups) -> TokenSequence:
    toks: list[int] = []
    for i, g in enumerate(groups):
        if i:
            toks.append(SEP)
        toks.extend(g)
    toks.append(EOS)
    return TokenSequence(kind, toks)


def flatten_edges(b: IndexedBRep) -> TokenSequence:
    return _flatten_groups(EDGE, b.edges)


def flatten_faces(b: IndexedBRep) -> TokenSequence:
    return _flatten_groups(FACE, b.faces)


def flatten(b: IndexedBRep) -> tuple[TokenSequence, TokenSequence, TokenSequence]:
    return flatten_vertices(b), flatten_edges(b), flatten_faces(b)


class _Constraint(NamedTuple):
    lo: int  # smallest allowed non-special token
    lo_rule: str  # rule responsible for ``lo``
    index_ok: bool  # whether any non-special token may appear
    index_rule: str
    special_ok: bool
    special_rule: str


class MaskState:
    """Grammar registers for one sequence being generated or replayed.

    ``size`` is the number of non-special tokens (grid levels, ``|V|`` or
    ``|E|``).  The state is mutable and owned by a single stream.

    With ``prune_dead_ends=True`` the valid set additionally drops tokens
    after which no terminated sequence can be completed, so sampling never
    stalls (except when the vocab is too small to hold a single group).
    """

    def __init__(self, kind: str, size: int, prune_dead_ends: bool = False):
        self.vocab = Vocab(kind, size)
        self.prune_dead_ends = prune_dead_ends
        self.kind = kind
        self.size = size
        self.t = 0
        self.finished = False
        # vertex registers
        self.prev_vertex: tuple | None = None
        self.partial: list[int] = []
        # pointer registers
        self.prev_group: tuple | None = None
        self.current: list[int] = []
        self.use: Counter = Counter()
        self.n_groups = 0

    @classmethod
    def for_vertices(cls, bits: int = DEFAULT_BITS) -> "MaskState":
        return cls(VERTEX, 1 << bits)

    def copy(self) -> "MaskState":
        other = MaskState(self.kind, self.size, self.prune_dead_ends)
        other.t = self.t
        other.finished = self.finished
        other.prev_vertex = self.prev_vertex
        other.partial = list(self.partial)
        other.prev_group = self.prev_group
        other.current = list(self.current)
        other.use = Counter(self.use)
        other.n_groups = self.n_groups
        return other

    # -- constraint computation -------------------------------------------------
    def _vertex_constraint(self) -> _Constraint:
        phase = self.t % 3
        prev = self.prev_vertex
        if phase == 0:
            lo = prev[0] if prev else 0
            return _Constraint(lo, "V-z", True, "", self.t > 0, "V-eos")
        if phase == 1:
            lo = prev[1] if prev and self.partial[0] == prev[0] else 0
            return _Constraint(lo, "V-y", True, "", False, "V-eos")
        lo = prev[2] + 1 if prev and self.partial[0] == prev[0] and self.partial[1] == prev[1] else 0
        return _Constraint(lo, "V-x", True, "", False, "V-eos")

    def _pointer_constraint(self) -> _Constraint:
        p = "E" if self.kind == EDGE else "F"
        max_len = 3 if self.kind == EDGE else None
        cur = self.current
        prev = self.prev_group
        c = len(cur)
        if c == 0:
            if self.t == 0:
                return _Constraint(0, f"{p}-order", True, "", False, f"{p}-special")
            return _Constraint(prev[0], f"{p}-order", True, "", False, f"{p}-special")
        lo, lo_rule = cur[-1] + 1, f"{p}-ascending"
        tied = prev is not None and tuple(cur) == prev[:c]
        if tied and c < len(prev) and prev[c] > lo:
            lo, lo_rule = prev[c], f"{p}-lex"
        index_ok = max_len is None or c < max_len
        if c < 2:
            special_ok, special_rule = False, f"{p}-card"
        elif tied and c <= len(prev):
            special_ok, special_rule = False, f"{p}-lex"
        else:
            special_ok, special_rule = True, ""
        return _Constraint(lo, lo_rule, index_ok, f"{p}-card", special_ok, special_rule)

    def _constraint(self) -> _Constraint:
        return self._vertex_constraint() if self.kind == VERTEX else self._pointer_constraint()

    # -- public API ---------------------------------------------------------------
    def valid_positions(self) -> np.ndarray:
        """Boolean mask over vocab positions for the next token."""
        mask = np.zeros(self.vocab.n_tokens, dtype=bool)
        if self.finished:
            return mask
        con = self._constraint()
        if con.index_ok and con.lo < self.size:
            mask[con.lo:self.size] = True
            if self.kind == FACE and self.use:
                spent = [k for k, n in self.use.items() if n >= 2 and k >= con.lo]
                mask[spent] = False
        if con.special_ok:
            mask[-1] = True
            if self.kind != VERTEX:
                mask[self.size] = True
        if self.prune_dead_ends:
            for pos in np.flatnonzero(mask[:-1]):
                if not self._completable_after(self.vocab.token(int(pos))):
                    mask[pos] = False
            # a face needs two edges, and two distinct edges need three vertices
            if mask[-1] and self.kind != FACE and self._groups_closed_by_eos() < (3 if self.kind == VERTEX else 2):
                mask[-1] = False
        return mask

    def _groups_closed_by_eos(self) -> int:
        if self.kind == VERTEX:
            return self.t // 3
        return self.n_groups + 1

    # -- dead-end lookahead ---------------------------------------------------------
    def _completable_after(self, token: int) -> bool:
        if self.kind == VERTEX:
            partial = self.partial + [token]
            n = self.size

            def lin(tr):
                return (tr[0] * n + tr[1]) * n + tr[2]

            pad = 3 - len(partial)
            g = lin(partial + [0] * pad)
            if self.prev_vertex is not None:
                g = max(g, lin(self.prev_vertex) + 1)
            if g > lin(partial + [n - 1] * pad):
                return False
            # room for the vertices still needed after this one (three in total)
            return n**3 - 1 - g >= max(0, 3 - (self.t // 3 + 1))
        if token == SEP:
            return _can_finish([], tuple(self.current), self.size, self._available, self._max_len)
        cur = self.current + [token]
        if not _can_finish(cur, self.prev_group, self.size, self._available, self._max_len):
            return False
        if self.kind == EDGE and self.n_groups == 0:
            # the first edge must leave room for a second one
            first = cur if len(cur) >= 2 else cur + [cur[-1] + 1]
            return _can_finish([], tuple(first), self.size, self._available, self._max_len)
        return True

    @property
    def _max_len(self):
        return 3 if self.kind == EDGE else None

    def _available(self, k: int) -> bool:
        return self.kind != FACE or self.use[k] < 2

    def valid_next(self) -> frozenset:
        """Set of tokens (sentinel form) allowed at the next step."""
        return frozenset(self.vocab.token(int(i)) for i in np.flatnonzero(self.valid_positions()))

    def violation(self, token: int) -> str | None:
        """Rule id that ``token`` would break, or ``None`` when it is allowed."""
        if self.finished:
            return "after-eos"
        p = {VERTEX: "V", EDGE: "E", FACE: "F"}[self.kind]
        con = self._constraint()
        if token < 0:
            if token == SEP and self.kind == VERTEX:
                return "V-sep"
            if token not in (EOS, SEP):
                return f"{p}-range"
            return None if con.special_ok else con.special_rule
        if token >= self.size:
            return f"{p}-range"
        if not con.index_ok:
            return con.index_rule
        if token < con.lo:
            return con.lo_rule
        if self.kind == FACE and self.use[token] >= 2:
            return "F-twice"
        return None

    def advance(self, token: int) -> None:
        """Consume ``token``; raises :class:`GrammarViolation` if it is not allowed."""
        rule = self.violation(token)
        if rule is not None:
            raise GrammarViolation(self.kind, self.t, token, rule)
        self._push(token)

    def _push(self, token: int) -> None:
        if token == EOS:
            self.finished = True
        elif self.kind == VERTEX:
            self.partial.append(token)
            if len(self.partial) == 3:
                self.prev_vertex = tuple(self.partial)
                self.partial = []
        elif token == SEP:
            self.prev_group = tuple(self.current)
            self.current = []
            self.n_groups += 1
        else:
            self.current.append(token)
            if self.kind == FACE:
                self.use[token] += 1
        self.t += 1

    @property
    def dead_end(self) -> bool:
        return not self.finished and not self.valid_positions().any()


def _can_finish(cur, prev, n, available, max_len) -> bool:
    """Whether the open group ``cur`` can be closed validly.

    Closing needs at least two ascending indices below ``n`` and a group
    strictly greater than ``prev``.  Only two continuations are worth trying
    at each position: keep tying with ``prev``, or take the smallest index
    that breaks the tie.
    """
    c = len(cur)
    tied = prev is not None and tuple(cur) == tuple(prev[:c])
    if c >= 2 and not (tied and c <= len(prev)):
        return True
    if max_len is not None and c >= max_len:
        return False
    if c:
        lo = cur[-1] + 1
    else:
        lo = prev[0] if prev is not None else 0
    if tied and c < len(prev) and available(prev[c]) and prev[c] >= lo:
        if _can_finish(list(cur) + [prev[c]], prev, n, available, max_len):
            return True
    floor = lo
    if tied and c < len(prev):
        floor = max(lo, prev[c] + 1)
    k = next((k for k in range(floor, n) if available(k)), None)
    if k is None:
        return False
    return _can_finish(list(cur) + [k], prev, n, available, max_len)


def _infer_size(kind: str, tokens: Sequence[int], bits: int) -> int:
    if kind == VERTEX:
        return 1 << bits
    return max([t for t in tokens if t >= 0], default=-1) + 1


def replay_validate(kind: str, seq, size: int | None = None, bits: int = DEFAULT_BITS) -> SequenceViolation | None:
    """Run ``seq`` through the grammar; return the first violation or ``None``.

    When ``size`` is omitted for pointer kinds, it is taken from the largest
    index present (so only ordering rules are checked).
    """
    tokens = list(seq.tokens if isinstance(seq, TokenSequence) else seq)
    if size is None:
        size = _infer_size(kind, tokens, bits)
    state = MaskState(kind, size)
    for t, tok in enumerate(tokens):
        rule = state.violation(int(tok))
        if rule is not None:
            return SequenceViolation(t, int(tok), rule)
        state._push(int(tok))
    if not state.finished:
        return SequenceViolation(len(tokens), EOS, "unterminated")
    return None


def unflatten(kind: str, seq, size: int | None = None, bits: int = DEFAULT_BITS):
    """Decode a terminated sequence into vertices, edges or faces.

    Returns a tuple of ``(z, y, x)`` triples for the vertex kind, otherwise a
    tuple of index tuples.  A bare ``[EOS]`` decodes to an empty tuple even
    though the grammar never emits it.

    Raises:
        GrammarViolation: at the first step where the grammar is broken.
    """
    tokens = list(seq.tokens if isinstance(seq, TokenSequence) else seq)
    if tokens == [EOS]:
        return ()
    bad = replay_validate(kind, tokens, size=size, bits=bits)
    if bad is not None:
        raise GrammarViolation(kind, bad.step, bad.token, bad.rule)
    body = tokens[:-1]
    if kind == VERTEX:
        return tuple(tuple(body[i:i + 3]) for i in range(0, len(body), 3))
    groups: list[tuple] = []
    cur: list[int] = []
    for tok in body:
        if tok == SEP:
            groups.append(tuple(cur))
            cur = []
        else:
            cur.append(tok)
    if cur:
        groups.append(tuple(cur))
    return tuple(groups)


def split_loose(kind: str, tokens: Sequence[int]):
    """Best-effort grouping of an arbitrary token list (no grammar checks).

    Used to assemble output that was sampled without masking: incomplete
    vertex triples are dropped, and tokens after the first EOS are ignored.
    """
    body = []
    for tok in tokens:
        if tok == EOS:
            break
        body.append(int(tok))
    if kind == VERTEX:
        body = [t for t in body if t >= 0]
        return tuple(tuple(body[i:i + 3]) for i in range(0, len(body) - len(body) % 3, 3))
    groups: list[tuple] = []
    cur: list[int] = []
    for tok in body:
        if tok == SEP:
            groups.append(tuple(cur))
            cur = []
        else:
            cur.append(tok)
    if cur:
        groups.append(tuple(cur))
    return tuple(groups)


def assemble(vertex_seq, edge_seq, face_seq, bits: int = DEFAULT_BITS) -> IndexedBRep:
    """Decode three grammar-valid sequences into an :class:`IndexedBRep`.

    Cross references are checked: edge indices against ``|V|`` and face
    indices against ``|E|``.
    """
    verts = unflatten(VERTEX, vertex_seq, bits=bits)
    edges = unflatten(EDGE, edge_seq, size=len(verts))
    faces = unflatten(FACE, face_seq, size=len(edges))
    return IndexedBRep(verts, edges, faces, bits)
