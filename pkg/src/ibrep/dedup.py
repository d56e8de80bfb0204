"""Weisfeiler-Lehman content hashing of indexed B-reps and sample metrics.

Digests are BLAKE2b with a 16-byte output.  Every string fed to the digest
is UTF-8 encoded and length-prefixed with a 4-byte big-endian count, so the
hashes are reproducible across platforms and implementations.
"""
from __future__ import annotations

import hashlib
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core import IndexedBRep
from .geom import CollinearError, resolve_arc_mid
from .kernel.curves import vertex_positions

DIGEST_SIZE = 16
DEFAULT_ITERATIONS = 3


def digest(*parts: bytes) -> bytes:
    h = hashlib.blake2b(digest_size=DIGEST_SIZE)
    for p in parts:
        h.update(struct.pack(">I", len(p)))
        h.update(p)
    return h.digest()


@dataclass
class AttributedGraph:
    """Undirected simple graph with string attributes on nodes and edges."""

    nodes: list = field(default_factory=list)
    edges: dict = field(default_factory=dict)  # (i, j) with i < j -> attribute

    def add_edge(self, i: int, j: int, attr: str) -> None:
        """Add an edge; a repeated pair merges attributes as a sorted ``|``-joined list."""
        if i == j:
            raise ValueError("self-loops are not allowed")
        key = (min(i, j), max(i, j))
        if key in self.edges:
            attr = "|".join(sorted(self.edges[key].split("|") + [attr]))
        self.edges[key] = attr

    def neighbors(self) -> dict:
        out = defaultdict(list)
        for (i, j), a in self.edges.items():
            out[i].append((a, j))
            out[j].append((a, i))
        return out


def _triple(v) -> str:
    return ",".join(str(c) for c in v)


def arc_mid_index(b: IndexedBRep, edge: Sequence[int], points=None) -> int:
    """Vertex index playing the mid-point role of a three-vertex edge.

    Collinear triples fall back to the middle stored index.
    """
    pts = vertex_positions(b) if points is None else points
    try:
        res = resolve_arc_mid([pts[i] for i in edge])
    except CollinearError:
        return edge[1]
    return edge[res.order[1]]


def vertex_adjacency_graph(b: IndexedBRep) -> AttributedGraph:
    """Vertices as nodes, edges as graph edges; arc mid-points fold into edge attributes."""
    pts = vertex_positions(b)
    ends, spans = set(), []
    for e in b.edges:
        if len(e) == 3:
            m = arc_mid_index(b, e, pts)
            a, c = (i for i in e if i != m)
            spans.append((a, c, "arc:" + _triple(b.vertices[m])))
        else:
            a, c = e
            spans.append((a, c, "line"))
        ends.update((a, c))
    used_as_mid = {v for e in b.edges if len(e) == 3 for v in e} - ends
    keep = [v for v in range(len(b.vertices)) if v not in used_as_mid]
    node_id = {v: k for k, v in enumerate(keep)}
    g = AttributedGraph([_triple(b.vertices[v]) for v in keep])
    for a, c, attr in spans:
        g.add_edge(node_id[a], node_id[c], attr)
    return g


def face_adjacency_graph(b: IndexedBRep) -> AttributedGraph:
    """Faces as nodes, joined when they share edges; edge attribute is the shared count."""
    kind = ["arc" if len(e) == 3 else "line" for e in b.edges]
    g = AttributedGraph([",".join(sorted(kind[e] for e in f)) for f in b.faces])
    users = defaultdict(list)
    for fi, f in enumerate(b.faces):
        for e in f:
            users[e].append(fi)
    shared = Counter()
    for fs in users.values():
        for x in range(len(fs)):
            for y in range(x + 1, len(fs)):
                shared[min(fs[x], fs[y]), max(fs[x], fs[y])] += 1
    for (i, j), n in sorted(shared.items()):
        g.add_edge(i, j, str(n))
    return g


def wl_hash(g: AttributedGraph, iterations: int = DEFAULT_ITERATIONS) -> bytes:
    """Weisfeiler-Lehman graph digest, invariant to node numbering."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    labels = [digest(a.encode()) for a in g.nodes]
    nbrs = g.neighbors()
    for _ in range(iterations):
        labels = [
            digest(labels[i], *sorted(digest(a.encode(), labels[j]) for a, j in nbrs.get(i, ())))
            for i in range(len(labels))
        ]
    return digest(*sorted(labels))


@dataclass(frozen=True)
class ContentHash:
    face_graph_hash: bytes
    vertex_graph_hash: bytes

    @property
    def combined(self) -> bytes:
        return self.face_graph_hash + self.vertex_graph_hash

    @property
    def hex(self) -> str:
        return self.combined.hex()

    def __str__(self):
        return self.hex


def content_hash(b: IndexedBRep, iterations: int = DEFAULT_ITERATIONS) -> ContentHash:
    return ContentHash(wl_hash(face_adjacency_graph(b), iterations), wl_hash(vertex_adjacency_graph(b), iterations))


@dataclass(frozen=True)
class Metrics:
    valid: float  # percent of all samples
    novel: float  # percent of valid samples absent from the training hashes
    unique: float  # distinct hashes among valid samples, percent of valid samples
    n_samples: int
    n_valid: int
    undefined: bool = False  # no samples, or no valid ones for novel/unique

    def line(self) -> str:
        flag = " undefined" if self.undefined else ""
        return (f"valid={self.valid:.2f} novel={self.novel:.2f} unique={self.unique:.2f} "
                f"n={self.n_samples} n_valid={self.n_valid}{flag}")


def metrics(hashes: Sequence, valid: Sequence[bool], train_hashes: Iterable[str] = ()) -> Metrics:
    """Valid, Novel and Unique percentages.

    ``hashes`` holds one hex string (or :class:`ContentHash`, or ``None``)
    per sample; only entries flagged valid are consulted.  A group of ``k``
    identical valid samples counts once toward Unique.
    """
    if len(hashes) != len(valid):
        raise ValueError(f"{len(hashes)} hashes but {len(valid)} validity flags")
    n = len(valid)
    hv = [str(h) for h, ok in zip(hashes, valid) if ok]
    if n == 0:
        return Metrics(0.0, 0.0, 0.0, 0, 0, undefined=True)
    if not hv:
        return Metrics(0.0, 0.0, 0.0, n, 0, undefined=True)
    train = {str(h).lower() for h in train_hashes}
    novel = sum(1 for h in hv if h.lower() not in train)
    return Metrics(100.0 * len(hv) / n, 100.0 * novel / len(hv), 100.0 * len(set(hv)) / len(hv), n, len(hv))


def dedup(breps: Sequence[IndexedBRep]) -> tuple[list[int], dict[int, int]]:
    """Representative indices (first occurrence) and a duplicate -> representative map."""
    first: dict = {}
    reps, dupes = [], {}
    for i, b in enumerate(breps):
        h = content_hash(b).hex
        if h in first:
            dupes[i] = first[h]
        else:
            first[h] = i
            reps.append(i)
    return reps, dupes


def write_hash_file(path, hashes: Iterable) -> None:
    lines = sorted({str(h).lower() for h in hashes})
    Path(path).write_text("".join(h + "\n" for h in lines), encoding="ascii")


def read_hash_file(path) -> set[str]:
    out = set()
    for k, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            bytes.fromhex(line)
        except ValueError:
            raise ValueError(f"{path}:{k}: not a hex digest: {line[:40]!r}") from None
        out.add(line.lower())
    return out
