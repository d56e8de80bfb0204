"""Interchange formats: IBREP-JSON documents, token files and OFF meshes.

IBREP-JSON stores vertices as ``[x, y, z]`` integer triples (``"order":
"xyz"``) while everything in memory uses ``(z, y, x)``; :func:`read_ibrep`
and :func:`dumps_ibrep` are the only places the order is swapped.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import DEFAULT_BITS, IndexedBRep, QuantGrid, canonicalize
from .tokens import EDGE, FACE, KINDS, VERTEX, TokenSequence, assemble, flatten

FORMAT_VERSION = 1
IBREP_SUFFIX = ".ibrep.json"
_FIELDS = ("version", "bits", "order", "bbox", "vertices", "edges", "faces")
_REQUIRED = ("version", "bits", "vertices", "edges", "faces")
TOKEN_SUFFIX = {VERTEX: ".vertices.tok", EDGE: ".edges.tok", FACE: ".faces.tok"}
META_SUFFIX = ".meta.json"


class FormatError(ValueError):
    """Malformed input file; the message names the file and location."""


def _int_list(v, where: str) -> list[int]:
    if not isinstance(v, list) or not all(isinstance(c, int) and not isinstance(c, bool) for c in v):
        raise FormatError(f"{where}: expected a list of integers")
    return v


def parse_ibrep(text: str, source: str = "<string>", raw: bool = False):
    """Parse an IBREP-JSON document.

    Returns ``(grid, brep)`` with the topology canonicalized, or with
    ``raw=True`` the unvalidated ``(grid, vertices_zyx, edges, faces)``.

    Raises:
        FormatError: on JSON syntax errors (with line and column), unknown or
            missing fields, wrong types, and structural errors such as an
            edge of cardinality 4 (naming the edge index).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{source}: top level must be an object")
    unknown = sorted(set(doc) - set(_FIELDS))
    if unknown:
        raise FormatError(f"{source}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise FormatError(f"{source}: missing field(s) {', '.join(missing)}")
    if doc["version"] != FORMAT_VERSION:
        raise FormatError(f"{source}: unsupported version {doc['version']!r}")
    if doc.get("order", "xyz") != "xyz":
        raise FormatError(f"{source}: order must be \"xyz\", got {doc['order']!r}")
    bits = doc["bits"]
    if not isinstance(bits, int) or isinstance(bits, bool):
        raise FormatError(f"{source}: bits must be an integer")
    bbox = doc.get("bbox", [0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    if (not isinstance(bbox, list) or len(bbox) != 6
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in bbox)):
        raise FormatError(f"{source}: bbox must hold 6 finite numbers")
    try:
        grid = QuantGrid(bits, tuple(bbox[:3]), tuple(bbox[3:]))
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None
    if not isinstance(doc["vertices"], list):
        raise FormatError(f"{source}: vertices must be a list")
    verts = []
    for i, v in enumerate(doc["vertices"]):
        v = _int_list(v, f"{source}: vertex {i}")
        if len(v) != 3:
            raise FormatError(f"{source}: vertex {i} has {len(v)} coordinates")
        verts.append((v[2], v[1], v[0]))
    for key in ("edges", "faces"):
        if not isinstance(doc[key], list):
            raise FormatError(f"{source}: {key} must be a list")
    edges = [_int_list(e, f"{source}: edge {i}") for i, e in enumerate(doc["edges"])]
    faces = [_int_list(f, f"{source}: face {i}") for i, f in enumerate(doc["faces"])]
    if raw:
        return grid, verts, edges, faces
    try:
        return grid, canonicalize(verts, edges, faces, bits=bits)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None


def read_ibrep(path, raw: bool = False):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from None
    return parse_ibrep(text, str(path), raw=raw)


def _row(values) -> str:
    return "[" + ", ".join(str(int(v)) for v in values) + "]"


def _block(name: str, rows: list[str], last: bool = False) -> str:
    end = "" if last else ","
    if not rows:
        return f'  "{name}": []{end}\n'
    return f'  "{name}": [\n' + ",\n".join("    " + r for r in rows) + f"\n  ]{end}\n"


def dumps_ibrep(b: IndexedBRep, grid: QuantGrid | None = None) -> str:
    """Canonical, byte-stable IBREP-JSON text for ``b``."""
    grid = grid if grid is not None else QuantGrid(b.bits)
    bbox = ", ".join(json.dumps(float(c)) for c in grid.bbox_min + grid.bbox_max)
    return (
        "{\n"
        f'  "version": {FORMAT_VERSION},\n'
        f'  "bits": {b.bits},\n'
        '  "order": "xyz",\n'
        f'  "bbox": [{bbox}],\n'
        + _block("vertices", [_row(v[::-1]) for v in b.vertices])
        + _block("edges", [_row(e) for e in b.edges])
        + _block("faces", [_row(f) for f in b.faces], last=True)
        + "}\n"
    )


def write_ibrep(path, b: IndexedBRep, grid: QuantGrid | None = None) -> None:
    Path(path).write_text(dumps_ibrep(b, grid), encoding="utf-8")


def dumps_tokens(seq: TokenSequence) -> str:
    return "".join(f"{t}\n" for t in seq.tokens)


def parse_tokens(text: str, source: str = "<string>") -> list[int]:
    out = []
    for k, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        try:
            out.append(int(s))
        except ValueError:
            raise FormatError(f"{source}:{k}: not an integer: {s[:40]!r}") from None
    return out


def read_tokens(path) -> list[int]:
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    return parse_tokens(text, str(path))


def write_token_files(prefix, b: IndexedBRep, grid: QuantGrid | None = None) -> list[Path]:
    """Write ``<prefix>.{vertices,edges,faces}.tok`` and ``<prefix>.meta.json``."""
    grid = grid if grid is not None else QuantGrid(b.bits)
    paths = []
    for seq in flatten(b):
        p = Path(str(prefix) + TOKEN_SUFFIX[seq.kind])
        p.write_text(dumps_tokens(seq), encoding="ascii")
        paths.append(p)
    meta = Path(str(prefix) + META_SUFFIX)
    meta.write_text(json.dumps({"bits": b.bits, "bbox": list(grid.bbox_min + grid.bbox_max)}) + "\n",
                    encoding="utf-8")
    paths.append(meta)
    return paths


def read_token_files(prefix):
    """Decode token files back to ``(grid, brep)``.

    Raises:
        FormatError: unreadable or malformed files.
        GrammarViolation: a sequence breaks the grammar.
    """
    meta_path = Path(str(prefix) + META_SUFFIX)
    bits, bbox = DEFAULT_BITS, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            bits, bbox = int(meta.get("bits", bits)), list(meta.get("bbox", bbox))
            grid = QuantGrid(bits, tuple(bbox[:3]), tuple(bbox[3:]))
        except (ValueError, TypeError) as exc:
            raise FormatError(f"{meta_path}: {exc}") from None
    else:
        grid = QuantGrid(bits)
    seqs = [read_tokens(str(prefix) + TOKEN_SUFFIX[k]) for k in KINDS]
    b = assemble(*seqs, bits=bits)
    return grid, canonicalize(b.vertices, b.edges, b.faces, bits=bits)


def write_off(path, points: np.ndarray, triangles: np.ndarray) -> None:
    """ASCII OFF mesh: positions then triangle index triplets."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    lines = ["OFF", f"{len(pts)} {len(tris)} 0"]
    lines += [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in pts]
    lines += [f"3 {a} {b} {c}" for a, b, c in tris]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    words = Path(path).read_text(encoding="ascii").split()
    if not words or words[0] != "OFF":
        raise FormatError(f"{path}: missing OFF header")
    nv, nf = int(words[1]), int(words[2])
    vals = words[4:]
    pts = np.array(vals[:3 * nv], dtype=float).reshape(nv, 3)
    rest = vals[3 * nv:]
    tris = []
    k = 0
    for _ in range(nf):
        n = int(rest[k])
        if n != 3:
            raise FormatError(f"{path}: only triangles are supported")
        tris.append([int(x) for x in rest[k + 1:k + 4]])
        k += 4
    return pts, np.array(tris, dtype=np.int64).reshape(-1, 3)


def list_ibrep_files(paths) -> list[Path]:
    """Expand files and directories (recursively, sorted) into IBREP-JSON paths."""
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(q for q in p.rglob("*" + IBREP_SUFFIX) if q.is_file()))
        else:
            out.append(p)
    return out
