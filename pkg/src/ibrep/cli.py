"""Command-line interface.

Exit codes: 0 success, 1 I/O or parse error, 2 grammar violation,
3 validity-check failure.  ``IBREP_THREADS`` sets the worker count for
commands that process many files; output order always follows input order.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import fixtures
from .core import MAX_TOKENS, StructureError, canonicalize, corpus_filter, token_lengths
from .dedup import content_hash, metrics, read_hash_file, write_hash_file
from .geom import Tolerances
from .io import (IBREP_SUFFIX, FormatError, dumps_ibrep, list_ibrep_files, read_ibrep, read_token_files,
                 write_ibrep, write_off, write_token_files)
from .kernel import reconstruct
from .sampler import NGramScorer, SamplerConfig, UniformScorer, generate
from .tokens import GrammarViolation

EXIT_OK = 0
EXIT_IO = 1
EXIT_GRAMMAR = 2
EXIT_INVALID = 3


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("IBREP_THREADS", "1")))
    except ValueError:
        return 1


def _pool_map(fn, items):
    items = list(items)
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _inputs(paths) -> list[Path]:
    files = list_ibrep_files(paths)
    if not files:
        print("warning: no input files", file=sys.stderr)
    return files


def cmd_encode(args) -> int:
    grid, b = read_ibrep(args.input)
    prefix = args.output or str(args.input).removesuffix(IBREP_SUFFIX).removesuffix(".json")
    for p in write_token_files(prefix, b, grid):
        print(p)
    return EXIT_OK


def cmd_decode(args) -> int:
    grid, b = read_token_files(args.prefix)
    _emit(dumps_ibrep(b, grid), args.output)
    return EXIT_OK


def _tol(args) -> Tolerances:
    return Tolerances(geom_eps=args.geom_eps, wire_eps=args.wire_eps, arc_samples=args.arc_samples)


def cmd_reconstruct(args) -> int:
    grid, b = read_ibrep(args.input)
    model = reconstruct(b, _tol(args))
    if args.mesh:
        pts, tris = model.mesh(grid if args.model_space else None)
        write_off(args.mesh, pts, tris)
    _emit(json.dumps(model.report.to_dict(), indent=2, sort_keys=True) + "\n", args.report)
    return EXIT_OK if model.report.valid else EXIT_INVALID


def parse_scorer(spec: str):
    """``uniform`` or ``ngram:<order>:<corpus path>`` (a file or directory of IBREP-JSON)."""
    if spec == "uniform":
        return UniformScorer()
    parts = spec.split(":", 2)
    if len(parts) != 3 or parts[0] != "ngram":
        raise ValueError(f"bad scorer spec {spec!r}; expected 'uniform' or 'ngram:<order>:<corpus path>'")
    try:
        order = int(parts[1])
    except ValueError:
        raise ValueError(f"bad n-gram order {parts[1]!r}") from None
    files = list_ibrep_files([parts[2]])
    if not files or not all(f.exists() for f in files):
        raise FormatError(f"{parts[2]}: no readable IBREP-JSON corpus")
    return NGramScorer(order).fit([read_ibrep(f)[1] for f in files])


def cmd_sample(args) -> int:
    try:
        scorer = parse_scorer(args.scorer)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    train = read_hash_file(args.train_hashes) if args.train_hashes else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = SamplerConfig(top_p=args.top_p, temperature=args.temperature, seed=args.seed,
                         max_tokens=args.max_tokens, bits=args.bits, prune_dead_ends=not args.no_prune)
    tol = Tolerances()

    def one(i):
        cfg = dataclasses.replace(base, seed=args.seed + i)
        res = generate(scorer, cfg, masked=not args.no_mask)
        row = {"index": i, "seed": cfg.seed, "outcome": res.outcome, "stage": res.stage,
               "structurally_valid": res.structurally_valid, "valid": False, "hash": None, "file": None}
        if res.structurally_valid:
            b = res.brep
            name = f"sample_{i:05d}{IBREP_SUFFIX}"
            write_ibrep(out / name, b)
            row["file"] = name
            row["valid"] = reconstruct(b, tol).report.valid
            row["hash"] = content_hash(b).hex
        return row

    rows = _pool_map(one, range(args.n))
    with open(out / "results.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    counts = Counter(r["outcome"] for r in rows)
    print(" ".join(f"{k}={counts[k]}" for k in sorted(counts)))
    if train is not None:
        m = metrics([r["hash"] for r in rows], [r["valid"] for r in rows], train)
        (out / "metrics.txt").write_text(m.line() + "\n", encoding="utf-8")
        print(m.line())
    return EXIT_OK


def cmd_hash(args) -> int:
    files = _inputs(args.inputs)
    hashes = _pool_map(lambda f: content_hash(read_ibrep(f)[1]).hex, files)
    for f, h in zip(files, hashes):
        print(f"{h}  {f}" if args.with_names else h)
    if args.output:
        write_hash_file(args.output, hashes)
    return EXIT_OK


def cmd_dedup(args) -> int:
    files = _inputs(args.inputs)
    hashes = _pool_map(lambda f: content_hash(read_ibrep(f)[1]).hex, files)
    first, reps, dupes = {}, [], {}
    for f, h in zip(files, hashes):
        if h in first:
            dupes[str(f)] = str(first[h])
        else:
            first[h] = f
            reps.append(str(f))
    _emit(json.dumps({"representatives": reps, "duplicates": dupes}, indent=2, sort_keys=True) + "\n", args.output)
    print(f"{len(reps)} unique of {len(files)}", file=sys.stderr)
    return EXIT_OK


def model_stats(b) -> dict:
    tv, te, tf = token_lengths(b)
    return {"vertices": len(b.vertices), "edges": len(b.edges), "faces": len(b.faces),
            "arcs": b.n_arcs, "lines": b.n_lines, "tokens": [tv, te, tf]}


def _hist(values) -> dict:
    return {str(k): v for k, v in sorted(Counter(values).items())}


def cmd_stats(args) -> int:
    files = _inputs(args.inputs)
    rows = _pool_map(lambda f: {"file": str(f), **model_stats(read_ibrep(f)[1])}, files)
    report = {
        "n_models": len(rows),
        "models": rows,
        "histograms": {
            "vertices": _hist(r["vertices"] for r in rows),
            "edges": _hist(r["edges"] for r in rows),
            "faces": _hist(r["faces"] for r in rows),
            "tokens": _hist(sum(r["tokens"]) for r in rows),
        },
    }
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_filter(args) -> int:
    files = _inputs(args.inputs)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    def decide(f):
        grid, verts, edges, faces = read_ibrep(f, raw=True)
        merged = len(set(verts)) != len(verts)
        try:
            b = canonicalize(verts, edges, faces, bits=grid.bits)
        except StructureError as exc:
            raise FormatError(f"{f}: {exc}") from None
        return grid, b, corpus_filter(b, max_tokens=args.max_tokens, merged_vertices=merged)

    kept = 0
    for f, (grid, b, d) in zip(files, _pool_map(decide, files)):
        print(f"{'keep' if d.keep else 'drop'}\t{f}\t{d.reason}")
        if d.keep:
            kept += 1
            if out:
                write_ibrep(out / Path(f).name, b, grid)
    print(f"kept {kept} of {len(files)}", file=sys.stderr)
    return EXIT_OK


def cmd_gen_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fams = fixtures.FAMILIES if args.family == "all" else (args.family,)
    for fam in fams:
        for i, b in enumerate(fixtures.generate(fam, args.n, args.seed)):
            write_ibrep(out / f"{fam}_{i:04d}{IBREP_SUFFIX}", b)
    print(f"wrote {args.n * len(fams)} files to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ibrep", description="Indexed B-rep tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="write vertex/edge/face token files for an IBREP-JSON file")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="output prefix (default: input name without suffix)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="rebuild IBREP-JSON from <prefix>.{vertices,edges,faces}.tok")
    p.add_argument("prefix")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("reconstruct", help="build the solid, write a mesh and a validity report")
    p.add_argument("input")
    p.add_argument("--mesh", help="ASCII OFF output path")
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.add_argument("--model-space", action="store_true", help="map mesh positions back through the bbox")
    d = Tolerances()
    p.add_argument("--geom-eps", type=float, default=d.geom_eps)
    p.add_argument("--wire-eps", type=float, default=d.wire_eps)
    p.add_argument("--arc-samples", type=int, default=d.arc_samples)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sample", help="generate solids with masked nucleus sampling")
    p.add_argument("--scorer", default="uniform", help="uniform | ngram:<order>:<corpus path>")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-p", type=float, default=1.0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--max-tokens", type=int, default=2048)
    p.add_argument("--bits", type=int, default=6)
    p.add_argument("--no-mask", action="store_true", help="sample without the grammar mask")
    p.add_argument("--no-prune", action="store_true",
                   help="keep tokens that cannot lead to a complete sequence (pruned by default)")
    p.add_argument("--train-hashes", help="hash file for the novelty metric")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("hash", help="print content hashes")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--with-names", action="store_true")
    p.add_argument("-o", "--output", help="also write a sorted hash file")
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("dedup", help="group files by content hash")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("filter", help="apply the dataset filter")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--max-tokens", type=int, default=MAX_TOKENS)
    p.add_argument("--out", help="copy kept files here")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("gen-fixtures", help="write procedural solids")
    p.add_argument("--family", default="all", choices=fixtures.FAMILIES + ("all",))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_fixtures)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GrammarViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRAMMAR
    except (FormatError, StructureError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
