"""Command-line interface: ``cubetree <command> ...``.

Exit codes: 0 success, 1 input error, 2 verification failure (or a replay
mismatch), 3 escalation budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .decomposition import build_ladder, families
from .embedder import EmbedConfig, EmbedError, EscalationExhausted, embed_tree, parse_mode
from .metrics import compute_rho, cubicity_lower_bound
from .oracle import OracleError, exact_cubicity, parse_graph
from .representation import CubeRepresentation, RepresentationError, verify
from .tree import GENERATOR_KINDS, TreeFormatError, format_edge_list, generate, parse_tree

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERIFY = 2
EXIT_ESCALATION = 3

# single positional parameter accepted by each generator
_POSITIONAL = {"path": "n", "star": "m", "random_pruefer": "n"}
CORPUS_SUFFIXES = (".txt", ".tree", ".edges")


class InputError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_tree(path: str, root: str):
    return parse_tree(_read(path), root=root)


def _gen_params(kind: str, raw: list[str]) -> dict:
    params = {}
    for item in raw:
        if "=" in item:
            k, v = item.split("=", 1)
        elif kind in _POSITIONAL and _POSITIONAL[kind] not in params:
            k, v = _POSITIONAL[kind], item
        else:
            raise InputError(f"parameter {item!r} must be written as name=value")
        try:
            params[k] = int(v)
        except ValueError:
            raise InputError(f"parameter {k} must be an integer, got {v!r}") from None
    return params


def _config(args) -> EmbedConfig:
    return EmbedConfig(mode=args.mode, seed=args.seed, t_override=args.t, check=args.check, trim=args.trim,
                       root=args.root, retry_cap=args.retry_cap, max_escalations=args.max_escalations,
                       redraw=args.redraw)


def _manifest(path: str, argv: list[str], config: dict, inputs: dict[str, str], outputs: dict[str, str],
              timings: dict) -> None:
    outs = {}
    for role, p in outputs.items():
        outs[role] = {"path": p, "sha256": _sha256(Path(p).read_bytes())}
    data = {
        "command": argv,
        "config": config,
        "inputs": {p: _sha256(Path(p).read_bytes()) for p in inputs.values()},
        "seed": config.get("seed"),
        "version": __version__,
        "timings": timings,
        "outputs": outs,
    }
    Path(path).write_text(_dumps(data))


# ----------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    tree = generate(args.kind, seed=args.seed, **_gen_params(args.kind, args.params))
    _write(args.out, format_edge_list(tree))
    return EXIT_OK


def cmd_bound(args) -> int:
    tree = _load_tree(args.tree, args.root)
    rho = compute_rho(tree, mode=args.rho, seed=args.seed)
    report = cubicity_lower_bound(tree, rho)
    text = _dumps(report.to_dict()) if args.format == "json" else report.to_text()
    _write(args.out, text)
    return EXIT_OK


def cmd_embed(args, argv: list[str]) -> int:
    cfg = _config(args)
    tree = _load_tree(args.tree, "preserve")
    start = time.perf_counter()
    try:
        rep, report = embed_tree(tree, cfg)
    except EscalationExhausted as exc:
        if exc.report is not None:
            payload = _dumps(exc.report.to_dict())
            if args.out:
                Path(args.out + ".report.json").write_text(payload)
            else:
                sys.stderr.write(payload)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESCALATION
    # the pipeline verifies internally; re-check the file contents before writing
    if verify(tree, rep) is not None:
        print("error: representation failed verification", file=sys.stderr)
        return EXIT_VERIFY
    total = time.perf_counter() - start
    rep = CubeRepresentation(rep.centers, rep.blocks,
                             dict(rep.meta, check=cfg.check, rho_sampled=report.rho_sampled))
    rep_text = rep.to_json()
    report_text = _dumps(report.to_dict())
    if args.format == "json":
        summary = report_text
    elif args.format == "csv":
        summary = rep.to_csv()
    else:
        summary = report.to_text()
    if args.out:
        Path(args.out).write_text(rep_text)
        report_path = args.out + ".report.json"
        Path(report_path).write_text(report_text)
        outputs = {"representation": args.out, "report": report_path}
        if args.csv:
            Path(args.csv).write_text(rep.to_csv())
            outputs["csv"] = args.csv
        timings = dict(report.timings, total=total)
        _manifest(args.out + ".manifest.json", argv, cfg.to_dict(), {"tree": args.tree}, outputs, timings)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(rep_text)
        sys.stderr.write(summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    tree = _load_tree(args.tree, "preserve")
    rep = CubeRepresentation.from_json(_read(args.rep))
    bad = verify(tree, rep)
    if bad is None:
        print(f"ok: n={rep.n} dim={rep.dim}")
        return EXIT_OK
    print(f"violation: {bad}")
    return EXIT_VERIFY


def cmd_oracle(args) -> int:
    g = parse_graph(_read(args.graph))
    value = exact_cubicity(g, allow_8=args.allow_8, timeout=args.timeout)
    if args.format == "json":
        _write(args.out, _dumps({"n": g.n, "edges": len(g.edges()), "cubicity": value}))
    else:
        _write(args.out, f"{value}\n")
    return EXIT_OK


BENCH_COLUMNS = ["name", "n", "h", "rho", "lb", "t", "dim", "retries", "ratio", "ms"]


def bench_rows(corpus: Path, cfg: EmbedConfig) -> list[dict]:
    files = sorted(p for p in corpus.iterdir() if p.suffix in CORPUS_SUFFIXES)
    if not files:
        raise InputError(f"no tree files ({', '.join(CORPUS_SUFFIXES)}) in {corpus}")
    rows = []
    for path in files:
        tree = parse_tree(path.read_text(), root="preserve")
        start = time.perf_counter()
        rep, report = embed_tree(tree, cfg)
        ms = (time.perf_counter() - start) * 1000
        rows.append({
            "name": path.name, "n": report.n, "h": report.h,
            "rho": f"{report.rho['value']:.6f}" if report.rho else "",
            "lb": report.lb_final, "t": "" if report.t is None else report.t, "dim": rep.dim,
            "retries": report.retries, "ratio": report.ratio_exact, "ms": f"{ms:.1f}",
        })
    return rows


def cmd_bench(args, argv: list[str]) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise InputError(f"{corpus} is not a directory")
    cfg = _config(args)
    start = time.perf_counter()
    try:
        rows = bench_rows(corpus, cfg)
    except EscalationExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESCALATION
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _write(args.out, buf.getvalue())
    if args.out:
        _manifest(args.out + ".manifest.json", argv, cfg.to_dict(), {}, {"csv": args.out},
                  {"total": time.perf_counter() - start})
    return EXIT_OK


def cmd_ladder(args) -> int:
    tree = _load_tree(args.tree, args.root)
    ladder = build_ladder(tree.height, parse_mode(args.mode))
    out = [f"# h={ladder.h} k={ladder.k} heights={list(ladder.heights)} e={ladder.e} o={ladder.o} "
           f"rounds={ladder.rounds}"]
    for level in range(ladder.top + 1):
        for mode in "AB":
            out.append(families(tree, ladder, level, mode).dump().rstrip("\n"))
    _write(args.out, "\n".join(x for x in out if x) + "\n")
    return EXIT_OK


def cmd_replay(args) -> int:
    manifest = json.loads(_read(args.manifest))
    argv = list(manifest["command"])
    if "--out" not in argv:
        raise InputError("manifest command has no --out to redirect")
    with tempfile.TemporaryDirectory() as tmp:
        k = argv.index("--out")
        original = argv[k + 1]
        argv[k + 1] = os.path.join(tmp, Path(original).name)
        if "--csv" in argv:
            c = argv.index("--csv")
            argv[c + 1] = os.path.join(tmp, Path(argv[c + 1]).name)
        code = main(argv)
        if code != EXIT_OK:
            return code
        fresh = json.loads(Path(argv[k + 1] + ".manifest.json").read_text())
    mismatched = [role for role, entry in manifest["outputs"].items()
                  if fresh["outputs"].get(role, {}).get("sha256") != entry["sha256"]]
    if mismatched:
        print(f"replay mismatch: {', '.join(sorted(mismatched))}")
        return EXIT_VERIFY
    print(f"reproduced {len(manifest['outputs'])} outputs")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser


def _add_embed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", default="faithful", help="faithful or scaled:<H> (H a power of two >= 16)")
    p.add_argument("--t", type=int, default=None, help="override the per-block dimension budget")
    p.add_argument("--check", default="exact", help="far-pair check: exact or sampled:<count>")
    p.add_argument("--trim", action="store_true", help="greedily drop redundant coordinates")
    p.add_argument("--root", default="center", help="center, preserve, or a vertex id")
    p.add_argument("--retry-cap", type=int, default=32)
    p.add_argument("--max-escalations", type=int, default=4)
    p.add_argument("--redraw", choices=("violated", "piece"), default="violated")


def _root_arg(value: str):
    if value in ("center", "preserve"):
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("root must be center, preserve or a vertex id") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubetree", description="Cube representations of trees.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log escalations and retries")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a tree in edge-list format")
    p.add_argument("kind", choices=GENERATOR_KINDS)
    p.add_argument("params", nargs="*", help="size parameters, e.g. 10 or spine=100 legs=1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("bound", help="lower bounds and the dimension budget")
    p.add_argument("tree")
    p.add_argument("--rho", choices=("auto", "exact", "sampled"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--root", type=_root_arg, default="center")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")

    p = sub.add_parser("embed", help="build and verify a cube representation")
    p.add_argument("tree")
    p.add_argument("--seed", type=int, default=0)
    _add_embed_flags(p)
    p.add_argument("--out", help="representation JSON; report and manifest are written next to it")
    p.add_argument("--csv", help="also export centers as CSV")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("verify", help="check a representation against a tree")
    p.add_argument("tree")
    p.add_argument("rep")

    p = sub.add_parser("oracle", help="exact cubicity of a graph with at most 7 (or 8) vertices")
    p.add_argument("graph")
    p.add_argument("--allow-8", action="store_true")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")

    p = sub.add_parser("bench", help="embed every tree file in a directory and emit CSV")
    p.add_argument("corpus")
    p.add_argument("--seed", type=int, default=0)
    _add_embed_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("ladder", help="dump the height ladder and its families")
    p.add_argument("tree")
    p.add_argument("--mode", default="faithful")
    p.add_argument("--root", type=_root_arg, default="center")
    p.add_argument("--out")

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("manifest")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "root", None) is not None and args.command in ("embed", "bench"):
        args.root = _root_arg(args.root)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "bound":
            return cmd_bound(args)
        if args.command == "embed":
            return cmd_embed(args, argv)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "bench":
            return cmd_bench(args, argv)
        if args.command == "ladder":
            return cmd_ladder(args)
        if args.command == "replay":
            return cmd_replay(args)
    except (InputError, TreeFormatError, OracleError, RepresentationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EmbedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    parser.error(f"unknown command {args.command}")
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
