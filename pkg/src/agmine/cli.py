"""Command-line entry point: ``agmine fuzz|mine|derive|run-program|run-ag|eval``.

Exit codes: 0 success, 1 usage or parse error (or nothing usable), 2 partial
coverage, 3 mining failure (mapping failure or merge conflict), 4 accuracy
below 1 in ``eval``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .derivation import derive, render_tree
from .errors import AgMineError, DeriveError
from .fuzzer import GenerationBudget, generate_inputs, random_inputs
from .grammar import parse_grammar, serialize_ag
from .mapping import dump_mapping, map_trees
from .parsetree import build_parse_tree, render_parse_tree
from .pipeline import ag_output, evaluate, mine, program_output
from .subject import execute, parse_program

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_MINING, EXIT_ACCURACY = 0, 1, 2, 3, 4


class CliError(Exception):
    pass


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _grammar(path):
    return parse_grammar(_read(path))


def _program(path):
    return parse_program(_read(path))


def read_inputs(path):
    """Inputs from a directory (one per file) or a file (one JSON string per line)."""
    p = Path(path)
    if p.is_dir():
        return [f.read_text(encoding="utf-8") for f in sorted(p.iterdir()) if f.is_file()]
    out = []
    for line in _read(path).splitlines():
        if not line.strip():
            continue
        out.append(json.loads(line) if line.startswith('"') else line)
    return out


def write_inputs(inputs, path, layout):
    p = Path(path)
    if layout == "files":
        p.mkdir(parents=True, exist_ok=True)
        width = max(3, len(str(len(inputs))))
        for k, text in enumerate(inputs):
            (p / f"input_{k:0{width}d}.txt").write_text(text, encoding="utf-8")
    else:
        if p.parent != Path(""):
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text("".join(json.dumps(t, ensure_ascii=False) + "\n" for t in inputs),
                     encoding="utf-8")


def _emit(out, line=""):
    out.write(line + "\n")


def _budget(args):
    return GenerationBudget(args.max_inputs, args.max_depth, args.max_repetition)


def _inputs(args, g):
    if args.inputs:
        return read_inputs(args.inputs)
    if getattr(args, "auto_fuzz", False) or getattr(args, "count", None):
        inputs, _ = generate_inputs(g, _budget(args), args.seed)
        if getattr(args, "count", None):
            extra = random_inputs(g, args.count, args.seed, _budget(args))
            inputs = inputs + [t for t in extra if t not in inputs]
        return inputs
    raise CliError("no inputs: pass --inputs PATH or --auto-fuzz")


# ---------------------------------------------------------------------------
# subcommands

def cmd_fuzz(args, out):
    g = _grammar(args.grammar)
    inputs, state = generate_inputs(g, _budget(args), args.seed)
    if args.out:
        write_inputs(inputs, args.out, args.layout)
    uncovered = sorted(str(p) for p in state.uncovered)
    if args.format == "json-lines":
        for t in inputs:
            _emit(out, json.dumps({"input": t}, ensure_ascii=False))
        _emit(out, json.dumps({"inputs": len(inputs), "covered": len(state.covered),
                               "positions": len(state.universe), "uncovered": uncovered}))
    else:
        if not args.out:
            for t in inputs:
                _emit(out, json.dumps(t, ensure_ascii=False))
        _emit(out, f"inputs={len(inputs)}")
        _emit(out, f"covered={len(state.covered)}/{len(state.universe)}")
        for p in uncovered:
            _emit(out, f"uncovered={p}")
    return EXIT_OK if state.complete else EXIT_PARTIAL


def cmd_mine(args, out):
    g = _grammar(args.grammar)
    prog = _program(args.program)
    inputs = _inputs(args, g)
    report = mine(g, prog, inputs, simplify=not args.no_simplify)
    if args.format == "json-lines":
        for r in report.records:
            _emit(out, json.dumps({"input": r.text, "status": r.status, "message": r.message},
                                  ensure_ascii=False))
        summary = {"counts": dict(sorted(report.counts.items())),
                   "covered": len(report.coverage.covered),
                   "positions": len(report.coverage.universe),
                   "warnings": report.warnings, "failure": report.failure,
                   "ag": args.out if report.ag is not None else None}
        _emit(out, json.dumps(summary, ensure_ascii=False))
    else:
        for r in report.records:
            note = f"  # {r.message}" if r.message else ""
            _emit(out, f"{r.status:16} {json.dumps(r.text, ensure_ascii=False)}{note}")
        for k, v in sorted(report.counts.items()):
            _emit(out, f"{k}={v}")
        _emit(out, f"covered={len(report.coverage.covered)}/{len(report.coverage.universe)}")
        for w in report.warnings:
            _emit(out, f"warning={w}")
        if report.failure:
            _emit(out, f"failure={report.failure}")
    if report.ag is None:
        return EXIT_MINING if report.mining_failed or report.conflict else EXIT_USAGE
    text = serialize_ag(report.ag)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if args.format == "text":
            _emit(out, f"ag={args.out}")
    else:
        out.write(text)
    return EXIT_OK


def cmd_derive(args, out):
    g = _grammar(args.grammar)
    try:
        tree = derive(g, args.input)
    except DeriveError as exc:
        raise CliError(str(exc)) from None
    _emit(out, render_tree(tree))
    if args.program:
        o = execute(_program(args.program), args.input)
        if not o.ok:
            raise CliError(f"program rejected the input: {o.message}")
        pt = build_parse_tree(o.trace)
        _emit(out)
        _emit(out, render_parse_tree(pt))
        _emit(out)
        _emit(out, dump_mapping(map_trees(pt, tree)))
    return EXIT_OK


def cmd_run_program(args, out):
    ok, text = program_output(_program(args.program), args.input)
    _emit(out, text)
    return EXIT_OK if ok else EXIT_USAGE


def cmd_run_ag(args, out):
    ok, text = ag_output(_grammar(args.ag), args.input)
    _emit(out, text)
    return EXIT_OK if ok else EXIT_USAGE


def cmd_eval(args, out):
    g = _grammar(args.grammar)
    prog = _program(args.program)
    ag = _grammar(args.ag)
    inputs = _inputs(args, g)
    name = Path(args.program).stem
    report = evaluate(ag, prog, inputs, name)
    if args.format == "json-lines":
        for r in report.records:
            _emit(out, json.dumps({"input": r.text, "expected": r.expected,
                                   "actual": r.actual, "match": r.match}, ensure_ascii=False))
        _emit(out, json.dumps({"program": name, "total": report.total,
                               "matching": report.matching, "accuracy": report.accuracy}))
    else:
        _emit(out, f"program={name}")
        _emit(out, f"total={report.total}")
        _emit(out, f"matching={report.matching}")
        _emit(out, f"accuracy={report.accuracy:.4f}")
        _emit(out, "match\tinput\tprogram\tag")
        for r in report.records:
            _emit(out, f"{'yes' if r.match else 'NO'}\t{json.dumps(r.text, ensure_ascii=False)}"
                       f"\t{r.expected}\t{r.actual}")
    return EXIT_OK if report.accuracy == 1 else EXIT_ACCURACY


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="agmine", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def budget(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-inputs", type=int, default=200)
        sp.add_argument("--max-depth", type=int, default=32)
        sp.add_argument("--max-repetition", type=int, default=5)

    def fmt(sp):
        sp.add_argument("--format", choices=("text", "json-lines"), default="text")

    sp = sub.add_parser("fuzz", help="generate a covering input set")
    sp.add_argument("grammar")
    sp.add_argument("--out", help="output directory (or file with --layout lines)")
    sp.add_argument("--layout", choices=("files", "lines"), default="files")
    budget(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_fuzz)

    sp = sub.add_parser("mine", help="mine an attributed grammar")
    sp.add_argument("grammar")
    sp.add_argument("program")
    sp.add_argument("--inputs", help="directory of input files or file of JSON lines")
    sp.add_argument("--auto-fuzz", action="store_true", help="generate inputs with the fuzzer")
    sp.add_argument("--out", help="where to write the AG (default: stdout)")
    sp.add_argument("--no-simplify", action="store_true",
                    help="keep temporaries instead of inlining them")
    budget(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_mine)

    sp = sub.add_parser("derive", help="print the derivation tree of an input")
    sp.add_argument("grammar")
    sp.add_argument("input")
    sp.add_argument("--program", help="also print the parse tree and mapping")
    sp.set_defaults(func=cmd_derive)

    sp = sub.add_parser("run-program", help="run a subject program on an input")
    sp.add_argument("program")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_run_program)

    sp = sub.add_parser("run-ag", help="evaluate an attributed grammar on an input")
    sp.add_argument("ag")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_run_ag)

    sp = sub.add_parser("eval", help="compare program and AG outputs")
    sp.add_argument("grammar")
    sp.add_argument("program")
    sp.add_argument("ag")
    sp.add_argument("--inputs")
    sp.add_argument("--auto-fuzz", action="store_true")
    sp.add_argument("--count", type=int, help="add this many random inputs")
    budget(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args, out)
    except (CliError, AgMineError, json.JSONDecodeError) as exc:
        print(f"agmine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit():
    sys.exit(main())
