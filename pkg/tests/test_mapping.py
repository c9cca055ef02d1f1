from pathlib import Path

import pytest

from agmine import corpus
from agmine.derivation import derive
from agmine.errors import MappingError
from agmine.fuzzer import random_inputs
from agmine.grammar import parse_grammar
from agmine.mapping import (COMPATIBLE, check_mapping, dump_mapping, effective_body,
                            map_functions, map_terminals, map_trees)
from agmine.parsetree import CONDITION, FUNCTION, INPUT_CHAR, LOOP, build_parse_tree
from agmine.subject import execute, parse_program

GOLDEN = Path(__file__).parent / "golden"


def trees(g, prog, text):
    return build_parse_tree(execute(prog, text).trace), derive(g, text)


def test_minus78_mapping_dump(number_grammar, number_program):
    pt, dt = trees(number_grammar, number_program, "-78")
    m = map_trees(pt, dt)
    assert dump_mapping(m) + "\n" == (GOLDEN / "minus78_mapping.txt").read_text()
    assert len(m.pairs) == 10


def test_minus78_pair_types(number_grammar, number_program):
    pt, dt = trees(number_grammar, number_program, "-78")
    m = map_trees(pt, dt)
    by_kind = {}
    for p, d in m.pairs:
        by_kind.setdefault(p.kind, []).append((d.label, d.yield_range))
    assert sorted(by_kind[INPUT_CHAR]) == [("-", (1, 1)), ("7", (2, 2)), ("8", (3, 3))]
    assert sorted(by_kind[FUNCTION]) == [("Digit", (2, 2)), ("Digit", (3, 3)),
                                         ("NumberParser", (1, 3))]
    assert by_kind[LOOP] == [("Rep", (3, 3))]
    assert sorted(by_kind[CONDITION]) == [("Choice", (2, 2)), ("Choice", (3, 3)),
                                          ("Option", (1, 1))]


def test_relocation_of_if_2_3(number_grammar, number_program):
    pt, dt = trees(number_grammar, number_program, "-78")
    m = map_trees(pt, dt)
    (r,) = m.relocations
    assert r.node.yield_range == (2, 3)
    assert r.pre_target.label == "digit" and r.post_target.label == "while"
    body = effective_body(pt, m)
    assert [getattr(e, "label", None) for e in body if hasattr(e, "kind")] == \
        ["if", "digit", "while"]


def test_zero_yield_pairs(number_grammar, number_program):
    pt, dt = trees(number_grammar, number_program, "5")
    m = map_trees(pt, dt)
    assert len(m.pairs) == 5
    loop = next(p for p in pt.walk() if p.kind == LOOP)
    assert m.p2d[loop].label == "Rep" and m.p2d[loop].yield_range == (2, 1)


def test_terminal_alignment_mismatch_aborts():
    g = parse_grammar("S = 'a' 'b' .")
    prog = parse_program("i = 0\ndef f():\n  if s[i] == 'a':\n    i += 1\n"
                         "  if s[i] == 'b':\n    i += 1\n")
    pt, _ = trees(g, prog, "ab")
    other = derive(parse_grammar("S = 'a' 'b' 'c' ."), "abc")
    with pytest.raises(MappingError):
        map_terminals(pt, other)


def test_cascade_of_nested_functions():
    # three functions with identical yields map level by level onto three rules
    g = parse_grammar("A = B .\nB = C .\nC = 'x' 'y' .")
    prog = parse_program(
        "i = 0\n"
        "def a():\n  return b()\n"
        "def b():\n  return c()\n"
        "def c():\n  if s[i] == 'x':\n    i += 1\n  if s[i] == 'y':\n    i += 1\n  return 1\n")
    pt, dt = trees(g, prog, "xy")
    m = map_trees(pt, dt)
    fns = sorted((p.label, d.label) for p, d in m.pairs if p.kind == FUNCTION)
    assert fns == [("a", "A"), ("b", "B"), ("c", "C")]


def test_crossing_yields_fail():
    g = parse_grammar("S = P 'c' .\nP = 'a' 'b' .")
    prog = parse_program(
        "i = 0\n"
        "def s_():\n  if s[i] == 'a':\n    i += 1\n  q()\n"
        "def q():\n  if s[i] == 'b':\n    i += 1\n  if s[i] == 'c':\n    i += 1\n")
    pt, dt = trees(g, prog, "abc")
    m = map_terminals(pt, dt)
    with pytest.raises(MappingError):
        map_functions(pt, dt, m)


def test_recursive_grammar_iterative_program_fails():
    g = parse_grammar(corpus.grammar_text("list_recursive"))
    prog = parse_program(corpus.program_text("list_recursive"))
    pt, dt = trees(g, prog, "x,y")
    with pytest.raises(MappingError, match="no corresponding function"):
        map_trees(pt, dt)


def test_mapping_invariants_hold_on_corpus():
    for name in ("number", "cgi_decode", "xml", "calc"):
        g, prog = corpus.load(name)
        for text in random_inputs(g, 15, seed=4):
            out = execute(prog, text)
            if not out.ok:
                continue
            m = map_trees(build_parse_tree(out.trace), derive(g, text))
            check_mapping(m)
            for p, d in m.pairs:
                assert d.kind in COMPATIBLE[p.kind]
