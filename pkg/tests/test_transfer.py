import ast

import pytest

from agmine import corpus
from agmine.derivation import derive
from agmine.errors import MergeConflict, TransferError
from agmine.fuzzer import generate_inputs
from agmine.grammar import check_ag, parse_grammar, serialize_ag
from agmine.mapping import map_trees
from agmine.parsetree import build_parse_tree
from agmine.subject import SEM_STMT, execute, parse_program
from agmine.transfer import OUT, merge, transfer

from conftest import WITNESSES


def annotate(g, prog, text):
    out = execute(prog, text)
    assert out.ok, out.message
    pt = build_parse_tree(out.trace)
    dt = derive(g, text)
    return transfer(map_trees(pt, dt), pt, dt, g, prog, text)


def mined(g, prog, inputs, **kw):
    return merge([annotate(g, prog, t) for t in inputs], g, **kw)


def test_reference_ag_reproduced(number_grammar, number_program, reference_ag):
    result = mined(number_grammar, number_program, WITNESSES)
    assert result.warnings == []
    assert result.grammar == reference_ag


def test_mined_ag_text(number_grammar, number_program):
    text = serialize_ag(mined(number_grammar, number_program, WITNESSES).grammar)
    first = text.splitlines()[0]
    assert first == ("NumberParser^N = sem sign = 1 endsem [ '-' sem sign = -1 endsem ] "
                     "Digit^D sem value = D endsem { Digit^D2 sem value = 10 * value + D2 "
                     "endsem } sem N = sign * value endsem .")


def test_segments_of_minus_78(number_grammar, number_program):
    ann = annotate(number_grammar, number_program, "-78")
    root = number_grammar.rules["NumberParser"].body.pos
    (inst,) = ann.instances[root]
    spans = [(s.lo, s.hi, [ast.unparse(x) for x in s.stmts]) for s in inst]
    assert spans == [(0, 0, ["sign = 1"]), (1, 1, []),
                     (2, 2, ["value = @ref:NumberParser/1"]),
                     (3, 3, [f"{OUT} = sign * value"])]
    assert ann.rule_function == {"NumberParser": "number", "Digit": "digit"}


def test_unseen_sign_leaves_slot_range_open(number_grammar, number_program):
    ann = annotate(number_grammar, number_program, "78")
    root = number_grammar.rules["NumberParser"].body.pos
    first = ann.instances[root][0][0]
    assert (first.lo, first.hi) == (0, 1)


def test_partial_inputs_still_place_sign(number_grammar, number_program):
    # "-9" and "-7": option always taken, every slot observed directly
    g = mined(number_grammar, number_program, ["-9", "-7"]).grammar
    body = g.rules["NumberParser"].body
    assert [ast.unparse(s) for s in body.sems[0]] == ["sign = 1"]
    digits = g.rules["Digit"].body.items[0].alts
    assert [bool(a.sems) for a in digits] == [k in (7, 9) for k in range(10)]


def test_ambiguity_defaults_to_earliest_slot(number_grammar, number_program):
    result = mined(number_grammar, number_program, ["78"])
    assert result.warnings
    body = result.grammar.rules["NumberParser"].body
    assert [ast.unparse(s) for s in body.sems[0]] == ["sign = 1"]


def test_merge_is_idempotent(number_grammar, number_program):
    anns = [annotate(number_grammar, number_program, t) for t in WITNESSES]
    once = merge(anns, number_grammar).grammar
    twice = merge(anns + anns, number_grammar).grammar
    assert once == twice
    assert merge(list(reversed(anns)), number_grammar).grammar == once


def test_statement_conservation(number_grammar, number_program):
    for text in WITNESSES + ["5", "-0"]:
        trace = execute(number_program, text).trace
        ann = annotate(number_grammar, number_program, text)
        placed = sum(len(s.stmts) for _, s in ann.segments())
        assert placed == ann.statements
        assert ann.statements + ann.dropped == sum(e.kind == SEM_STMT for e in trace)


def test_no_simplify_keeps_temporaries(number_grammar, number_program):
    g = mined(number_grammar, number_program, WITNESSES, simplify=False).grammar
    alt = g.rules["Digit"].body.items[0].alts[3]
    assert [ast.unparse(s) for s in alt.sems[1]] == ["res = int('3')", "D = res"]


def test_conflicting_inputs_raise():
    g = parse_grammar("S = 'a' | 'b' .")
    prog = parse_program("i = 0\nn = 0\ndef f():\n  x = 0\n  if s[i] == 'a':\n    i += 1\n"
                         "    x = 1\n  elif s[i] == 'b':\n    i += 1\n  return x\n")
    a1 = annotate(g, prog, "a")
    # same slot, different statement: forge a second observation
    a2 = annotate(g, prog, "a")
    ctx = next(iter(k for k in a2.instances if k.path))
    a2.instances[ctx][0][-1].stmts = [ast.parse("x = 2").body[0]]
    with pytest.raises(MergeConflict) as info:
        merge([a1, a2], g)
    assert len(info.value.variants) == 2 and info.value.witnesses


def test_global_state_in_semantics_is_rejected():
    g = parse_grammar("S = 'a' .")
    prog = parse_program("i = 0\ncount = 0\ndef f():\n  count = count + 1\n"
                         "  if s[i] == 'a':\n    i += 1\n  return count\n")
    with pytest.raises(TransferError):
        annotate(g, prog, "a")


def test_in_attributes_from_parameters():
    g, prog = corpus.load("calc")
    result = mined(g, prog, ["1+2*3", "(4-5)*67", "8+9-0"])
    ag = result.grammar
    assert ag.rules["AddOp"].params == ["left"]
    expr = ag.rules["Expr"].body
    rep = expr.items[1]
    assert [ast.unparse(a) for a in rep.body.args] == ["left"]
    assert check_ag(ag) == []


@pytest.mark.parametrize("name", corpus.EXACT)
def test_mined_ags_roundtrip(name):
    g, prog = corpus.load(name)
    inputs, _ = generate_inputs(g, seed=2)
    accepted = [t for t in inputs if execute(prog, t).ok]
    ag = mined(g, prog, accepted).grammar
    assert parse_grammar(serialize_ag(ag)) == ag
