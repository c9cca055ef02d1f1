import pytest

from agmine.agruntime import AGEvalError, canonical, eval_sem_block, run_ag
from agmine.derivation import derive
from agmine.errors import DeriveError, EvalError
from agmine.grammar import parse_grammar


@pytest.mark.parametrize("text, value", [("-78", -78), ("0", 0), ("0686", 686),
                                         ("-74521", -74521), ("9", 9)])
def test_reference_ag(reference_ag, text, value):
    assert run_ag(reference_ag, text) == value


def test_parse_failure(reference_ag):
    with pytest.raises(DeriveError):
        run_ag(reference_ag, "7-")


def test_eval_sem_block_examples():
    assert eval_sem_block("sem sign = 1 endsem").bindings == {"sign": 1}
    assert eval_sem_block("sem  endsem", {"x": 3}).bindings == {"x": 3}
    assert eval_sem_block("sem D = int('7') endsem").bindings == {"D": 7}


def test_eval_sem_block_unbound():
    with pytest.raises(EvalError):
        eval_sem_block("sem y = x + 1 endsem")


def test_no_out_attribute_gives_none():
    assert run_ag(parse_grammar("S = 'a' sem x = 1 endsem ."), "a") is None


def test_in_attributes():
    ag = parse_grammar("S^S = A(10)^X sem S = X endsem .\n"
                       "A(k)^A = 'a' sem A = k + 1 endsem .")
    assert run_ag(ag, "a") == 11


def test_repetition_shares_rule_environment():
    ag = parse_grammar("S^S = sem n = 0 endsem { 'a' sem n = n + 1 endsem } sem S = n endsem .")
    assert run_ag(ag, "aaaa") == 4
    assert run_ag(ag, "") == 0


def test_fresh_environment_per_application():
    ag = parse_grammar("S^S = A^X A^Y sem S = [X, Y] endsem .\n"
                       "A^A = 'a' sem A = 1 endsem | 'b' sem A = 2 endsem .")
    assert run_ag(ag, "ab") == [1, 2]


def test_error_carries_location():
    ag = parse_grammar("S^S = 'a' sem S = 1 // 0 endsem .")
    with pytest.raises(AGEvalError) as info:
        run_ag(ag, "a")
    assert info.value.rule == "S" and info.value.slot == "S/:1"


def test_unassigned_out_attribute():
    ag = parse_grammar("S^S = 'a' | 'b' sem S = 2 endsem .")
    assert run_ag(ag, "b") == 2
    with pytest.raises(EvalError):
        run_ag(ag, "a")


def test_tree_shape_matches_derive(reference_ag, number_grammar):
    a, b = derive(reference_ag, "-9836"), derive(number_grammar, "-9836")
    shape = lambda t: [(n.kind, n.position, n.yield_range) for n in t.walk()]
    assert shape(a) == shape(b)


@pytest.mark.parametrize("value, text", [
    (None, "null"), (True, "true"), (False, "false"), (3, "3"), (3.0, "3.0"),
    (0.1, "0.1"), ("a\"b", '"a\\"b"'), ([1, [2]], "[1,[2]]"), ((1, 2), "[1,2]"),
    ({"b": 1, "a": 2}, '{"a":2,"b":1}'), ({2: "x", 1: "y"}, '{1:"y",2:"x"}'),
])
def test_canonical(value, text):
    assert canonical(value) == text


def test_canonical_keeps_int_float_apart():
    assert canonical(1) != canonical(1.0)
    assert canonical(True) != canonical(1)
