from pathlib import Path

import pytest

from agmine.derivation import (CHOICE, NONTERMINAL, OPTION, REPETITION, TERMINAL,
                               covered_positions, derive, render_tree)
from agmine.errors import DeriveError
from agmine.grammar import enumerate_positions, parse_grammar

GOLDEN = Path(__file__).parent / "golden"


def test_minus78_derivation_tree(number_grammar):
    tree = derive(number_grammar, "-78")
    assert render_tree(tree) + "\n" == (GOLDEN / "minus78_derivation.txt").read_text()


def test_node_kinds(number_grammar):
    tree = derive(number_grammar, "-78")
    kinds = [n.kind for n in tree.walk()]
    assert kinds.count(TERMINAL) == 3
    assert kinds.count(NONTERMINAL) == 3
    assert kinds.count(OPTION) == 1
    assert kinds.count(REPETITION) == 1
    assert kinds.count(CHOICE) == 2
    assert tree.yield_range == (1, 3)


def test_empty_repetition_keeps_node(number_grammar):
    tree = derive(number_grammar, "5")
    rep = tree.children[-1]
    assert rep.kind == REPETITION and rep.yield_range == (2, 1)
    assert rep.iterations == []
    assert all(c.kind != OPTION for c in tree.children)


def test_repetition_iterations(number_grammar):
    tree = derive(number_grammar, "1234")
    rep = tree.children[-1]
    assert rep.iterations == [(0, 1), (1, 2), (2, 3)]


@pytest.mark.parametrize("text, pos", [("x", 1), ("-", 2), ("12a", 3), ("--1", 2)])
def test_parse_failure_position(number_grammar, text, pos):
    with pytest.raises(DeriveError) as info:
        derive(number_grammar, text)
    assert info.value.position == pos


def test_failure_lists_expected_terminals(number_grammar):
    with pytest.raises(DeriveError) as info:
        derive(number_grammar, "x")
    assert "-" in info.value.expected and "0" in info.value.expected


def test_backtracking_into_greedy_repetition():
    g = parse_grammar("S = { 'a' } 'a' 'b' .")
    tree = derive(g, "aaab")
    assert tree.children[0].yield_range == (1, 2)


def test_same_position_references_are_not_left_recursion():
    g = parse_grammar("S = O O 'b' .\nO = [ 'a' ] .")
    assert derive(g, "b").yield_range == (1, 1)
    assert derive(g, "aab").yield_range == (1, 3)


def test_left_recursion_terminates():
    g = parse_grammar("E = E '+' 'n' | 'n' .")
    with pytest.raises(DeriveError):
        derive(g, "n+n")
    assert derive(g, "n").yield_range == (1, 1)


def test_multichar_terminal():
    g = parse_grammar("S = '</' 'a' .")
    tree = derive(g, "</a")
    assert [c.yield_range for c in tree.children] == [(1, 2), (3, 3)]


def test_witnesses_cover_everything(number_grammar):
    covered = set()
    for w in ["-74521", "-9836", "0686"]:
        covered |= covered_positions(derive(number_grammar, w))
    assert covered == set(enumerate_positions(number_grammar))


def test_yields_partition_children(number_grammar):
    tree = derive(number_grammar, "-9836")
    for node in tree.walk():
        if node.children:
            spans = [c.yield_range for c in node.children if c.start <= c.end]
            assert spans[0][0] == node.start and spans[-1][1] == node.end
            for a, b in zip(spans, spans[1:]):
                assert a[1] + 1 == b[0]
