import ast
import re

import pytest

from agmine import corpus
from agmine.errors import AmbiguousCursorError, SubjectSyntaxError
from agmine.subject import (CALL_ENTER, CONSUME, SEM, SEM_STMT, SYN, classify_statements,
                            execute, find_cursor, line_labels, parse_program)


def test_listing_labels_match_comments(number_program):
    # the listing annotates every statement line with its expected label
    expected = {}
    for k, line in enumerate(number_program.source.splitlines(), 1):
        m = re.search(r"#\s*(Syn|Sem)\s*$", line)
        if m:
            expected[k] = m.group(1)
    got = line_labels(number_program)
    assert {k: got.get(k) for k in expected} == expected


def test_cursor_detection(number_program):
    assert find_cursor(number_program) == "i"


def test_ambiguous_cursor():
    src = "i = 0\nj = 0\ndef f():\n  x = s[i] + s[j]\n  i += 1\n  j += 1\n"
    with pytest.raises(AmbiguousCursorError):
        find_cursor(parse_program(src))


@pytest.mark.parametrize("text, value", [("-78", -78), ("5", 5), ("0686", 686),
                                         ("-74521", -74521)])
def test_execution(number_program, text, value):
    out = execute(number_program, text)
    assert out.ok and out.result == value


def test_exception_outcome(number_program):
    out = execute(number_program, "x")
    assert out.status == "exception"
    assert out.message == "Expected a number"


def test_unconsumed_input_is_rejected(number_program):
    out = execute(number_program, "12x")
    assert not out.ok and "not fully consumed" in out.message


def test_trace_order(number_program):
    trace = execute(number_program, "-7").trace
    kinds = [e.kind for e in trace]
    assert kinds[0] == CALL_ENTER and trace[0].name == "number"
    consumed = [e.text for e in trace if e.kind == CONSUME]
    assert consumed == ["-", "7"]
    sems = [e.source for e in trace if e.kind == SEM_STMT]
    # a statement is recorded once it has run, so callees come first
    assert sems == ["sign = 1", "sign = -1", "res = int(s[i])", "return res",
                    "value = digit()", "return sign * value"]
    assert [e.seq for e in trace] == list(range(len(trace)))


def test_sem_statements_are_normalized(number_program):
    trace = execute(number_program, "7").trace
    stmts = [ast.unparse(e.stmt) for e in trace if e.kind == SEM_STMT]
    assert "res = int('7')" in stmts
    assert any(s.startswith("value = @call") for s in stmts)


def test_guard_if_is_syntactic():
    prog = parse_program(corpus.program_text("calc_div"))
    labels = classify_statements(prog)
    guards = [site for site, st in prog.site_nodes.items()
              if isinstance(st, ast.If) and "right == 0" in ast.unparse(st.test)]
    assert guards and all(labels[g] == SYN for g in guards)


def test_pure_if_is_one_semantic_statement():
    src = ("i = 0\ndef f():\n  x = 1\n  if x > 0:\n    x = 2\n"
           "  if s[i] == 'a':\n    i += 1\n  return x\n")
    prog = parse_program(src)
    labels = line_labels(prog)
    assert labels[4] == SEM and labels[6] == SYN
    out = execute(prog, "a")
    assert out.result == 2


def test_fused_cursor_assignment_rejected():
    src = "i = 0\ndef f():\n  i, x = i + 1, 2\n"
    with pytest.raises(SubjectSyntaxError):
        line_labels(parse_program(src))


@pytest.mark.parametrize("src", [
    "def f(:\n  pass\n",
    "import os\n",
    "def f():\n  for x in s:\n    pass\n",
    "def f():\n  return lambda: 1\n",
])
def test_unsupported_programs(src):
    with pytest.raises(SubjectSyntaxError):
        line_labels(parse_program(src))


def test_runtime_errors_do_not_escape():
    prog = parse_program("i = 0\ndef f():\n  return 1 // 0\n")
    out = execute(prog, "")
    assert out.status == "exception"
    prog = parse_program("i = 0\ndef f():\n  return f()\n")
    assert execute(prog, "").status == "exception"


@pytest.mark.parametrize("name", corpus.ENTRIES)
def test_corpus_programs_parse(name):
    prog = parse_program(corpus.program_text(name))
    assert line_labels(prog)
