import pytest

from agmine import corpus
from agmine.grammar import parse_grammar
from agmine.subject import parse_program

WITNESSES = ["-74521", "-9836", "0686"]

# reference AG for the number parser, in our file format
REFERENCE_AG = """\
Grammar(NumberParser):
NumberParser^N =
             sem sign = 1 endsem
  [ '-'      sem sign = -1 endsem
  ]
  Digit^D     sem value = D endsem
  { Digit^D2  sem value = (10 * value) + D2 endsem
  }          sem N = (sign * value) endsem .
Digit^D =
   '0'       sem D = int('0') endsem
 | '1'       sem D = int('1') endsem
 | '2'       sem D = int('2') endsem
 | '3'       sem D = int('3') endsem
 | '4'       sem D = int('4') endsem
 | '5'       sem D = int('5') endsem
 | '6'       sem D = int('6') endsem
 | '7'       sem D = int('7') endsem
 | '8'       sem D = int('8') endsem
 | '9'       sem D = int('9') endsem .
"""


@pytest.fixture(scope="session")
def number_grammar():
    return parse_grammar(corpus.grammar_text("number"))


@pytest.fixture(scope="session")
def number_program():
    return parse_program(corpus.program_text("number"))


@pytest.fixture(scope="session")
def reference_ag():
    return parse_grammar(REFERENCE_AG)


# acceptance results are printed once at the end of the run, one line each
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
