"""Bundled grammar/program pairs used by tests, examples and evaluation."""
from __future__ import annotations

from importlib import resources

ENTRIES = ("number", "cgi_decode", "abc", "xml", "calc", "calc_div", "list_recursive")

# entries the mining method handles without loss
EXACT = ("number", "cgi_decode", "abc", "xml", "calc")


def _read(name):
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def grammar_text(name):
    return _read(f"{name}.ebnf")


def program_text(name):
    return _read(f"{name}.prog")


def path(name, kind):
    """Filesystem path of an entry's grammar (``ebnf``) or program (``prog``)."""
    return resources.files(__name__).joinpath(f"{name}.{kind}")


def load(name):
    """(Grammar, Program) for a corpus entry."""
    from ..grammar import parse_grammar
    from ..subject import parse_program
    if name not in ENTRIES:
        raise KeyError(f"unknown corpus entry {name!r}")
    return parse_grammar(grammar_text(name)), parse_program(program_text(name))
