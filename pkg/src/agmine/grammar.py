"""EBNF grammars, attributed grammars and their text format.

Syntax (Wirth style)::

    Grammar(Start):                      # optional header
    Rule(p1, p2)^Out = expr .
    expr  = seq { '|' seq }
    seq   = elem { elem }
    elem  = 'text' | Name(args)^Alias | [ expr ] | { expr } | ( expr )
          | sem <statements> endsem

A rule body is always a :class:`Seq`.  Semantic blocks are not nodes: they are
stored on *context* nodes (the rule body, each choice alternative, each option
or repetition body) as ``sems[slot] -> [ast.stmt]``.  A ``Seq`` context with
``n`` items has slots ``0..n``; any other context node is a one-item sequence
with slots ``0`` and ``1``.  Keeping semantics off the child-index paths makes
:class:`PositionId` identical for a grammar and every enrichment of it.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import GrammarError, GrammarSyntaxError, SubjectSyntaxError
from .exprlang import (BUILTINS, check_expr, names_read, names_written,
                       parse_statements, render_statements, stmt_key)


class PositionId(NamedTuple):
    rule: str
    path: tuple

    def __str__(self):
        return f"{self.rule}/{'.'.join(map(str, self.path))}"

    def child(self, i):
        return PositionId(self.rule, self.path + (i,))

    @classmethod
    def parse(cls, text):
        rule, _, path = text.partition("/")
        return cls(rule, tuple(int(p) for p in path.split(".")) if path else ())


@dataclass(eq=False)
class Node:
    pos: PositionId = field(default=None, init=False)
    sems: dict = field(default_factory=dict, init=False)

    def children(self):
        return []


@dataclass(eq=False)
class Terminal(Node):
    text: str = ""


@dataclass(eq=False)
class Ref(Node):
    name: str = ""
    args: list = field(default_factory=list)
    alias: str | None = None


@dataclass(eq=False)
class Seq(Node):
    items: list = field(default_factory=list)

    def children(self):
        return self.items


@dataclass(eq=False)
class Choice(Node):
    alts: list = field(default_factory=list)

    def children(self):
        return self.alts


@dataclass(eq=False)
class Option(Node):
    body: Node = None

    def children(self):
        return [self.body]


@dataclass(eq=False)
class Rep(Node):
    body: Node = None

    def children(self):
        return [self.body]


@dataclass(eq=False)
class Rule:
    name: str
    body: Seq
    params: list = field(default_factory=list)
    out: str | None = None


@dataclass(eq=False)
class Grammar:
    rules: dict
    start: str

    def __post_init__(self):
        self._index = {}
        for rule in self.rules.values():
            _assign_positions(rule.body, PositionId(rule.name, ()), self._index)

    def node_at(self, pos):
        return self._index[pos]

    @property
    def is_attributed(self):
        for rule in self.rules.values():
            if rule.params or rule.out:
                return True
        return any(n.sems or (isinstance(n, Ref) and (n.args or n.alias))
                   for n in self._index.values())

    def structure(self):
        """Hashable, formatting-independent description used for equality."""
        return (self.start, tuple(
            (r.name, tuple(r.params), r.out, _structure(r.body))
            for r in self.rules.values()))

    def __eq__(self, other):
        return isinstance(other, Grammar) and self.structure() == other.structure()

    __hash__ = None

    def __str__(self):
        return serialize_ag(self)


def _assign_positions(node, pos, index):
    node.pos = pos
    index[pos] = node
    for i, child in enumerate(node.children()):
        _assign_positions(child, pos.child(i), index)


def _structure(node):
    sems = tuple(sorted((k, tuple(stmt_key(s) for s in v))
                        for k, v in node.sems.items() if v))
    if isinstance(node, Terminal):
        return ("T", node.text, sems)
    if isinstance(node, Ref):
        return ("R", node.name, tuple(ast.dump(a) for a in node.args),
                node.alias, sems)
    return (type(node).__name__, tuple(_structure(c) for c in node.children()), sems)


def is_context(grammar, pos):
    """True if the node at ``pos`` hosts semantic slots."""
    if not pos.path:
        return True
    parent = grammar.node_at(PositionId(pos.rule, pos.path[:-1]))
    return not isinstance(parent, Seq)


def context_size(node):
    return len(node.items) if isinstance(node, Seq) else 1


def enumerate_positions(grammar):
    """Pre-order list of every grammar position, rule by rule."""
    out = []

    def walk(node):
        out.append(node.pos)
        for c in node.children():
            walk(c)

    for rule in grammar.rules.values():
        walk(rule.body)
    return out


def iter_nodes(grammar):
    for pos in enumerate_positions(grammar):
        yield grammar.node_at(pos)


# ---------------------------------------------------------------------------
# reading

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<term>'(?:[^'\\\n]|\\.)*')
  | (?P<sym>[=|.\[\]{}()^:])
""", re.VERBOSE)

_ESCAPES = {"\\": "\\", "'": "'", "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPES = {v: "\\" + k for k, v in _ESCAPES.items()}


class _Tok(NamedTuple):
    kind: str
    value: str
    line: int
    col: int


def _unescape(body, line, col):
    out = []
    it = iter(body)
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            if nxt not in _ESCAPES:
                raise GrammarSyntaxError(f"unknown escape \\{nxt}", line, col)
            out.append(_ESCAPES[nxt])
        else:
            out.append(ch)
    return "".join(out)


def quote_terminal(text):
    return "'" + "".join(_UNESCAPES.get(c, c) for c in text) + "'"


def _scan_balanced(text, i, line_of):
    """Return index just past the ')' matching the '(' at ``text[i]``."""
    depth = 0
    j = i
    while j < len(text):
        c = text[j]
        if c in "'\"":
            j = _skip_string(text, j, line_of)
            continue
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return j + 1
        j += 1
    raise GrammarSyntaxError("unbalanced parenthesis", *line_of(i))


def _skip_string(text, j, line_of):
    quote = text[j]
    k = j + 1
    while k < len(text):
        if text[k] == "\\":
            k += 2
            continue
        if text[k] == quote:
            return k + 1
        k += 1
    raise GrammarSyntaxError("unterminated string", *line_of(j))


_SEM_END = re.compile(r"\bendsem\b")


def _tokenize(text):
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def line_of(offset):
        import bisect

        ln = bisect.bisect_right(line_starts, offset)
        return ln, offset - line_starts[ln - 1] + 1

    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise GrammarSyntaxError(f"unexpected character {text[i]!r}", *line_of(i))
        kind = m.lastgroup
        value = m.group()
        ln, col = line_of(i)
        if kind in ("ws", "comment"):
            i = m.end()
            continue
        if kind == "name" and value == "sem":
            j = m.end()
            while True:
                e = _SEM_END.search(text, j)
                if e is None:
                    raise GrammarSyntaxError("unterminated sem block", ln, col)
                q = re.search(r"['\"]", text[j:e.start()])
                if q is None:
                    break
                j = _skip_string(text, j + q.start(), line_of)
            toks.append(_Tok("sem", text[m.end():e.start()], ln, col))
            i = e.end()
            continue
        if kind == "name" and i + len(value) < len(text) and text[i + len(value)] == "(":
            toks.append(_Tok("name", value, ln, col))
            j = _scan_balanced(text, i + len(value), line_of)
            toks.append(_Tok("args", text[i + len(value) + 1:j - 1], *line_of(i + len(value))))
            i = j
            continue
        if kind == "term":
            value = _unescape(value[1:-1], ln, col)
            if not value:
                raise GrammarSyntaxError("empty terminal", ln, col)
        toks.append(_Tok(kind if kind != "sym" else value, value, ln, col))
        i = m.end()
    toks.append(_Tok("eof", "", *line_of(len(text))))
    return toks


class _Sem:
    def __init__(self, stmts):
        self.stmts = stmts


class _Reader:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self, kind=None):
        t = self.tok
        if kind is not None and t.kind != kind:
            shown = t.value or t.kind
            raise GrammarSyntaxError(f"expected {kind!r}, found {shown!r}", t.line, t.col)
        self.i += 1
        return t

    def args(self, tok):
        try:
            call = ast.parse(f"f({tok.value})", mode="eval").body
        except SyntaxError as exc:
            raise GrammarSyntaxError(f"invalid argument list: {exc.msg}",
                                     tok.line, tok.col) from None
        for a in call.args:
            check_expr(a)
        return call.args

    def grammar(self):
        start = None
        if (self.tok.kind == "name" and self.tok.value == "Grammar"
                and self.toks[self.i + 1].kind == "args"):
            self.take()
            start = self.take("args").value.strip()
            self.take(":")
        rules = {}
        while self.tok.kind != "eof":
            head = self.tok
            rule = self.rule()
            if rule.name in rules:
                raise GrammarError(
                    f"duplicate rule {rule.name!r} (line {head.line})")
            rules[rule.name] = rule
        if not rules:
            raise GrammarSyntaxError("grammar has no rules", 1, 1)
        return rules, start or next(iter(rules))

    def rule(self):
        name = self.take("name").value
        params = []
        if self.tok.kind == "args":
            t = self.take()
            for a in self.args(t):
                if not isinstance(a, ast.Name):
                    raise GrammarSyntaxError("rule parameters must be names", t.line, t.col)
                params.append(a.id)
        out = None
        if self.tok.kind == "^":
            self.take()
            out = self.take("name").value
        self.take("=")
        body = self.expr()
        self.take(".")
        if isinstance(body, list):
            items, sems = _split(body, self.tok)
        else:
            items, sems = [body], {}
        seq = Seq(items=items)
        seq.sems = sems
        return Rule(name, seq, params, out)

    def expr(self):
        alts = [self.seq()]
        while self.tok.kind == "|":
            self.take()
            alts.append(self.seq())
        if len(alts) == 1:
            return alts[0]
        choice = Choice(alts=[_contextify(a, self.tok) for a in alts])
        return choice

    def seq(self):
        elems = []
        while self.tok.kind in ("term", "name", "[", "{", "(", "sem"):
            t = self.take()
            if t.kind == "term":
                elems.append(Terminal(text=t.value))
            elif t.kind == "sem":
                try:
                    elems.append(_Sem(parse_statements(t.value)))
                except SubjectSyntaxError as exc:
                    raise GrammarSyntaxError(f"bad sem block: {exc}", t.line, t.col) from None
            elif t.kind == "name":
                ref = Ref(name=t.value)
                if self.tok.kind == "args":
                    ref.args = self.args(self.take())
                if self.tok.kind == "^":
                    self.take()
                    ref.alias = self.take("name").value
                elems.append(ref)
            elif t.kind == "(":
                inner = self.expr()
                self.take(")")
                if isinstance(inner, list):
                    elems.extend(inner)
                else:
                    elems.append(inner)
            else:
                close = "]" if t.kind == "[" else "}"
                body = _contextify(self.expr(), self.tok)
                self.take(close)
                elems.append(Option(body=body) if t.kind == "[" else Rep(body=body))
        if not any(not isinstance(e, _Sem) for e in elems):
            t = self.tok
            raise GrammarSyntaxError(
                f"expected a grammar element, found {t.value or t.kind!r}", t.line, t.col)
        return elems


def _split(elems, tok):
    items, sems, cur = [], {}, []
    for e in elems:
        if isinstance(e, _Sem):
            cur.extend(e.stmts)
        else:
            if cur:
                sems[len(items)] = cur
            cur = []
            items.append(e)
    if cur:
        sems[len(items)] = cur
    return items, sems


def _contextify(elems, tok):
    if isinstance(elems, Choice):
        return elems
    items, sems = _split(elems, tok)
    if len(items) == 1:
        node = items[0]
        node.sems = sems
        return node
    seq = Seq(items=items)
    seq.sems = sems
    return seq


def parse_grammar(text):
    """Parse grammar or attributed-grammar text into a validated :class:`Grammar`."""
    rules, start = _Reader(text).grammar()
    g = Grammar(rules, start)
    validate(g)
    return g


def validate(g):
    if g.start not in g.rules:
        raise GrammarError(f"start rule {g.start!r} is not defined")
    for node in iter_nodes(g):
        if isinstance(node, Ref):
            if node.name not in g.rules:
                raise GrammarError(
                    f"undefined nonterminal {node.name!r} referenced in rule {node.pos.rule!r}")
            want = len(g.rules[node.name].params)
            if node.args and len(node.args) != want:
                raise GrammarError(
                    f"{node.name!r} takes {want} argument(s), {len(node.args)} given at {node.pos}")
        if node.sems and not is_context(g, node.pos):
            raise GrammarError(f"semantic block attached to non-context node {node.pos}")


# ---------------------------------------------------------------------------
# writing

def _sem_text(stmts):
    body = render_statements(stmts)
    if "\n" in body:
        inner = "\n".join("    " + ln for ln in body.splitlines())
        return f"sem\n{inner}\n  endsem"
    return f"sem {body} endsem"


def _ctx_text(node, bracketed):
    parts = []
    if isinstance(node, Seq):
        for i, item in enumerate(node.items):
            if node.sems.get(i):
                parts.append(_sem_text(node.sems[i]))
            parts.append(_item_text(item, in_seq=len(node.items) > 1 or bool(node.sems)))
        if node.sems.get(len(node.items)):
            parts.append(_sem_text(node.sems[len(node.items)]))
        return " ".join(parts)
    has_sems = any(node.sems.get(k) for k in (0, 1))
    if node.sems.get(0):
        parts.append(_sem_text(node.sems[0]))
    parts.append(_item_text(node, in_seq=has_sems or not bracketed))
    if node.sems.get(1):
        parts.append(_sem_text(node.sems[1]))
    return " ".join(parts)


def _item_text(node, in_seq):
    if isinstance(node, Terminal):
        return quote_terminal(node.text)
    if isinstance(node, Ref):
        text = node.name
        if node.args:
            text += "(" + ", ".join(ast.unparse(a) for a in node.args) + ")"
        if node.alias:
            text += "^" + node.alias
        return text
    if isinstance(node, Option):
        return "[ " + _ctx_text(node.body, True) + " ]"
    if isinstance(node, Rep):
        return "{ " + _ctx_text(node.body, True) + " }"
    if isinstance(node, Choice):
        inner = " | ".join(_alt_text(a) for a in node.alts)
        return f"( {inner} )" if in_seq else inner
    if isinstance(node, Seq):
        return "( " + _ctx_text(node, True) + " )"
    raise TypeError(node)


def _alt_text(node):
    # choice alternatives are contexts but never need their own parentheses
    # unless they are choices themselves
    if isinstance(node, Choice) and not any(node.sems.get(k) for k in (0, 1)):
        return "( " + _item_text(node, False) + " )"
    return _ctx_text(node, True)


def serialize_ag(g):
    """Render a grammar (plain or attributed) in the text format."""
    out = []
    first = next(iter(g.rules))
    if g.start != first:
        out.append(f"Grammar({g.start}):")
    for rule in g.rules.values():
        head = rule.name
        if rule.params:
            head += "(" + ", ".join(rule.params) + ")"
        if rule.out:
            head += "^" + rule.out
        body = rule.body
        top_choice = (len(body.items) == 1 and isinstance(body.items[0], Choice)
                      and not any(body.sems.values()))
        if top_choice:
            alts = body.items[0].alts
            if g.is_attributed:
                lines = [f"{head} ="] + [
                    ("    " if k == 0 else "  | ") + _alt_text(a) for k, a in enumerate(alts)]
                out.append("\n".join(lines) + " .")
            else:
                out.append(f"{head} = " + " | ".join(_alt_text(a) for a in alts) + " .")
        else:
            out.append(f"{head} = {_ctx_text(body, True)} .")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# attributed-grammar well-formedness

def check_ag(g):
    """Return a list of well-formedness problems (empty when the AG is sound).

    Every attribute read must be defined on every path reaching it (by a
    parameter, an earlier assignment or an earlier reference alias), and a
    declared out-attribute must be assigned on every path through the rule.
    """
    problems = []
    for rule in g.rules.values():
        defined = set(rule.params)
        may, must = _flow(rule.body, set(defined), set(defined), rule, problems)
        if rule.out and rule.out not in must:
            problems.append(
                f"rule {rule.name!r}: out-attribute {rule.out!r} not assigned on every path")
    return problems


def _flow_stmts(stmts, may, must, where, problems):
    for stmt in stmts:
        for name in sorted(names_read(stmt) - must - set(BUILTINS)):
            what = "on some paths" if name in may else "before any definition"
            problems.append(f"{where}: {name!r} may be read undefined ({what})")
        written = names_written(stmt)
        may |= written
        if isinstance(stmt, (ast.Assign, ast.AugAssign)):
            must |= written
    return may, must


def _flow(node, may, must, rule, problems):
    """Propagate may/must-defined sets through a context node."""
    items = node.items if isinstance(node, Seq) else [node]
    for idx in range(len(items) + 1):
        if node.sems.get(idx):
            _flow_stmts(node.sems[idx], may, must,
                        f"rule {rule.name!r} slot {node.pos}:{idx}", problems)
        if idx == len(items):
            break
        item = items[idx]
        if isinstance(item, Ref):
            for a in item.args:
                for name in sorted(names_read(a) - must - set(BUILTINS)):
                    problems.append(f"rule {rule.name!r} at {item.pos}: argument reads {name!r}")
            if item.alias:
                may.add(item.alias)
                must.add(item.alias)
        elif isinstance(item, (Option, Rep)):
            inner_may, _ = _flow(item.body, set(may), set(must), rule, problems)
            may |= inner_may
        elif isinstance(item, Choice):
            musts = []
            for alt in item.alts:
                m_may, m_must = _flow(alt, set(may), set(must), rule, problems)
                may |= m_may
                musts.append(m_must)
            must |= set.intersection(*musts)
        elif isinstance(item, Seq):
            may, must = _flow(item, may, must, rule, problems)
    return may, must
