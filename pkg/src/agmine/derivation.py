"""Derivation trees: parse an input with a grammar, recording terminal yields.

Ordered choice with full backtracking: alternatives are tried in grammar order,
options and repetitions are greedy, and a later failure in the enclosing
sequence re-enters earlier decisions.  The first complete parse wins.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ._limits import deep_recursion
from .errors import DeriveError
from .grammar import Choice, Option, PositionId, Ref, Rep, Seq, Terminal

TERMINAL = "Terminal"
NONTERMINAL = "Nonterminal"
REPETITION = "Repetition"
OPTION = "Option"
CHOICE = "Choice"

_LABELS = {REPETITION: "Rep", OPTION: "Option", CHOICE: "Choice"}


@dataclass(eq=False)
class DerivationNode:
    kind: str
    label: str
    position: PositionId
    start: int
    end: int
    children: list = field(default_factory=list)
    alt: int | None = None
    # repetition only: list of (first, last+1) child-index ranges per iteration
    iterations: list = field(default_factory=list)
    parent: DerivationNode | None = field(default=None, repr=False)

    @property
    def yield_range(self):
        return (self.start, self.end)

    @property
    def context(self):
        """Grammar position whose semantic slots this node's children fill."""
        if self.kind == NONTERMINAL:
            return PositionId(self.label, ())
        if self.kind == CHOICE:
            return self.position.child(self.alt)
        if self.kind in (OPTION, REPETITION):
            return self.position.child(0)
        return None

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self):
        return [n for n in self.walk() if n.kind == TERMINAL]

    def depth(self):
        d, n = 0, self.parent
        while n is not None:
            d, n = d + 1, n.parent
        return d


def yield_of(node):
    return node.yield_range


class _Parser:
    def __init__(self, grammar, text):
        self.g = grammar
        self.text = text
        self.furthest = 0
        self.expected = set()
        self.active = set()

    def fail(self, i, what):
        if i > self.furthest:
            self.furthest, self.expected = i, {what}
        elif i == self.furthest:
            self.expected.add(what)

    def item(self, node, i):
        """Yield (DerivationNode | None, next_index) for one sequence item."""
        if isinstance(node, Terminal):
            if self.text.startswith(node.text, i):
                j = i + len(node.text)
                yield DerivationNode(TERMINAL, node.text, node.pos, i + 1, j), j
            else:
                self.fail(i, node.text)
        elif isinstance(node, Ref):
            key = (node.name, i)
            if key in self.active:
                return
            # the guard is held only while the rule body is running, not while
            # this generator is suspended in the caller's sequence
            gen = self.ctx(self.g.rules[node.name].body, i)
            while True:
                self.active.add(key)
                try:
                    kids, j = next(gen)
                except StopIteration:
                    return
                finally:
                    self.active.discard(key)
                yield self._inner(NONTERMINAL, node.name, node.pos, i, j, kids), j
        elif isinstance(node, Option):
            for kids, j in self.ctx(node.body, i):
                yield self._inner(OPTION, "Option", node.pos, i, j, kids), j
            yield None, i
        elif isinstance(node, Choice):
            for k, alt in enumerate(node.alts):
                for kids, j in self.ctx(alt, i):
                    d = self._inner(CHOICE, "Choice", node.pos, i, j, kids)
                    d.alt = k
                    yield d, j
        elif isinstance(node, Rep):
            for iters, j in self.rep(node.body, i):
                kids, ranges = [], []
                for it in iters:
                    ranges.append((len(kids), len(kids) + len(it)))
                    kids.extend(it)
                d = self._inner(REPETITION, "Rep", node.pos, i, j, kids)
                d.iterations = ranges
                yield d, j
        elif isinstance(node, Seq):
            yield from ((None, j) for _, j in self.ctx(node, i))
        else:
            raise TypeError(node)

    def rep(self, body, i):
        for kids, j in self.ctx(body, i):
            if j == i:
                continue
            for rest, k in self.rep(body, j):
                yield [kids] + rest, k
        yield [], i

    def ctx(self, node, i):
        items = node.items if isinstance(node, Seq) else [node]
        yield from self.seq(items, 0, i)

    def seq(self, items, k, i):
        if k == len(items):
            yield [], i
            return
        for d, j in self.item(items[k], i):
            for rest, m in self.seq(items, k + 1, j):
                yield ([d] + rest if d is not None else rest), m

    @staticmethod
    def _inner(kind, label, pos, i, j, kids):
        return DerivationNode(kind, label, pos, i + 1, j, list(kids))


def _link(node, parent=None):
    node.parent = parent
    for c in node.children:
        _link(c, node)


def derive(grammar, text):
    """Derivation tree of ``text`` rooted at the start rule, or :class:`DeriveError`."""
    with deep_recursion():
        return _derive(grammar, text)


def _derive(grammar, text):
    p = _Parser(grammar, text)
    root_pos = PositionId(grammar.start, ())
    body = grammar.rules[grammar.start].body
    p.active.add((grammar.start, 0))
    for kids, j in p.ctx(body, 0):
        if j == len(text):
            root = _Parser._inner(NONTERMINAL, grammar.start, root_pos, 0, j, kids)
            _link(root)
            return root
        p.fail(j, "<end of input>")
    raise DeriveError(p.furthest + 1, p.expected)


def covered_positions(tree):
    """Grammar positions exercised by a derivation tree."""
    out = set()
    for n in tree.walk():
        out.add(n.position)
        ctx = n.context
        if ctx is not None and (n.kind != REPETITION or n.iterations):
            out.add(ctx)
    return out


def node_label(node):
    if node.kind == TERMINAL:
        return repr(node.label)
    return node.label


def render_tree(node, label=node_label, indent=0):
    """Indented ``label[start-end]`` dump, one node per line."""
    lines = [f"{'  ' * indent}{label(node)}[{node.start}-{node.end}]"]
    for c in node.children:
        lines.append(render_tree(c, label, indent + 1))
    return "\n".join(lines)
