"""Parse trees folded from execution traces.

Calls become Function nodes, taken branches of input-reading conditionals
become Condition nodes, input-reading loops become one Loop node, and each
consumed character becomes an InputChar leaf.  Semantic statements stay in
the node body between the syntactic children, in execution order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MalformedTraceError
from . import subject as sj

INPUT_CHAR = "InputChar"
FUNCTION = "Function"
LOOP = "Loop"
CONDITION = "Condition"


@dataclass(eq=False)
class SemEntry:
    seq: int
    site: str
    stmt: object
    source: str
    call_args: dict = field(default_factory=dict)


@dataclass(eq=False)
class IterMark:
    seq: int


@dataclass
class SemanticSlot:
    statements: list
    # loop nodes only: iteration number (1-based) of each statement
    iterations: list | None = None


@dataclass(eq=False)
class ParseNode:
    kind: str
    label: str
    site: str = ""
    seq: int = -1   # sequence number of the enter event
    start: int = 0
    end: int = 0
    body: list = field(default_factory=list)
    parent: ParseNode | None = field(default=None, repr=False)

    @property
    def yield_range(self):
        return (self.start, self.end)

    @property
    def children(self):
        return [e for e in self.body if isinstance(e, ParseNode)]

    @property
    def slots(self):
        slots = [SemanticSlot([], [] if self.kind == LOOP else None)]
        iteration = 0
        for e in self.body:
            if isinstance(e, ParseNode):
                slots.append(SemanticSlot([], [] if self.kind == LOOP else None))
            elif isinstance(e, IterMark):
                iteration += 1
            else:
                slots[-1].statements.append(e)
                if self.kind == LOOP:
                    slots[-1].iterations.append(iteration)
        return slots

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self):
        return [n for n in self.walk() if n.kind == INPUT_CHAR]

    def sem_count(self):
        return sum(isinstance(e, SemEntry) for n in self.walk() for e in n.body)

    def path(self):
        steps, node = [], self
        while node.parent is not None:
            steps.append(node.parent.children.index(node))
            node = node.parent
        return ".".join(map(str, reversed(steps)))


def _finish(node, enter_pos):
    kids = [c for c in node.children if c.start <= c.end]
    if kids:
        node.start, node.end = kids[0].start, kids[-1].end
    else:
        node.start, node.end = enter_pos + 1, enter_pos


def build_parse_tree(trace):
    """Fold a well-nested accepting trace into its parse tree."""
    stack = []   # (node, enter event)
    root = None
    for ev in trace:
        kind = ev.kind
        if kind in (sj.CALL_ENTER, sj.BRANCH_ENTER, sj.LOOP_ENTER):
            if root is not None and not stack:
                raise MalformedTraceError(f"event {ev.seq} after the root call returned")
            if kind == sj.CALL_ENTER:
                node = ParseNode(FUNCTION, ev.name)
            elif kind == sj.BRANCH_ENTER:
                node = ParseNode(CONDITION, "if", site=ev.name)
            else:
                node = ParseNode(LOOP, "while", site=ev.name)
            node.seq = ev.seq
            if stack:
                node.parent = stack[-1][0]
                stack[-1][0].body.append(node)
            elif kind != sj.CALL_ENTER:
                raise MalformedTraceError("trace must start with a call")
            else:
                root = node
            stack.append((node, ev))
        elif kind in (sj.CALL_EXIT, sj.BRANCH_EXIT, sj.LOOP_EXIT):
            if not stack:
                raise MalformedTraceError(f"unbalanced {kind} at event {ev.seq}")
            node, enter = stack.pop()
            if sj.ENTER_EXIT[enter.kind] != kind or enter.name != ev.name:
                raise MalformedTraceError(
                    f"{kind}({ev.name}) at event {ev.seq} closes {enter.kind}({enter.name})")
            _finish(node, enter.pos)
            if node.kind == CONDITION and node.start > node.end:
                _splice(node)
        elif not stack:
            raise MalformedTraceError(f"{kind} outside any call at event {ev.seq}")
        elif kind == sj.LOOP_ITER:
            top = stack[-1][0]
            if top.kind != LOOP or top.site != ev.name:
                raise MalformedTraceError(f"LoopIter({ev.name}) outside its loop")
            top.body.append(IterMark(ev.seq))
        elif kind == sj.CONSUME:
            top = stack[-1][0]
            for k, ch in enumerate(ev.text):
                leaf = ParseNode(INPUT_CHAR, ch, start=ev.start + k, end=ev.start + k)
                leaf.parent = top
                top.body.append(leaf)
        elif kind == sj.SEM_STMT:
            stack[-1][0].body.append(SemEntry(ev.seq, ev.name, ev.stmt, ev.source,
                                             ev.call_args or {}))
        else:
            raise MalformedTraceError(f"unknown event kind {kind!r}")
    if stack or root is None:
        raise MalformedTraceError("trace ended with open calls")
    return root


def _splice(node):
    """Replace a non-consuming condition by its body in the parent."""
    parent = node.parent
    k = parent.body.index(node)
    for e in node.body:
        if isinstance(e, ParseNode):
            e.parent = parent
    parent.body[k:k + 1] = node.body


def parse_label(node):
    if node.kind == INPUT_CHAR:
        return repr(node.label)
    return node.label


def render_parse_tree(node, indent=0):
    lines = [f"{'  ' * indent}{parse_label(node)}[{node.start}-{node.end}]"]
    for c in node.children:
        lines.append(render_parse_tree(c, indent + 1))
    return "\n".join(lines)
