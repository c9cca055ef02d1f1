"""Partial bijection between parse-tree and derivation-tree nodes.

Four passes: terminals by in-order alignment, functions/nonterminals by
bottom-up ascent over terminal yields, control-flow/grammar structures inside
each mapped function scope, and finally relocation of semantics held by nodes
that stayed unmapped.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from . import derivation as dv
from . import parsetree as pt_
from .errors import MappingError

COMPATIBLE = {
    pt_.INPUT_CHAR: {dv.TERMINAL},
    pt_.FUNCTION: {dv.NONTERMINAL},
    pt_.LOOP: {dv.REPETITION},
    pt_.CONDITION: {dv.OPTION, dv.CHOICE},
}


@dataclass(eq=False)
class Relocation:
    node: pt_.ParseNode
    pre_target: pt_.ParseNode | None
    post_target: pt_.ParseNode | None
    pre_count: int
    post_count: int


@dataclass(eq=False)
class Mapping:
    pt: pt_.ParseNode
    dt: dv.DerivationNode
    p2d: dict = field(default_factory=dict)
    d2p: dict = field(default_factory=dict)
    # every InputChar -> its Terminal (multi-character terminals group chars)
    char_terminal: dict = field(default_factory=dict)
    relocations: list = field(default_factory=list)
    step: dict = field(default_factory=dict)

    def add(self, p, d, step):
        if p in self.p2d or d in self.d2p:
            raise MappingError(f"node paired twice: {p.label} / {d.label}")
        if d.kind not in COMPATIBLE[p.kind]:
            raise MappingError(f"incompatible pair {p.kind} / {d.kind}")
        self.p2d[p] = d
        self.d2p[d] = p
        self.step[p] = step

    @property
    def pairs(self):
        return list(self.p2d.items())

    @property
    def unmapped_derivation_nodes(self):
        return {n for n in self.dt.walk() if n not in self.d2p and n.kind != dv.TERMINAL}

    def anchor(self, p):
        """Derivation node standing for a parse node (chars via their terminal)."""
        if p.kind == pt_.INPUT_CHAR:
            return self.char_terminal[p]
        return self.p2d.get(p)


def check_mapping(m):
    """Assert partial bijection, Table-of-types compatibility and yield equality."""
    if len(m.p2d) != len(m.d2p):
        raise MappingError("mapping is not injective")
    for p, d in m.p2d.items():
        if m.d2p.get(d) is not p:
            raise MappingError("mapping is not injective")
        if d.kind not in COMPATIBLE[p.kind]:
            raise MappingError(f"incompatible pair {p.kind} / {d.kind}")
        if p.kind == pt_.INPUT_CHAR:
            if p.start != d.start:
                raise MappingError("terminal pair with different positions")
        elif p.yield_range != d.yield_range:
            raise MappingError(f"pair {p.label}{p.yield_range} / {d.label}{d.yield_range} "
                               "has different yields")


# ---------------------------------------------------------------------------
# step 1

def map_terminals(pt, dt):
    m = Mapping(pt, dt)
    chars = pt.leaves()
    terms = dt.leaves()
    flat = [(t, k) for t in terms for k in range(len(t.label))]
    if len(chars) != len(flat):
        raise MappingError(
            f"terminal sequences differ in length ({len(chars)} input chars, "
            f"{len(flat)} terminal chars)")
    for c, (t, k) in zip(chars, flat):
        if c.label != t.label[k] or c.start != t.start + k:
            raise MappingError(f"terminal mismatch at position {c.start}: "
                               f"{c.label!r} vs {t.label[k]!r}")
        m.char_terminal[c] = t
        if k == 0:
            m.add(c, t, 1)
    check_mapping(m)
    return m


# ---------------------------------------------------------------------------
# step 2

def _ancestor(node, kind):
    n = node.parent
    while n is not None and n.kind != kind:
        n = n.parent
    return n


def _contains(outer, inner):
    return outer.start <= inner.start and inner.end <= outer.end


def map_functions(pt, dt, m):
    for p_leaf, d_leaf in list(m.p2d.items()):
        if p_leaf.kind != pt_.INPUT_CHAR:
            continue
        a = _ancestor(p_leaf, pt_.FUNCTION)
        b = _ancestor(d_leaf, dv.NONTERMINAL)
        while a is not None and b is not None:
            if a.yield_range == b.yield_range:
                if a not in m.p2d and b not in m.d2p:
                    m.add(a, b, 2)
                a = _ancestor(a, pt_.FUNCTION)
                b = _ancestor(b, dv.NONTERMINAL)
            elif _contains(b, a):
                a = _ancestor(a, pt_.FUNCTION)
            elif _contains(a, b):
                b = _ancestor(b, dv.NONTERMINAL)
            else:
                raise MappingError(
                    f"ascent from {p_leaf.label!r}@{p_leaf.start} reached "
                    f"{a.label}[{a.start}-{a.end}] and {b.label}[{b.start}-{b.end}], "
                    "neither covers the other")
    if pt not in m.p2d and dt not in m.d2p and pt.yield_range == dt.yield_range:
        m.add(pt, dt, 2)
    _pair_empty_functions(m)
    check_mapping(m)
    return m


def _scope(node, boundary):
    """Descendants of ``node`` down to (and including) nested ``boundary`` nodes."""
    out = []
    for c in node.children:
        out.append(c)
        if c.kind != boundary:
            out.extend(_scope(c, boundary))
    return out


def _pair_empty(ps, ds, m, step):
    """Pair zero-yield nodes by gap position, then order of occurrence."""
    by_gap = defaultdict(list)
    for d in ds:
        if d.start > d.end and d not in m.d2p:
            by_gap[d.start].append(d)
    for p in ps:
        if p.start <= p.end or p in m.p2d:
            continue
        queue = by_gap.get(p.start, [])
        for k, d in enumerate(queue):
            if d.kind in COMPATIBLE[p.kind]:
                m.add(p, d, step)
                del queue[:k + 1]
                break


def _pair_empty_functions(m):
    work = [(p, d) for p, d in m.p2d.items() if p.kind == pt_.FUNCTION]
    while work:
        p, d = work.pop()
        ps = [n for n in _scope(p, pt_.FUNCTION) if n.kind == pt_.FUNCTION]
        ds = [n for n in _scope(d, dv.NONTERMINAL) if n.kind == dv.NONTERMINAL]
        before = set(m.p2d)
        _pair_empty(ps, ds, m, 2)
        work.extend((q, m.p2d[q]) for q in m.p2d if q not in before)


# ---------------------------------------------------------------------------
# step 3

_STRUCT_P = (pt_.LOOP, pt_.CONDITION)
_STRUCT_D = (dv.REPETITION, dv.OPTION, dv.CHOICE)


def map_structures(pt, dt, m):
    for p_fn, d_nt in [(p, d) for p, d in m.p2d.items() if p.kind == pt_.FUNCTION]:
        ps = [n for n in _scope(p_fn, pt_.FUNCTION) if n.kind in _STRUCT_P]
        ds = [n for n in _scope(d_nt, dv.NONTERMINAL) if n.kind in _STRUCT_D]
        for p in ps:
            if p.start > p.end:
                continue
            cands = [d for d in ds if d not in m.d2p and d.kind in COMPATIBLE[p.kind]
                     and d.yield_range == p.yield_range]
            if cands:
                m.add(p, min(cands, key=lambda d: d.depth()), 3)
        _pair_empty(ps, ds, m, 3)
    check_mapping(m)
    return m


# ---------------------------------------------------------------------------
# step 4

def _has_mapped_descendant(node, m):
    return any(c in m.p2d or c.kind == pt_.INPUT_CHAR or _has_mapped_descendant(c, m)
               for c in node.children)


def resolve_unmapped(pt, m):
    """Record where semantics of unmapped parse nodes go; fail on indirections."""
    for d in m.dt.walk():
        if d.kind == dv.NONTERMINAL and d not in m.d2p and d.start <= d.end:
            raise MappingError(
                f"grammar rule {d.label}[{d.start}-{d.end}] has no corresponding "
                "function (rule indirection or recursion implemented iteratively)")
    order = list(pt.walk())
    for node in reversed(order):   # innermost first
        if node.kind == pt_.INPUT_CHAR or node in m.p2d:
            continue
        own_sems = sum(isinstance(e, pt_.SemEntry) for e in node.body)
        if node.kind == pt_.FUNCTION:
            if node.start <= node.end or node.sem_count():
                raise MappingError(
                    f"function {node.label}[{node.start}-{node.end}] has no "
                    "corresponding grammar rule")
            continue
        if not _has_mapped_descendant(node, m):
            if node.sem_count():
                raise MappingError(
                    f"unmapped {node.label}[{node.start}-{node.end}] carries semantics "
                    "but has no mapped descendant")
            continue
        kids = node.children
        slots = node.slots
        pre, post = len(slots[0].statements), len(slots[-1].statements)
        if own_sems:
            m.relocations.append(Relocation(node, kids[0] if kids else None,
                                            kids[-1] if kids else None, pre, post))
    return m


def effective_body(node, m):
    """Body of a mapped node with unmapped children replaced by their bodies."""
    out = []
    for e in node.body:
        if isinstance(e, pt_.ParseNode) and e.kind != pt_.INPUT_CHAR and e not in m.p2d:
            out.extend(x for x in effective_body(e, m) if not isinstance(x, pt_.IterMark))
        else:
            out.append(e)
    return out


def map_trees(pt, dt):
    """Run all four mapping steps, checking the invariants after each."""
    m = map_terminals(pt, dt)
    map_functions(pt, dt, m)
    map_structures(pt, dt, m)
    resolve_unmapped(pt, m)
    check_mapping(m)
    if pt not in m.p2d or m.p2d[pt] is not dt:
        raise MappingError("root function does not map to the start rule")
    return m


def deriv_id(d):
    return f"{d.position}[{d.start}-{d.end}]"


def dump_mapping(m):
    """Text dump: one ``parse:<path> <-> deriv:<position>`` line per pair."""
    lines = []
    for p in m.pt.walk():
        d = m.p2d.get(p)
        if d is not None:
            lines.append(f"parse:{p.path()} <-> deriv:{d.position}"
                         f"  # {pt_.parse_label(p)}[{p.start}-{p.end}] ~ "
                         f"{dv.node_label(d)}[{d.start}-{d.end}]")
    for r in m.relocations:
        pre = r.pre_target.path() if r.pre_target is not None else "-"
        post = r.post_target.path() if r.post_target is not None else "-"
        lines.append(f"relocate:{r.node.path()} pre({r.pre_count})->{pre} "
                     f"post({r.post_count})->{post}"
                     f"  # {r.node.label}[{r.node.start}-{r.node.end}]")
    return "\n".join(lines)
