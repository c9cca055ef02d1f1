"""Semantic transfer: move the statements of a parse tree onto the grammar.

Per input, every mapped parse node contributes one *instance* of the grammar
context its partner fills (a loop contributes one instance per iteration).
Statements between two syntactic children become a *segment*: a run of
statements known to occupy the slot range ``lo..hi`` of that context, where
the range is wider than one slot only when neighbouring optional elements
were not taken.  :func:`merge` pools segments over all inputs, solves for the
slot contents and builds the attributed grammar.
"""
from __future__ import annotations

import ast
import copy
from collections import defaultdict
from dataclasses import dataclass, field

from . import derivation as dv
from . import parsetree as pt_
from .errors import MappingError, MergeConflict, TransferError
from .exprlang import BUILTINS, names_read, names_written, stmt_key
from .grammar import (Choice, Grammar, Option, PositionId, Ref, Rep, Rule, Seq,
                      Terminal, context_size, enumerate_positions)
from .mapping import effective_body
from .subject import call_placeholder

OUT = "@out"
REF_PREFIX = "@ref:"


def ref_placeholder(pos):
    return f"{REF_PREFIX}{pos}"


@dataclass
class Segment:
    lo: int
    hi: int
    stmts: list
    witness: str = ""

    @property
    def keys(self):
        return [stmt_key(s) for s in self.stmts]


@dataclass
class PerInputAnnotation:
    """Everything one input tells us about the attributed grammar."""
    text: str
    # context position -> list of instances, each a list of segments
    instances: dict = field(default_factory=lambda: defaultdict(list))
    rule_function: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)      # rule -> parameter names
    returns: dict = field(default_factory=dict)     # rule -> bool
    ref_args: dict = field(default_factory=dict)    # Ref position -> [expr]
    statements: int = 0     # statements transferred
    dropped: int = 0        # statements with no effect on attributes

    def segments(self):
        for ctx, insts in self.instances.items():
            for inst in insts:
                for seg in inst:
                    yield ctx, seg


# ---------------------------------------------------------------------------
# per-input transfer

class _Renamer(ast.NodeTransformer):
    def __init__(self, table):
        self.table = table

    def visit_Name(self, node):
        new = self.table.get(node.id)
        if new is None:
            return node
        if isinstance(new, str):
            return ast.copy_location(ast.Name(new, node.ctx), node)
        return copy.deepcopy(new)


def _rename(node, table):
    return _Renamer(table).visit(copy.deepcopy(node))


class _Transfer:
    def __init__(self, m, g, prog, text):
        self.m, self.g, self.prog = m, g, prog
        self.ann = PerInputAnnotation(text)
        self.calls = {p.seq: p for p in m.pt.walk() if p.kind == pt_.FUNCTION}
        self.forbidden = set(prog.globals_init) | {"s"}
        if prog.cursor:
            self.forbidden.add(prog.cursor)

    def run(self):
        for p in self.m.pt.walk():
            d = self.m.p2d.get(p)
            if d is None or p.kind == pt_.INPUT_CHAR:
                continue
            if p.kind == pt_.FUNCTION:
                self.associate(p, d)
            self.node(p, d)
        return self.ann

    def associate(self, p, d):
        fn = self.prog.functions[p.label]
        known = self.ann.rule_function.setdefault(d.label, p.label)
        if known != p.label:
            raise TransferError(
                f"rule {d.label!r} corresponds to both {known}() and {p.label}()")
        self.ann.params[d.label] = list(fn.params)
        self.ann.returns[d.label] = fn.returns_value

    def index(self, e, d, ctx):
        """Item index in ``ctx`` of the derivation child of ``d`` under ``e``."""
        a = self.m.anchor(e)
        if a is None:
            return None
        x = a
        while x.parent is not d:
            if x.parent is None:
                raise MappingError(f"{e.label}[{e.start}-{e.end}] is not below its scope")
            if x.parent.kind == dv.NONTERMINAL:
                raise MappingError(
                    f"{e.label}[{e.start}-{e.end}] sits under rule {x.parent.label} "
                    f"with no corresponding function")
            x = x.parent
        if isinstance(self.g.node_at(ctx), Seq):
            return x.position.path[len(ctx.path)]
        return 0

    def node(self, p, d):
        ctx = d.context
        size = context_size(self.g.node_at(ctx))
        body = effective_body(p, self.m)
        if p.kind == pt_.LOOP:
            groups, cur = [], None
            for e in body:
                if isinstance(e, pt_.IterMark):
                    cur = []
                    groups.append(cur)
                elif cur is None:
                    if isinstance(e, pt_.SemEntry):
                        raise TransferError("statement in a loop before its first iteration")
                else:
                    cur.append(e)
        else:
            groups = [[e for e in body if not isinstance(e, pt_.IterMark)]]
        for group in groups:
            self.ann.instances[ctx].append(self.instance(group, d, ctx, size, p))

    def instance(self, group, d, ctx, size, p):
        segs, cur, prev = [], [], None
        for e in group:
            if isinstance(e, pt_.SemEntry):
                stmt = self.normalize(e, d.label)
                if stmt is not None:
                    cur.append(stmt)
                continue
            idx = self.index(e, d, ctx)
            if idx is None:
                continue
            if prev is not None and idx <= prev:
                if idx < prev:
                    raise TransferError(
                        f"{p.label}[{p.start}-{p.end}]: children out of grammar order")
                if cur:
                    raise TransferError(
                        f"{p.label}[{p.start}-{p.end}]: statements fall inside grammar "
                        f"element {ctx}:{idx}")
                continue
            lo = 0 if prev is None else prev + 1
            segs.append(Segment(lo, idx, cur, self.ann.text))
            cur, prev = [], idx
        lo = 0 if prev is None else prev + 1
        segs.append(Segment(lo, size, cur, self.ann.text))
        return segs

    def normalize(self, e, rule):
        """Statement with placeholders for calls and the return value."""
        stmt = e.stmt
        table, sites = {}, {}
        for seq in e.call_args:
            callee = self.calls.get(seq)
            nt = self.m.p2d.get(callee) if callee is not None else None
            if nt is None:
                raise TransferError(f"statement {e.source!r} calls a function with no "
                                    "corresponding grammar rule")
            table[call_placeholder(seq)] = ref_placeholder(nt.position)
            sites[seq] = nt.position
        for seq, args in e.call_args.items():
            norm = [_rename(a, table) for a in args]
            known = self.ann.ref_args.setdefault(sites[seq], norm)
            if [ast.dump(a) for a in known] != [ast.dump(a) for a in norm]:
                raise MergeConflict(
                    f"arguments of {sites[seq]} differ", str(sites[seq]),
                    [[ast.unparse(a) for a in known], [ast.unparse(a) for a in norm]],
                    [self.ann.text])
        if isinstance(stmt, ast.Return):
            if stmt.value is None:
                self.ann.dropped += 1
                return None
            stmt = ast.Assign([ast.Name(OUT, ast.Store())], stmt.value, lineno=0)
        stmt = _rename(stmt, table)
        if isinstance(stmt, ast.Expr) and isinstance(stmt.value, (ast.Name, ast.Constant)):
            self.ann.dropped += 1
            return None
        bad = (names_read(stmt) | names_written(stmt)) & self.forbidden
        if bad:
            raise TransferError(f"statement {e.source!r} depends on global state "
                                f"({', '.join(sorted(bad))})")
        for n in ast.walk(stmt):
            if isinstance(n, ast.Call) and isinstance(n.func, ast.Name) \
                    and n.func.id not in BUILTINS:
                raise TransferError(f"statement {e.source!r} calls {n.func.id}()")
        self.ann.statements += 1
        return ast.fix_missing_locations(stmt)


def transfer(m, pt, dt, g, prog, text=""):
    """Per-input annotation of ``g`` from the mapping ``m`` of ``pt`` onto ``dt``."""
    if m.pt is not pt or m.dt is not dt:
        raise ValueError("mapping does not belong to these trees")
    return _Transfer(m, g, prog, text).run()


# ---------------------------------------------------------------------------
# merging

@dataclass
class MergeResult:
    grammar: Grammar
    warnings: list
    slots: dict          # (context, slot) -> [stmt] before finalization


def _show(stmts):
    return "; ".join(ast.unparse(s) for s in stmts) or "<nothing>"


def _conflict(ctx, slot, a, b):
    where = f"{ctx}:{slot}" if slot is not None else str(ctx)
    return MergeConflict(
        f"inconsistent semantics at {where}: {_show(a.stmts)!r} ({a.witness!r}) "
        f"vs {_show(b.stmts)!r} ({b.witness!r})",
        where, [_show(a.stmts), _show(b.stmts)], [a.witness, b.witness])


def solve_context(ctx, segments, warnings):
    """Slot contents of one context consistent with every observed segment."""
    fixed = {}      # slot -> Segment whose stmts are exactly that slot
    pending = list(segments)
    while pending:
        progress = False
        rest = []
        for seg in pending:
            unknown = [j for j in range(seg.lo, seg.hi + 1) if j not in fixed]
            if len(unknown) > 1:
                rest.append(seg)
                continue
            progress = True
            keys = seg.keys
            if not unknown:
                have = [k for j in range(seg.lo, seg.hi + 1) for k in fixed[j].keys]
                if have != keys:
                    blame = next(fixed[j] for j in range(seg.lo, seg.hi + 1))
                    raise _conflict(ctx, seg.lo if seg.lo == seg.hi else None, blame, seg)
                continue
            j = unknown[0]
            pre = [k for x in range(seg.lo, j) for k in fixed[x].keys]
            post = [k for x in range(j + 1, seg.hi + 1) for k in fixed[x].keys]
            if keys[:len(pre)] != pre or len(keys) < len(pre) + len(post) \
                    or (post and keys[len(keys) - len(post):] != post):
                blame = fixed[seg.lo if seg.lo != j else seg.hi]
                raise _conflict(ctx, None, blame, seg)
            mid = seg.stmts[len(pre):len(seg.stmts) - len(post)]
            fixed[j] = Segment(j, j, mid, seg.witness)
        pending = rest
        if pending and not progress:
            seg = min(pending, key=lambda s: (s.lo, s.hi))
            unknown = [j for j in range(seg.lo, seg.hi + 1) if j not in fixed]
            if seg.stmts:
                warnings.append(
                    f"{ctx}: placement of {_show(seg.stmts)!r} between slots "
                    f"{seg.lo} and {seg.hi} is ambiguous; using slot {unknown[0]}")
            # the earliest slot takes whatever the segment needs; the others stay empty
            for j in unknown[1:]:
                fixed[j] = Segment(j, j, [], seg.witness)
    return {j: s.stmts for j, s in fixed.items() if s.stmts}


def _contexts(rule):
    """Context nodes of a rule in pre-order."""
    out = []

    def walk(node, is_ctx):
        if is_ctx:
            out.append(node)
        if isinstance(node, Seq):
            for c in node.items:
                walk(c, False)
        elif isinstance(node, Choice):
            for a in node.alts:
                walk(a, True)
        elif isinstance(node, (Option, Rep)):
            walk(node.body, True)

    walk(rule.body, True)
    return out


def _refs(rule):
    out = []

    def walk(node):
        if isinstance(node, Ref):
            out.append(node)
        for c in node.children():
            walk(c)

    walk(rule.body)
    return out


def push_past_terminals(rule):
    """Statements just before a terminal cannot depend on it; move them after."""
    for ctx in _contexts(rule):
        items = ctx.items if isinstance(ctx, Seq) else [ctx]
        for j, item in enumerate(items):
            if isinstance(item, Terminal) and ctx.sems.get(j):
                ctx.sems[j + 1] = ctx.sems.pop(j) + ctx.sems.get(j + 1, [])


def _name_counts(nodes):
    reads, writes = defaultdict(int), defaultdict(int)
    for node in nodes:
        for n in ast.walk(node):
            if isinstance(n, ast.Name):
                (writes if isinstance(n.ctx, ast.Store) else reads)[n.id] += 1
            elif isinstance(n, ast.AugAssign) and isinstance(n.target, ast.Name):
                reads[n.target.id] += 1
    return reads, writes


def _pure(expr):
    return not any(isinstance(n, ast.Call) and isinstance(n.func, ast.Attribute)
                   for n in ast.walk(expr))


def _temp(stmt, protected):
    if isinstance(stmt, ast.Assign) and len(stmt.targets) == 1 \
            and isinstance(stmt.targets[0], ast.Name) \
            and stmt.targets[0].id not in protected and _pure(stmt.value):
        return stmt.targets[0].id
    return None


def inline_temporaries(rule, protected):
    """Fold ``x = e`` into the next statement when that is the only use of ``x``."""
    lists = [ctx.sems[k] for ctx in _contexts(rule) for k in sorted(ctx.sems)]
    stmts = [s for lst in lists for s in lst]
    reads, writes = _name_counts(stmts + [a for r in _refs(rule) for a in r.args])
    sites = defaultdict(list)
    for lst in lists:
        for k in range(len(lst) - 1):
            x = _temp(lst[k], protected)
            nxt = lst[k + 1]
            if x and isinstance(nxt, (ast.Assign, ast.AugAssign, ast.Expr)) \
                    and _name_counts([nxt])[0].get(x) == 1 and x not in names_written(nxt):
                sites[x].append((lst, k))
    done = False
    for x, where in sites.items():
        if len(where) != reads[x] or len(where) != writes[x]:
            continue
        for lst, k in where:
            lst[k + 1] = ast.fix_missing_locations(_rename(lst[k + 1], {x: lst[k].value}))
            lst[k] = None
        done = True
    for ctx in _contexts(rule):
        for k in list(ctx.sems):
            ctx.sems[k] = [s for s in ctx.sems[k] if s is not None]
            if not ctx.sems[k]:
                del ctx.sems[k]
    return done


def _fresh(base, taken):
    k = 1
    while True:
        cand = base if k == 1 else f"{base}{k}"
        if cand not in taken:
            return cand
        k += 1


def _rule_names(rule):
    stmts = [s for ctx in _contexts(rule) for lst in ctx.sems.values() for s in lst]
    args = [a for r in _refs(rule) for a in r.args]
    reads, writes = _name_counts(stmts + args)
    return {n for n in set(reads) | set(writes) if not n.startswith("@")} | set(rule.params)


def assign_names(g):
    """Replace placeholders by attribute names: ``Rule^R`` and ``Ref^R``, ``R2``..."""
    for rule in g.rules.values():
        taken = _rule_names(rule)
        table = {}
        if rule.out:
            rule.out = _fresh(rule.name[0].upper(), taken)
            taken.add(rule.out)
            table[OUT] = rule.out
        for ref in _refs(rule):
            ph = ref_placeholder(ref.pos)
            callee = g.rules[ref.name]
            if callee.out or _mentions(rule, ph):
                ref.alias = _fresh(ref.name[0].upper(), taken)
                taken.add(ref.alias)
                table[ph] = ref.alias
            else:
                ref.alias = None
        for ctx in _contexts(rule):
            for k, lst in ctx.sems.items():
                ctx.sems[k] = [ast.fix_missing_locations(_rename(s, table)) for s in lst]
        for ref in _refs(rule):
            ref.args = [_rename(a, table) for a in ref.args]


def _mentions(rule, name):
    stmts = [s for ctx in _contexts(rule) for lst in ctx.sems.values() for s in lst]
    args = [a for r in _refs(rule) for a in r.args]
    reads, writes = _name_counts(stmts + args)
    return name in reads or name in writes


def merge(annotations, g, simplify=True):
    """Combine per-input annotations into one attributed grammar.

    Raises :class:`MergeConflict` when two inputs demand different statements
    for the same slot, argument list or rule/function association.
    """
    annotations = list(annotations)
    warnings = []
    owner, params, returns, ref_args = {}, {}, {}, {}
    for ann in annotations:
        for r, f in ann.rule_function.items():
            known = owner.setdefault(r, (f, ann.text))
            if known[0] != f:
                raise MergeConflict(
                    f"rule {r!r} corresponds to {known[0]}() and {f}()", r,
                    [known[0], f], [known[1], ann.text])
        params.update(ann.params)
        returns.update(ann.returns)
        for pos, args in ann.ref_args.items():
            known = ref_args.setdefault(pos, (args, ann.text))
            if [ast.dump(a) for a in known[0]] != [ast.dump(a) for a in args]:
                raise MergeConflict(
                    f"arguments of {pos} differ", str(pos),
                    [[ast.unparse(a) for a in known[0]], [ast.unparse(a) for a in args]],
                    [known[1], ann.text])

    pooled = defaultdict(list)
    for ann in annotations:
        for ctx, seg in ann.segments():
            pooled[ctx].append(seg)
    slots = {}
    for ctx in enumerate_positions(g):
        if ctx in pooled:
            for j, stmts in solve_context(ctx, pooled[ctx], warnings).items():
                slots[(ctx, j)] = stmts

    ag = copy.deepcopy(g)
    for node in (ag.node_at(p) for p in enumerate_positions(ag)):
        node.sems = {}
        if isinstance(node, Ref):
            node.args, node.alias = [], None
    for (ctx, j), stmts in slots.items():
        ag.node_at(ctx).sems[j] = copy.deepcopy(stmts)
    for rule in ag.rules.values():
        rule.params = list(params.get(rule.name, []))
        rule.out = OUT if returns.get(rule.name) else None
    for pos, (args, _) in ref_args.items():
        ag.node_at(pos).args = copy.deepcopy(args)
    for rule in ag.rules.values():
        push_past_terminals(rule)
        if simplify:
            protected = set(rule.params) | {OUT}
            while inline_temporaries(rule, protected):
                pass
    assign_names(ag)
    return MergeResult(ag, warnings, slots)
