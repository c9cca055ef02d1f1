"""Attributed-grammar interpreter.

The grammar part is parsed exactly as :func:`derive` does; the derivation
tree is then walked left to right, running semantic blocks in slot order.
Each rule application gets a fresh environment with its in-attributes bound
from the arguments; the value of its out-attribute is bound to the alias at
the reference site.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import derivation as dv
from ._limits import deep_recursion
from .errors import EvalError
from .exprlang import Evaluator, Scope, parse_statements
from .grammar import Seq


class AGEvalError(EvalError):
    def __init__(self, message, rule=None, slot=None):
        self.rule = rule
        self.slot = slot
        where = f" in rule {rule!r}" if rule else ""
        if slot is not None:
            where += f" at slot {slot}"
        self.detail = message
        super().__init__(f"{message}{where}")


@dataclass
class RuleEnvironment:
    bindings: dict = field(default_factory=dict)
    out: str | None = None

    @property
    def scope(self):
        return Scope(self.bindings)

    @property
    def value(self):
        if self.out is None:
            return None
        if self.out not in self.bindings:
            raise EvalError(f"out-attribute {self.out!r} was never assigned")
        return self.bindings[self.out]


def eval_sem_block(block, env=None):
    """Run a block (statement list or ``sem ... endsem`` text) in ``env``."""
    if env is None:
        env = RuleEnvironment()
    elif isinstance(env, dict):
        env = RuleEnvironment(dict(env))
    if isinstance(block, str):
        text = block.strip()
        if text.startswith("sem") and text.endswith("endsem"):
            text = text[3:-6]
        block = parse_statements(text) if text.strip() else []
    scope = env.scope
    ev = Evaluator()
    for stmt in block:
        ev.exec(stmt, scope)
    return env


class _Runner:
    def __init__(self, ag):
        self.ag = ag
        self.ev = Evaluator()

    def rule(self, d, args):
        rule = self.ag.rules[d.label]
        env = RuleEnvironment(dict(zip(rule.params, args)), rule.out)
        for p in rule.params[len(args):]:
            env.bindings[p] = None
        self.context(rule.body, d.children, env.scope, rule.name)
        try:
            return env.value
        except EvalError as exc:
            raise AGEvalError(str(exc), rule.name) from None

    def run_slot(self, ctx, k, scope, rule):
        for stmt in ctx.sems.get(k, ()):
            try:
                self.ev.exec(stmt, scope)
            except AGEvalError:
                raise
            except EvalError as exc:
                raise AGEvalError(str(exc), rule, f"{ctx.pos}:{k}") from None

    def context(self, ctx, kids, scope, rule):
        seq = isinstance(ctx, Seq)
        size = len(ctx.items) if seq else 1
        cur = 0
        for kid in kids:
            idx = kid.position.path[len(ctx.pos.path)] if seq else 0
            while cur <= idx:
                self.run_slot(ctx, cur, scope, rule)
                cur += 1
            self.item(kid, scope, rule)
        while cur <= size:
            self.run_slot(ctx, cur, scope, rule)
            cur += 1

    def item(self, d, scope, rule):
        if d.kind == dv.TERMINAL:
            return
        node = self.ag.node_at(d.position)
        if d.kind == dv.NONTERMINAL:
            try:
                args = [self.ev.eval(a, scope) for a in node.args]
            except EvalError as exc:
                raise AGEvalError(str(exc), rule, str(d.position)) from None
            value = self.rule(d, args)
            if node.alias:
                scope.assign(node.alias, value)
        elif d.kind == dv.REPETITION:
            for a, b in d.iterations:
                self.context(node.body, d.children[a:b], scope, rule)
        else:
            self.context(self.ag.node_at(d.context), d.children, scope, rule)


def run_ag(ag, text):
    """Parse ``text`` with ``ag`` and return the start rule's out-attribute."""
    tree = dv.derive(ag, text)
    with deep_recursion():
        return _Runner(ag).rule(tree, [])


# ---------------------------------------------------------------------------
# canonical serialization

def canonical(value):
    """Bit-exact text form used to compare program and AG outputs."""
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(canonical(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted((canonical(k), canonical(v)) for k, v in value.items())
        return "{" + ",".join(f"{k}:{v}" for k, v in items) + "}"
    return json.dumps(repr(value))


def canonical_error(message):
    return f"!error: {message}"
