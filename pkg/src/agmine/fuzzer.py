"""Coverage-guided grammar fuzzing with a cooldown on frequent choices.

At every decision (choice alternative, option, repetition count) the
generator prefers expansions that can still reach an uncovered grammar
position; among the candidates it samples with weight ``1/(1+usage)``.
Past ``max_depth`` it takes the shortest way out.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .derivation import covered_positions, derive
from .errors import DeriveError, UnderivableInputError
from .grammar import Choice, Option, Ref, Rep, Seq, Terminal, enumerate_positions

INF = float("inf")


@dataclass
class GenerationBudget:
    max_inputs: int = 200
    max_depth: int = 32
    max_repetition: int = 5
    # once an input grows past this many characters, take the shortest way out
    max_length: int = 48

    def __post_init__(self):
        for name in ("max_inputs", "max_depth", "max_repetition", "max_length"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must not be negative")


@dataclass
class CoverageState:
    universe: frozenset
    covered: set = field(default_factory=set)
    usage: Counter = field(default_factory=Counter)
    seed: int = 0

    @property
    def uncovered(self):
        return self.universe - self.covered

    @property
    def complete(self):
        return not self.uncovered

    @property
    def ratio(self):
        return len(self.covered) / len(self.universe) if self.universe else 1.0


def choose_alternative(cands, usage, rng, cooldown=True, weights=None):
    """Pick one of ``cands``; ``usage`` counts earlier picks per candidate."""
    w = []
    for c in cands:
        base = 1.0 if weights is None else weights.get(c, 1.0)
        w.append(base / (1 + usage[c]) if cooldown else base)
    return rng.choices(cands, weights=w)[0]


def _reach(g):
    """Positions reachable from each rule, following references."""
    own = {name: set() for name in g.rules}
    refs = {name: set() for name in g.rules}
    for pos in enumerate_positions(g):
        own[pos.rule].add(pos)
        node = g.node_at(pos)
        if isinstance(node, Ref):
            refs[pos.rule].add(node.name)
    reach = {name: set(v) for name, v in own.items()}
    changed = True
    while changed:
        changed = False
        for name in g.rules:
            for r in refs[name]:
                if not reach[r] <= reach[name]:
                    reach[name] |= reach[r]
                    changed = True
    return reach


def _min_depths(g):
    depth = {name: INF for name in g.rules}

    def of(node):
        if isinstance(node, Terminal):
            return 0
        if isinstance(node, Ref):
            return 1 + depth[node.name]
        if isinstance(node, Seq):
            return max((of(c) for c in node.items), default=0)
        if isinstance(node, Choice):
            return min(of(a) for a in node.alts)
        return 0    # option / repetition can be skipped

    changed = True
    while changed:
        changed = False
        for name, rule in g.rules.items():
            d = of(rule.body)
            if d < depth[name]:
                depth[name], changed = d, True
    return depth, of


class _Generator:
    def __init__(self, g, budget, state, rng, guided=True):
        self.g, self.budget, self.state, self.rng = g, budget, state, rng
        self.guided = guided
        self.rule_reach = _reach(g)
        self.depths, self.min_depth = _min_depths(g)
        self._reach_cache = {}

    def reach(self, node):
        key = node.pos
        if key not in self._reach_cache:
            out = set()
            stack = [node]
            while stack:
                n = stack.pop()
                out.add(n.pos)
                if isinstance(n, Ref):
                    out |= self.rule_reach[n.name]
                stack.extend(n.children())
            self._reach_cache[key] = out
        return self._reach_cache[key]

    def wants(self, node):
        return self.guided and bool(self.reach(node) - self.seen)

    def generate(self):
        self.seen = set(self.state.covered)
        self.size = 0
        out = []
        self.expand(self.g.rules[self.g.start].body, 0, out)
        return "".join(out)

    def expand(self, node, depth, out):
        self.seen.add(node.pos)
        deep = depth > self.budget.max_depth or self.size > self.budget.max_length
        usage = self.state.usage
        if isinstance(node, Terminal):
            out.append(node.text)
            self.size += len(node.text)
        elif isinstance(node, Ref):
            self.expand(self.g.rules[node.name].body, depth + 1, out)
        elif isinstance(node, Seq):
            for c in node.items:
                self.expand(c, depth, out)
        elif isinstance(node, Choice):
            if deep:
                alt = min(node.alts, key=self.min_depth)
            else:
                pool = [a for a in node.alts if self.wants(a)] or node.alts
                pick = choose_alternative([a.pos for a in pool], usage, self.rng)
                alt = next(a for a in pool if a.pos == pick)
            usage[alt.pos] += 1
            self.expand(alt, depth, out)
        elif isinstance(node, Option):
            if deep:
                take = False
            elif self.wants(node.body):
                take = True
            else:
                take = choose_alternative([node.body.pos, node.pos], usage,
                                          self.rng) == node.body.pos
            usage[node.body.pos if take else node.pos] += 1
            if take:
                self.expand(node.body, depth, out)
        elif isinstance(node, Rep):
            n = 0
            if not deep:
                n = 1 if self.wants(node.body) else 0
                while n < self.budget.max_repetition and self.rng.random() < 0.5:
                    n += 1
            for _ in range(n):
                usage[node.body.pos] += 1
                self.expand(node.body, depth, out)
        else:
            raise TypeError(node)


def _state(g, seed=0):
    return CoverageState(frozenset(enumerate_positions(g)), seed=seed)


def generate_inputs(g, budget=None, seed=0):
    """Derivable inputs that together cover every grammar position.

    ``budget.max_inputs`` bounds the number of generation attempts.  Stops as
    soon as coverage is complete; an incomplete state is returned otherwise.
    """
    budget = budget or GenerationBudget()
    state = _state(g, seed)
    rng = random.Random(seed)
    gen = _Generator(g, budget, state, rng)
    inputs = []
    for _ in range(budget.max_inputs):
        if state.complete:
            break
        text = gen.generate()
        try:
            tree = derive(g, text)
        except DeriveError:
            continue
        gained = covered_positions(tree) - state.covered
        if gained and text not in inputs:
            inputs.append(text)
            state.covered |= gained
    return inputs, state


def random_inputs(g, count, seed=0, budget=None, attempts=None):
    """Up to ``count`` distinct derivable inputs, drawn with cooldown only."""
    budget = budget or GenerationBudget(max_depth=12)
    state = _state(g, seed)
    rng = random.Random(seed)
    gen = _Generator(g, budget, state, rng, guided=False)
    out, seen = [], set()
    for _ in range(attempts or count * 20):
        if len(out) >= count:
            break
        text = gen.generate()
        if text in seen:
            continue
        seen.add(text)
        try:
            derive(g, text)
        except DeriveError:
            continue
        out.append(text)
    return out


def coverage_of(g, inputs):
    """Union of the positions exercised by each input's derivation."""
    state = _state(g)
    for k, text in enumerate(inputs):
        try:
            tree = derive(g, text)
        except DeriveError as exc:
            raise UnderivableInputError(k, exc) from None
        state.covered |= covered_positions(tree)
    return state
