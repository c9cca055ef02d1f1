"""Subject programs: a Python-syntax recursive-descent parser language.

Programs are plain Python source restricted to module-level globals and
``def`` functions.  The harness binds the input string to the global ``s``;
the first function is the entry point.  Running a program under
:func:`execute` records a trace of calls, taken branches of input-reading
conditionals, loops, cursor advances and semantic statements.
"""
from __future__ import annotations

import ast
import copy
from dataclasses import dataclass, field

from ._limits import deep_recursion
from .errors import AmbiguousCursorError, EvalError, SubjectSyntaxError
from .exprlang import Evaluator, Scope, check_expr, names_read

SYN = "Syn"
SEM = "Sem"

MAX_CALL_DEPTH = 400
MAX_STEPS = 200_000

# trace event kinds
CALL_ENTER = "CallEnter"
CALL_EXIT = "CallExit"
BRANCH_ENTER = "BranchEnter"
BRANCH_EXIT = "BranchExit"
LOOP_ENTER = "LoopEnter"
LOOP_ITER = "LoopIter"
LOOP_EXIT = "LoopExit"
CONSUME = "Consume"
SEM_STMT = "SemStmt"

ENTER_EXIT = {CALL_ENTER: CALL_EXIT, BRANCH_ENTER: BRANCH_EXIT, LOOP_ENTER: LOOP_EXIT}


@dataclass
class Function:
    name: str
    params: list
    body: list
    lineno: int

    @property
    def returns_value(self):
        return any(isinstance(n, ast.Return) and n.value is not None
                   for st in self.body for n in ast.walk(st))


@dataclass
class Program:
    functions: dict
    globals_init: dict
    source: str = ""
    sites: dict = field(default_factory=dict)      # id(stmt) -> site id
    site_nodes: dict = field(default_factory=dict)  # site id -> stmt
    labels: dict | None = None
    cursor: str | None = None

    @property
    def entry(self):
        return next(iter(self.functions))

    def site(self, stmt):
        return self.sites[id(stmt)]


@dataclass
class TraceEvent:
    kind: str
    seq: int
    name: str = ""            # function name or site id
    pos: int = 0              # cursor (0-based index of next unread char)
    args: list | None = None
    value: object = None
    start: int = 0            # Consume: 1-based inclusive range
    end: int = 0
    text: str = ""
    stmt: ast.stmt | None = None   # SemStmt: normalized statement
    source: str = ""
    call_args: dict | None = None  # SemStmt: call seq -> normalized argument list


@dataclass
class Outcome:
    result: object
    trace: list
    status: str = "ok"
    message: str = ""
    pos: int = 0

    @property
    def ok(self):
        return self.status == "ok"


class SubjectRaise(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


# ---------------------------------------------------------------------------
# parsing

_BODY_STMTS = (ast.Assign, ast.AugAssign, ast.Expr, ast.If, ast.While,
               ast.Return, ast.Raise, ast.Pass, ast.Global)


def parse_program(text):
    """Parse subject-program source into a :class:`Program` with site ids."""
    try:
        mod = ast.parse(text)
    except SyntaxError as exc:
        raise SubjectSyntaxError(f"syntax error: {exc.msg}", exc.lineno, exc.offset) from None
    functions, globals_init = {}, {}
    for node in mod.body:
        if isinstance(node, ast.FunctionDef):
            if node.decorator_list or node.args.vararg or node.args.kwarg \
                    or node.args.kwonlyargs or node.args.defaults:
                raise SubjectSyntaxError("only plain positional parameters are supported",
                                         node.lineno, node.col_offset)
            if node.name in functions:
                raise SubjectSyntaxError(f"duplicate function {node.name!r}", node.lineno)
            functions[node.name] = Function(node.name, [a.arg for a in node.args.args],
                                            node.body, node.lineno)
        elif isinstance(node, ast.Assign) and len(node.targets) == 1 \
                and isinstance(node.targets[0], ast.Name):
            check_expr(node.value)
            if node.targets[0].id != "s":
                globals_init[node.targets[0].id] = node.value
        elif isinstance(node, ast.Expr) and isinstance(node.value, ast.Constant):
            continue
        else:
            raise SubjectSyntaxError(
                f"unsupported top-level statement {type(node).__name__}",
                node.lineno, node.col_offset)
    if not functions:
        raise SubjectSyntaxError("program defines no function", 1, 0)
    prog = Program(functions, globals_init, text)
    for fn in functions.values():
        _index_sites(prog, fn.name, fn.body, "")
    return prog


def _index_sites(prog, fn, stmts, prefix):
    for k, st in enumerate(stmts):
        if not isinstance(st, _BODY_STMTS):
            raise SubjectSyntaxError(f"unsupported statement {type(st).__name__}",
                                     st.lineno, st.col_offset)
        site = f"{fn}:{prefix}{k}"
        prog.sites[id(st)] = site
        prog.site_nodes[site] = st
        for sub in ast.iter_child_nodes(st):
            if isinstance(sub, ast.expr):
                check_expr(sub)
        if isinstance(st, ast.Raise) and st.exc is not None:
            if not (isinstance(st.exc, ast.Name) or (isinstance(st.exc, ast.Call)
                                                     and isinstance(st.exc.func, ast.Name))):
                raise SubjectSyntaxError("raise takes an exception name or call", st.lineno)
        if isinstance(st, ast.Assign) and any(
                not isinstance(t, (ast.Name, ast.Subscript)) for t in st.targets):
            raise SubjectSyntaxError("unsupported assignment target", st.lineno, st.col_offset)
        if isinstance(st, (ast.If, ast.While)):
            _index_sites(prog, fn, st.body, f"{prefix}{k}.")
            _index_sites(prog, fn, st.orelse, f"{prefix}{k}.e")


# ---------------------------------------------------------------------------
# classification

def _reads_input(node):
    return "s" in names_read(node)


def _assigned_names(stmt):
    if isinstance(stmt, ast.Assign):
        return [t.id for t in stmt.targets if isinstance(t, ast.Name)]
    if isinstance(stmt, ast.AugAssign) and isinstance(stmt.target, ast.Name):
        return [stmt.target.id]
    return []


def find_cursor(prog):
    """The single global integer variable used to index ``s`` and mutated."""
    indexers = set()
    mutated = set()
    for fn in prog.functions.values():
        for st in fn.body:
            for n in ast.walk(st):
                if isinstance(n, ast.Subscript) and isinstance(n.value, ast.Name) \
                        and n.value.id == "s":
                    indexers |= names_read(n.slice)
                if isinstance(n, (ast.Assign, ast.AugAssign)):
                    mutated.update(_assigned_names(n))
    cands = sorted(indexers & mutated)
    if len(cands) > 1:
        raise AmbiguousCursorError(
            f"ambiguous cursor: {', '.join(cands)} all index s and are mutated")
    if not cands:
        return None
    if cands[0] not in prog.globals_init:
        raise SubjectSyntaxError(f"cursor {cands[0]!r} must be a module-level global")
    return cands[0]


def _user_calls(node, prog):
    return any(isinstance(n, ast.Call) and isinstance(n.func, ast.Name)
               and n.func.id in prog.functions for n in ast.walk(node))


def classify_statements(prog):
    """Label every statement site Syn or Sem (cached on the program)."""
    if prog.labels is not None:
        return prog.labels
    cursor = find_cursor(prog)
    labels = {}

    def mark_all(stmts, label):
        for st in stmts:
            labels[prog.site(st)] = label
            if isinstance(st, (ast.If, ast.While)):
                mark_all(st.body, label)
                mark_all(st.orelse, label)

    def visit(stmts):
        for st in stmts:
            site = prog.site(st)
            if isinstance(st, (ast.If, ast.While)):
                if _reads_input(st.test):
                    labels[site] = SYN
                    visit(st.body)
                    visit(st.orelse)
                elif any(isinstance(n, ast.Raise) for n in ast.walk(st)):
                    # error guard such as `if d == 0: raise ...`
                    labels[site] = SYN
                    visit(st.body)
                    visit(st.orelse)
                elif _pure(st, prog, cursor):
                    mark_all([st], SEM)
                else:
                    raise SubjectSyntaxError(
                        "conditional that does not read the input must contain only "
                        "semantic statements", st.lineno, st.col_offset)
            elif isinstance(st, (ast.Assign, ast.AugAssign)):
                targets = _assigned_names(st)
                if cursor is not None and cursor in targets:
                    others = [t for t in targets if t != cursor]
                    if others or (isinstance(st, ast.Assign) and len(st.targets) > 1):
                        raise SubjectSyntaxError(
                            "statement mixes cursor movement with other effects",
                            st.lineno, st.col_offset)
                    labels[site] = SYN
                else:
                    labels[site] = SEM
            elif isinstance(st, (ast.Raise, ast.Pass, ast.Global)):
                labels[site] = SYN
            else:
                labels[site] = SEM

    for fn in prog.functions.values():
        visit(fn.body)
    prog.labels = labels
    prog.cursor = cursor
    return labels


def _pure(stmt, prog, cursor):
    for n in ast.walk(stmt):
        if isinstance(n, (ast.Return, ast.Raise)):
            return False
        if isinstance(n, ast.Name) and (n.id == "s" or n.id == cursor):
            return False
    return not _user_calls(stmt, prog)


def line_labels(prog):
    """Label per source line, with ``else:`` lines inheriting their if's label."""
    labels = classify_statements(prog)
    lines = {}
    src_lines = prog.source.splitlines()
    for site, st in prog.site_nodes.items():
        lines[st.lineno] = labels[site]
        if isinstance(st, ast.If) and st.orelse and not (
                len(st.orelse) == 1 and isinstance(st.orelse[0], ast.If)):
            first = st.orelse[0].lineno
            for ln in range(first - 1, st.lineno, -1):
                if src_lines[ln - 1].strip().startswith("else"):
                    lines[ln] = labels[site]
                    break
    return lines


# ---------------------------------------------------------------------------
# execution

def _rebuild(node, repl):
    """Copy of ``node`` with subtrees replaced by ``repl[id(subtree)]``."""
    if id(node) in repl:
        return copy.deepcopy(repl[id(node)])
    new = type(node)()
    for name, value in ast.iter_fields(node):
        if isinstance(value, list):
            value = [_rebuild(v, repl) if isinstance(v, ast.AST) else v for v in value]
        elif isinstance(value, ast.AST):
            value = _rebuild(value, repl)
        setattr(new, name, value)
    for attr in ("lineno", "col_offset", "end_lineno", "end_col_offset"):
        if hasattr(node, attr):
            setattr(new, attr, getattr(node, attr))
    return new


def call_placeholder(seq):
    return f"@call{seq}"


class _Interpreter:
    def __init__(self, prog, text):
        self.prog = prog
        self.labels = classify_statements(prog)
        self.cursor = prog.cursor
        self.text = text
        self.trace = []
        self.depth = 0
        self.steps = 0
        self.current = None   # bookkeeping of the semantic statement being run
        self.ev = Evaluator(call_hook=self.call, observe=self.observe)
        self.globals = {"s": text}
        init = Evaluator()
        for name, expr in prog.globals_init.items():
            self.globals[name] = init.eval(expr, Scope(globals_=self.globals))

    @property
    def pos(self):
        return self.globals[self.cursor] if self.cursor else 0

    def emit(self, kind, **kw):
        ev = TraceEvent(kind, len(self.trace), pos=self.pos, **kw)
        self.trace.append(ev)
        return ev

    def observe(self, node, value):
        if self.current is not None:
            self.current["reads"][id(node)] = value

    def call(self, name, args, node=None):
        fn = self.prog.functions.get(name)
        if fn is None:
            raise EvalError(f"unknown function {name!r}")
        if len(args) != len(fn.params):
            raise EvalError(f"{name}() takes {len(fn.params)} argument(s)")
        if self.depth >= MAX_CALL_DEPTH:
            raise EvalError("maximum call depth exceeded")
        enter = self.emit(CALL_ENTER, name=name, args=list(args))
        outer = self.current
        if outer is not None and node is not None:
            outer["calls"][id(node)] = (enter.seq, node)
        self.current = None
        self.depth += 1
        value = None
        try:
            self.block(fn.body, Scope(dict(zip(fn.params, args)), self.globals))
        except _Return as ret:
            value = ret.value
        finally:
            self.depth -= 1
            self.current = outer
            self.emit(CALL_EXIT, name=name, value=value)
        return value

    def block(self, stmts, scope):
        for st in stmts:
            self.stmt(st, scope)

    def tick(self):
        self.steps += 1
        if self.steps > MAX_STEPS:
            raise EvalError("step limit exceeded")

    def stmt(self, st, scope):
        self.tick()
        site = self.prog.site(st)
        label = self.labels[site]
        if label == SEM:
            self.semantic(st, site, scope)
        elif isinstance(st, ast.If):
            self.branch(st, site, scope)
        elif isinstance(st, ast.While):
            self.loop(st, site, scope)
        elif isinstance(st, (ast.Assign, ast.AugAssign)):
            old = self.pos
            self.ev.exec(st, scope)
            new = self.pos
            if not isinstance(new, int):
                raise EvalError("cursor must stay an integer")
            if new < old:
                raise EvalError("cursor moved backwards")
            if new > len(self.text):
                raise EvalError("cursor moved past the end of the input")
            if new > old:
                self.emit(CONSUME, name=site, start=old + 1, end=new,
                          text=self.text[old:new])
        elif isinstance(st, ast.Raise):
            message = ""
            exc = st.exc
            if isinstance(exc, ast.Call) and exc.args:
                message = str(self.ev.eval(exc.args[0], scope))
            elif exc is not None:
                message = ast.unparse(exc)
            raise SubjectRaise(message)

    def semantic(self, st, site, scope):
        self.current = {"reads": {}, "calls": {}}
        try:
            if isinstance(st, ast.Return):
                value = self.ev.eval(st.value, scope) if st.value is not None else None
            else:
                self.ev.exec(st, scope)
        finally:
            info, self.current = self.current, None
        repl = {k: ast.Constant(v) for k, v in info["reads"].items()}
        repl.update({k: ast.Name(call_placeholder(seq), ast.Load())
                     for k, (seq, _) in info["calls"].items()})
        call_args = {seq: [_rebuild(a, repl) for a in node.args]
                     for seq, node in info["calls"].values()}
        self.emit(SEM_STMT, name=site, stmt=_rebuild(st, repl), source=ast.unparse(st),
                  call_args=call_args)
        if isinstance(st, ast.Return):
            raise _Return(value)

    def branch(self, st, site, scope):
        taken = bool(self.ev.eval(st.test, scope))
        guard = not _reads_input(st.test)
        if taken:
            body, tag = st.body, "0"
        else:
            body, tag = st.orelse, "e"
            if len(body) == 1 and isinstance(body[0], ast.If):
                self.stmt(body[0], scope)   # elif chain: one conditional
                return
        if guard or not body:
            self.block(body, scope)
            return
        self.emit(BRANCH_ENTER, name=f"{site}#{tag}")
        try:
            self.block(body, scope)
        finally:
            self.emit(BRANCH_EXIT, name=f"{site}#{tag}")

    def loop(self, st, site, scope):
        if st.orelse:
            raise EvalError("while/else is not supported")
        self.emit(LOOP_ENTER, name=site)
        try:
            while self.ev.eval(st.test, scope):
                self.tick()
                self.emit(LOOP_ITER, name=site)
                self.block(st.body, scope)
        finally:
            self.emit(LOOP_EXIT, name=site)


def execute(prog, text):
    """Run the entry function on ``text``; never raises for subject errors."""
    interp = _Interpreter(prog, text)
    try:
        with deep_recursion():
            result = interp.call(prog.entry, [])
    except SubjectRaise as exc:
        return Outcome(None, interp.trace, "exception", str(exc), interp.pos)
    except (EvalError, RecursionError) as exc:
        return Outcome(None, interp.trace, "exception", str(exc), interp.pos)
    if interp.pos < len(text):
        return Outcome(None, interp.trace, "exception",
                       f"input not fully consumed (stopped at position {interp.pos + 1})",
                       interp.pos)
    return Outcome(result, interp.trace, "ok", "", interp.pos)
