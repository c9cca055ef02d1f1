"""Expression and statement evaluator shared by subject programs and semantic blocks.

Both sides use the same Python-syntax subset, parsed with :mod:`ast`.  Subject
programs run it under the tracing interpreter; attributed grammars run the
transferred statements unmodified, so the builtin set must stay identical.
"""
import ast
import operator

from .errors import EvalError, SubjectSyntaxError

MAX_LOOP_STEPS = 100_000


def _append(lst, x):
    lst.append(x)


BUILTINS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": bool,
    "len": len,
    "ord": ord,
    "chr": chr,
    "abs": abs,
    "min": min,
    "max": max,
    "list": list,
    "dict": dict,
    "append": _append,
}

METHODS = {
    str: {"isdigit", "isalpha", "isalnum", "isspace", "lower", "upper",
          "join", "startswith", "endswith", "strip"},
    list: {"append", "pop", "index", "count"},
    dict: {"get", "keys", "values", "items"},
}

BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
}

CMPOPS = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.In: lambda a, b: a in b,
    ast.NotIn: lambda a, b: a not in b,
}

_EXPR_NODES = (
    ast.Constant, ast.Name, ast.BinOp, ast.UnaryOp, ast.BoolOp, ast.Compare,
    ast.Call, ast.Attribute, ast.Subscript, ast.Slice, ast.List, ast.Tuple,
    ast.Dict, ast.IfExp, ast.Load, ast.Store, ast.And, ast.Or, ast.Not,
    ast.USub, ast.UAdd, *BINOPS, *CMPOPS,
)


class Scope:
    """Variable environment: function locals layered over program globals."""

    def __init__(self, local=None, globals_=None):
        self.local = {} if local is None else local
        self.globals = {} if globals_ is None else globals_

    def lookup(self, name):
        if name in self.local:
            return self.local[name]
        if name in self.globals:
            return self.globals[name]
        raise EvalError(f"unbound variable {name!r}")

    def assign(self, name, value):
        if name in self.globals and name not in self.local:
            self.globals[name] = value
        else:
            self.local[name] = value


def check_expr(node):
    """Reject expression constructs outside the supported subset."""
    for sub in ast.walk(node):
        if not isinstance(sub, _EXPR_NODES):
            raise SubjectSyntaxError(
                f"unsupported expression construct {type(sub).__name__}",
                getattr(sub, "lineno", None), getattr(sub, "col_offset", None))
        if isinstance(sub, ast.Call) and sub.keywords:
            raise SubjectSyntaxError("keyword arguments are not supported",
                                     sub.lineno, sub.col_offset)


def names_read(node):
    return {n.id for n in ast.walk(node)
            if isinstance(n, ast.Name) and isinstance(n.ctx, ast.Load)}


def names_written(node):
    out = set()
    for n in ast.walk(node):
        if isinstance(n, ast.Name) and isinstance(n.ctx, ast.Store):
            out.add(n.id)
        elif isinstance(n, ast.AugAssign) and isinstance(n.target, ast.Name):
            out.add(n.target.id)
    return out


class Evaluator:
    """Evaluates the expression subset.

    ``call_hook(name, args)`` handles calls to non-builtin functions and
    ``observe(node, value)`` is invoked after every ``s[...]`` read.
    """

    def __init__(self, call_hook=None, observe=None):
        self.call_hook = call_hook
        self.observe = observe

    def eval(self, node, env):
        try:
            return self._eval(node, env)
        except EvalError:
            raise
        except ZeroDivisionError as exc:
            raise EvalError(str(exc)) from None
        except (TypeError, ValueError, IndexError, KeyError, AttributeError,
                RecursionError) as exc:
            raise EvalError(f"{type(exc).__name__}: {exc}") from None

    def _eval(self, node, env):
        ev = self._eval
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env.lookup(node.id)
        if isinstance(node, ast.BinOp):
            op = BINOPS.get(type(node.op))
            if op is None:
                raise EvalError(f"unsupported operator {type(node.op).__name__}")
            return op(ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, env)
            if isinstance(node.op, ast.Not):
                return not v
            if isinstance(node.op, ast.USub):
                return -v
            return +v
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                v = True
                for x in node.values:
                    v = ev(x, env)
                    if not v:
                        return v
                return v
            v = False
            for x in node.values:
                v = ev(x, env)
                if v:
                    return v
            return v
        if isinstance(node, ast.Compare):
            left = ev(node.left, env)
            for op, comp in zip(node.ops, node.comparators):
                right = ev(comp, env)
                if not CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.IfExp):
            return ev(node.body, env) if ev(node.test, env) else ev(node.orelse, env)
        if isinstance(node, ast.Subscript):
            base = ev(node.value, env)
            if isinstance(node.slice, ast.Slice):
                sl = node.slice
                lo = ev(sl.lower, env) if sl.lower else None
                hi = ev(sl.upper, env) if sl.upper else None
                st = ev(sl.step, env) if sl.step else None
                value = base[lo:hi:st]
            else:
                value = base[ev(node.slice, env)]
            if (self.observe is not None and isinstance(node.value, ast.Name)
                    and node.value.id == "s"):
                self.observe(node, value)
            return value
        if isinstance(node, ast.List):
            return [ev(x, env) for x in node.elts]
        if isinstance(node, ast.Tuple):
            return [ev(x, env) for x in node.elts]
        if isinstance(node, ast.Dict):
            return {ev(k, env): ev(v, env) for k, v in zip(node.keys, node.values)}
        if isinstance(node, ast.Call):
            return self._call(node, env)
        raise EvalError(f"unsupported expression {type(node).__name__}")

    def _call(self, node, env):
        args = [self._eval(a, env) for a in node.args]
        func = node.func
        if isinstance(func, ast.Attribute):
            target = self._eval(func.value, env)
            allowed = METHODS.get(type(target), ())
            if func.attr not in allowed:
                raise EvalError(
                    f"unsupported method {type(target).__name__}.{func.attr}")
            return getattr(target, func.attr)(*args)
        if not isinstance(func, ast.Name):
            raise EvalError("only named functions can be called")
        if func.id in BUILTINS:
            return BUILTINS[func.id](*args)
        if self.call_hook is None:
            raise EvalError(f"unknown function {func.id!r}")
        return self.call_hook(func.id, args, node)

    # statements (semantic-block subset)

    def assign_target(self, target, value, env):
        if isinstance(target, ast.Name):
            env.assign(target.id, value)
        elif isinstance(target, ast.Subscript):
            container = self.eval(target.value, env)
            try:
                container[self.eval(target.slice, env)] = value
            except (TypeError, IndexError) as exc:
                raise EvalError(f"{type(exc).__name__}: {exc}") from None
        else:
            raise EvalError("unsupported assignment target")

    def exec(self, stmt, env):
        if isinstance(stmt, ast.Assign):
            value = self.eval(stmt.value, env)
            for t in stmt.targets:
                self.assign_target(t, value, env)
        elif isinstance(stmt, ast.AugAssign):
            current = self.eval(stmt.target, env)
            op = BINOPS.get(type(stmt.op))
            if op is None:
                raise EvalError(f"unsupported operator {type(stmt.op).__name__}")
            try:
                value = op(current, self.eval(stmt.value, env))
            except ZeroDivisionError as exc:
                raise EvalError(str(exc)) from None
            except TypeError as exc:
                raise EvalError(f"TypeError: {exc}") from None
            self.assign_target(stmt.target, value, env)
        elif isinstance(stmt, ast.Expr):
            self.eval(stmt.value, env)
        elif isinstance(stmt, ast.If):
            body = stmt.body if self.eval(stmt.test, env) else stmt.orelse
            for s in body:
                self.exec(s, env)
        elif isinstance(stmt, ast.While):
            steps = 0
            while self.eval(stmt.test, env):
                steps += 1
                if steps > MAX_LOOP_STEPS:
                    raise EvalError("loop step limit exceeded")
                for s in stmt.body:
                    self.exec(s, env)
        elif isinstance(stmt, ast.Pass):
            pass
        else:
            raise EvalError(f"unsupported statement {type(stmt).__name__}")


def parse_statements(text):
    """Parse semantic-block source (``a = 1; b = a`` or indented lines)."""
    import textwrap

    src = textwrap.dedent(text.strip("\n")).strip()
    try:
        mod = ast.parse(src)
    except SyntaxError as exc:
        raise SubjectSyntaxError(f"invalid statement: {exc.msg}",
                                 exc.lineno, exc.offset) from None
    for stmt in mod.body:
        check_statement(stmt)
    return mod.body


SEM_STATEMENTS = (ast.Assign, ast.AugAssign, ast.Expr, ast.If, ast.While, ast.Pass)


def check_statement(stmt):
    if not isinstance(stmt, SEM_STATEMENTS):
        raise SubjectSyntaxError(
            f"unsupported statement {type(stmt).__name__} in semantic block",
            getattr(stmt, "lineno", None), getattr(stmt, "col_offset", None))
    for sub in ast.walk(stmt):
        if isinstance(sub, ast.stmt):
            if not isinstance(sub, SEM_STATEMENTS):
                raise SubjectSyntaxError(
                    f"unsupported statement {type(sub).__name__}",
                    getattr(sub, "lineno", None), None)
        elif isinstance(sub, ast.expr):
            check_expr(sub)


def stmt_key(stmt):
    """Formatting-independent identity of a statement."""
    return ast.dump(stmt, annotate_fields=False)


def render_statements(stmts):
    """Source text for a statement list; single line when possible."""
    if all(not isinstance(s, (ast.If, ast.While)) for s in stmts):
        return "; ".join(ast.unparse(s) for s in stmts)
    return "\n".join(ast.unparse(s) for s in stmts)
