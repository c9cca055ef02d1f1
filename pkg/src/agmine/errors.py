"""Exception hierarchy shared by all pipeline stages."""


class AgMineError(Exception):
    """Base class for every error raised by this package."""


class GrammarSyntaxError(AgMineError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class GrammarError(AgMineError):
    """Semantically invalid grammar (undefined nonterminal, duplicate rule, ...)."""


class DeriveError(AgMineError):
    def __init__(self, position, expected):
        self.position = position
        self.expected = sorted(expected)
        exp = ", ".join(repr(e) for e in self.expected) or "end of input"
        super().__init__(f"parse failure at position {position}: expected {exp}")


class SubjectSyntaxError(AgMineError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class AmbiguousCursorError(SubjectSyntaxError):
    pass


class EvalError(AgMineError):
    """Runtime failure while evaluating an expression or statement."""


class MalformedTraceError(AgMineError):
    pass


class MappingError(AgMineError):
    """Parse tree and derivation tree cannot be aligned."""


class TransferError(AgMineError):
    """Semantic statements cannot be placed into the grammar."""


class MergeConflict(AgMineError):
    def __init__(self, message, key=None, variants=(), witnesses=()):
        self.key = key
        self.variants = list(variants)
        self.witnesses = list(witnesses)
        super().__init__(message)


class UnderivableInputError(AgMineError):
    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"input #{index} is not derivable: {cause}")
