"""Mining and evaluation over input sets: the workflow behind the CLI."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .agruntime import AGEvalError, canonical, canonical_error, run_ag
from .derivation import derive
from .errors import (DeriveError, EvalError, MalformedTraceError, MappingError,
                     MergeConflict, TransferError)
from .fuzzer import coverage_of
from .mapping import map_trees
from .parsetree import build_parse_tree
from .subject import execute
from .transfer import merge, transfer

OK = "ok"
UNDERIVABLE = "underivable"
TRACE_EXCEPTION = "trace-exception"
MAPPING_FAILED = "mapping-failed"
MERGE_CONFLICT = "merge-conflict"


@dataclass
class InputRecord:
    text: str
    status: str
    message: str = ""


@dataclass
class MiningReport:
    records: list = field(default_factory=list)
    ag: object = None
    warnings: list = field(default_factory=list)
    failure: str | None = None
    coverage: object = None
    conflict: MergeConflict | None = None

    @property
    def counts(self):
        return Counter(r.status for r in self.records)

    @property
    def mining_failed(self):
        return any(r.status in (MAPPING_FAILED, MERGE_CONFLICT) for r in self.records)


def annotate(g, prog, text):
    """Run one input through trace, mapping and transfer."""
    out = execute(prog, text)
    if not out.ok:
        return InputRecord(text, TRACE_EXCEPTION, out.message), None
    tree = derive(g, text)
    pt = build_parse_tree(out.trace)
    m = map_trees(pt, tree)
    return InputRecord(text, OK), transfer(m, pt, tree, g, prog, text)


def mine(g, prog, inputs, simplify=True):
    """Mine an attributed grammar; see :class:`MiningReport` for the outcome."""
    report = MiningReport()
    anns = []
    for text in inputs:
        try:
            rec, ann = annotate(g, prog, text)
        except DeriveError as exc:
            rec, ann = InputRecord(text, UNDERIVABLE, str(exc)), None
        except (MappingError, TransferError, MalformedTraceError) as exc:
            rec, ann = InputRecord(text, MAPPING_FAILED, str(exc)), None
        except MergeConflict as exc:
            rec, ann = InputRecord(text, MERGE_CONFLICT, str(exc)), None
        report.records.append(rec)
        if ann is not None:
            anns.append(ann)
    accepted = [r.text for r in report.records if r.status == OK]
    report.coverage = coverage_of(g, accepted)
    if report.mining_failed:
        bad = next(r for r in report.records if r.status in (MAPPING_FAILED, MERGE_CONFLICT))
        report.failure = f"{bad.status} on {bad.text!r}: {bad.message}"
        return report
    if not anns:
        report.failure = "no input was accepted by both grammar and program"
        return report
    try:
        result = merge(anns, g, simplify=simplify)
    except MergeConflict as exc:
        report.conflict = exc
        report.failure = f"merge conflict: {exc}"
        for r in report.records:
            if r.text in exc.witnesses:
                r.status, r.message = MERGE_CONFLICT, str(exc)
        return report
    report.ag = result.grammar
    report.warnings = result.warnings
    return report


# ---------------------------------------------------------------------------
# evaluation

def program_output(prog, text):
    out = execute(prog, text)
    if out.ok:
        return True, canonical(out.result)
    return False, canonical_error(out.message)


def ag_output(ag, text):
    try:
        return True, canonical(run_ag(ag, text))
    except AGEvalError as exc:
        return False, canonical_error(exc.detail)
    except (DeriveError, EvalError) as exc:
        return False, canonical_error(str(exc))


@dataclass
class EvalRecord:
    text: str
    expected: str
    actual: str
    match: bool


@dataclass
class EvalReport:
    program: str
    records: list = field(default_factory=list)

    @property
    def total(self):
        return len(self.records)

    @property
    def matching(self):
        return sum(r.match for r in self.records)

    @property
    def accuracy(self):
        return self.matching / self.total if self.records else 1.0

    @property
    def mismatches(self):
        return [r for r in self.records if not r.match]


def evaluate(ag, prog, inputs, name=""):
    """Compare program and AG outputs; a rejection on either side is a mismatch."""
    report = EvalReport(name)
    for text in inputs:
        ok_p, expected = program_output(prog, text)
        ok_a, actual = ag_output(ag, text)
        report.records.append(EvalRecord(text, expected, actual,
                                         ok_p and ok_a and expected == actual))
    return report
