"""Mine attributed grammars from recursive-descent parser programs.

Given a context-free grammar, a parser program written in a small Python
subset and a set of inputs, the pipeline traces the program, aligns its parse
tree with the grammar's derivation tree and moves the program's semantic
statements into ``sem ... endsem`` blocks of the grammar.
"""
__version__ = "0.1.0"

from .agruntime import canonical, eval_sem_block, run_ag
from .derivation import derive, render_tree
from .fuzzer import GenerationBudget, coverage_of, generate_inputs
from .grammar import (Grammar, PositionId, check_ag, enumerate_positions, parse_grammar,
                      serialize_ag)
from .mapping import map_trees
from .parsetree import build_parse_tree
from .pipeline import evaluate, mine
from .subject import execute, parse_program
from .transfer import merge, transfer

__all__ = [
    "Grammar", "PositionId", "GenerationBudget", "build_parse_tree", "canonical",
    "check_ag", "coverage_of", "derive", "enumerate_positions", "eval_sem_block",
    "evaluate", "execute", "generate_inputs", "map_trees", "merge", "mine",
    "parse_grammar", "parse_program", "render_tree", "run_ag", "serialize_ag", "transfer",
]
