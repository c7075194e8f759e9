"""RandML: syntax, parser, and small-step distribution semantics."""
from .parser import ParseError, UnboundVariableError, parse_expr, parse_program
from .pretty import pretty, pretty_config
from .semantics import (
    EMPTY_HEAP,
    Config,
    Redex,
    Stuck,
    Value,
    canonicalize,
    decompose,
    fill,
    head_of,
    head_step,
    heap_from_dict,
    step,
    stuck_reason,
    substitute,
    successors,
)
from .syntax import *  # noqa: F401,F403

__all__ = [
    "ParseError", "UnboundVariableError", "parse_expr", "parse_program", "pretty",
    "pretty_config", "EMPTY_HEAP", "Config", "Redex", "Stuck", "Value", "canonicalize",
    "decompose", "fill", "head_of", "head_step", "heap_from_dict", "step", "stuck_reason",
    "substitute", "successors",
]
