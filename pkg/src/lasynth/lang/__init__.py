"""Restricted C dialect: vocabulary, syntax tree, parser, printer, interpreter."""

from .interp import (
    DEFAULT_BUDGET, BudgetExceeded, IndexOutOfRange, RuntimeFault, UnboundVariable,
    interpret,
)
from .nodes import ControlFlowClass, Program, classify_control_flow
from .parser import (
    InvariantViolation, LangError, ParseError, UnknownLexeme, detokenize, lex, parse,
    tokenize,
)
from .printer import pretty_print, to_token_ids, token_strings
from .vocab import VOCAB, Vocab

__all__ = [
    "DEFAULT_BUDGET", "BudgetExceeded", "IndexOutOfRange", "RuntimeFault",
    "UnboundVariable", "interpret", "ControlFlowClass", "Program",
    "classify_control_flow", "InvariantViolation", "LangError", "ParseError",
    "UnknownLexeme", "detokenize", "lex", "parse", "tokenize", "pretty_print",
    "to_token_ids", "token_strings", "VOCAB", "Vocab",
]
