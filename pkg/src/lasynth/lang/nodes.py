"""Immutable syntax tree for restricted C list programs.

Every node is a frozen dataclass so trees compare structurally and can be
shared between threads. Sequences are tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    """``a[index]``; the index is a scalar variable or a literal."""

    index: Union[Var, Num]


@dataclass(frozen=True)
class BinOp:
    op: str  # "+" or "-"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Paren:
    expr: "Expr"


Expr = Union[Num, Var, Index, BinOp, Paren]
Target = Union[Var, Index]


@dataclass(frozen=True)
class Compare:
    op: str  # one of == != < > <= >=
    left: Expr
    right: Expr


Cond = Union[Expr, Compare]


@dataclass(frozen=True)
class Decl:
    name: str
    value: int


@dataclass(frozen=True)
class Assign:
    target: Target
    expr: Expr


@dataclass(frozen=True)
class IncDec:
    target: Target
    op: str  # "++" or "--"
    prefix: bool = False


@dataclass(frozen=True)
class For:
    var: str
    init: int
    cmp: str  # "<=" or ">="
    bound: int
    step: str  # "++" or "--"
    body: tuple
    declare: bool = False


@dataclass(frozen=True)
class If:
    cond: Cond
    then: tuple
    orelse: tuple | None = None


@dataclass(frozen=True)
class Break:
    pass


@dataclass(frozen=True)
class Continue:
    pass


Stmt = Union[Assign, IncDec, For, If, Break, Continue]


@dataclass(frozen=True)
class Program:
    decls: tuple = ()
    body: tuple = ()


class ControlFlowClass(str, Enum):
    SEQ_ONLY = "SeqOnly"
    FOR_ONLY = "ForOnly"
    MIXTURE = "Mixture"


def walk_stmts(stmts):
    for s in stmts:
        yield s
        if isinstance(s, For):
            yield from walk_stmts(s.body)
        elif isinstance(s, If):
            yield from walk_stmts(s.then)
            if s.orelse:
                yield from walk_stmts(s.orelse)


def classify_control_flow(program: Program) -> ControlFlowClass:
    has_for = has_if = False
    for s in walk_stmts(program.body):
        has_for |= isinstance(s, For)
        has_if |= isinstance(s, If)
    if has_if:
        return ControlFlowClass.MIXTURE
    if has_for:
        return ControlFlowClass.FOR_ONLY
    return ControlFlowClass.SEQ_ONLY


def count_ops(expr) -> int:
    if isinstance(expr, BinOp):
        return 1 + count_ops(expr.left) + count_ops(expr.right)
    if isinstance(expr, Paren):
        return count_ops(expr.expr)
    return 0
