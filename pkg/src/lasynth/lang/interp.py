"""Deterministic tree-walking interpreter.

Integers are unbounded Python ints; range checks belong to data generation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .nodes import (
    Assign, BinOp, Break, Compare, Continue, For, If, IncDec, Index, Num,
    Paren, Program, Var,
)

DEFAULT_BUDGET = 10_000


class RuntimeFault(Exception):
    pass


class BudgetExceeded(RuntimeFault):
    pass


class UnboundVariable(RuntimeFault):
    pass


class IndexOutOfRange(RuntimeFault):
    pass


class Signal(Enum):
    NORMAL = 0
    BREAK = 1
    CONTINUE = 2


@dataclass
class MachineState:
    a: list
    env: dict = field(default_factory=dict)
    steps: int = 0
    budget: int = DEFAULT_BUDGET

    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise BudgetExceeded(f"step budget {self.budget} exhausted")


def _lookup(state, name):
    try:
        return state.env[name]
    except KeyError:
        raise UnboundVariable(name) from None


def _slot(state, node: Index) -> int:
    i = node.index.value if isinstance(node.index, Num) else _lookup(state, node.index.name)
    if not 0 <= i < len(state.a):
        raise IndexOutOfRange(f"a[{i}] with list length {len(state.a)}")
    return i


def evaluate(e, state: MachineState) -> int:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return _lookup(state, e.name)
    if isinstance(e, Index):
        return state.a[_slot(state, e)]
    if isinstance(e, BinOp):
        lhs = evaluate(e.left, state)
        rhs = evaluate(e.right, state)
        return lhs + rhs if e.op == "+" else lhs - rhs
    if isinstance(e, Paren):
        return evaluate(e.expr, state)
    if isinstance(e, Compare):
        lhs = evaluate(e.left, state)
        rhs = evaluate(e.right, state)
        op = e.op
        if op == "==":
            return int(lhs == rhs)
        if op == "!=":
            return int(lhs != rhs)
        if op == "<":
            return int(lhs < rhs)
        if op == ">":
            return int(lhs > rhs)
        if op == "<=":
            return int(lhs <= rhs)
        return int(lhs >= rhs)
    raise TypeError(f"not an expression: {e!r}")


def _store(target, value, state):
    if isinstance(target, Index):
        state.a[_slot(state, target)] = value
    else:
        _lookup(state, target.name)
        state.env[target.name] = value


def _loop_test(s: For, state) -> bool:
    v = state.env[s.var]
    return v <= s.bound if s.cmp == "<=" else v >= s.bound


def execute(stmts, state: MachineState) -> Signal:
    for s in stmts:
        state.tick()
        if isinstance(s, Assign):
            _store(s.target, evaluate(s.expr, state), state)
        elif isinstance(s, IncDec):
            delta = 1 if s.op == "++" else -1
            _store(s.target, evaluate(s.target, state) + delta, state)
        elif isinstance(s, For):
            shadowed = state.env.get(s.var, _MISSING)
            if not s.declare:
                _lookup(state, s.var)
            state.env[s.var] = s.init
            delta = 1 if s.step == "++" else -1
            while _loop_test(s, state):
                state.tick()
                if execute(s.body, state) is Signal.BREAK:
                    break
                state.env[s.var] += delta
            if s.declare:
                # for-init declarations are scoped to the loop
                if shadowed is _MISSING:
                    del state.env[s.var]
                else:
                    state.env[s.var] = shadowed
        elif isinstance(s, If):
            if evaluate(s.cond, state) != 0:
                sig = execute(s.then, state)
            elif s.orelse is not None:
                sig = execute(s.orelse, state)
            else:
                sig = Signal.NORMAL
            if sig is not Signal.NORMAL:
                return sig
        elif isinstance(s, Break):
            return Signal.BREAK
        elif isinstance(s, Continue):
            return Signal.CONTINUE
        else:
            raise TypeError(f"not a statement: {s!r}")
    return Signal.NORMAL


_MISSING = object()


def interpret(program: Program, inputs, budget: int = DEFAULT_BUDGET) -> list[int]:
    """Run ``program`` on a copy of ``inputs`` and return the final list."""
    state = MachineState(a=list(inputs), budget=budget)
    for d in program.decls:
        state.env[d.name] = d.value
    execute(program.body, state)
    return state.a
