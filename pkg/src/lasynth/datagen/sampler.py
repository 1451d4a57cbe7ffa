"""Grammar-directed random sampling of restricted C programs.

Constraints that the original post-processing enforced by resampling are
built into the sampler: constants stay in the value range, only + and -
appear, loop limits lie inside the list, and expressions have at most two
operations.
"""

from __future__ import annotations

import random
from dataclasses import replace
from enum import Enum

from ..lang.interp import RuntimeFault, interpret
from ..lang.nodes import (
    Assign, BinOp, Break, Compare, Continue, Decl, For, If, IncDec, Index,
    Num, Paren, Program, Var, walk_stmts,
)
from ..lang.printer import token_strings
from .config import GenConfig

RELOPS = ("==", "!=", "<", ">", "<=", ">=")
_RESAMPLE_LIMIT = 1000


class LoopMode(str, Enum):
    ANY = "any"
    REQUIRED = "required"
    FORBIDDEN = "forbidden"


def _breaks_out(stmts) -> bool:
    """Does a Break in ``stmts`` (outside nested loops) leave the enclosing loop?"""
    for st in stmts:
        if isinstance(st, Break):
            return True
        if isinstance(st, If) and (_breaks_out(st.then) or _breaks_out(st.orelse or ())):
            return True
    return False


class _Ctx:
    """Mutable sampling context for one program."""

    def __init__(self, rng, cfg, scalars):
        self.rng = rng
        self.cfg = cfg
        self.prof = cfg.profile
        self.scalars = list(scalars)   # visible scalar names
        self.loop_vars: list[str] = []
        # loop variables whose post-loop value depends on the input (loop had a break);
        # indexing with them could fault on some inputs only
        self.tainted: set[str] = set()

    def literal(self):
        return self.rng.randint(*self.cfg.value_range)

    def index_literal(self):
        return self.rng.randrange(self.cfg.list_len)

    def index(self):
        rng = self.rng
        # innermost loop variable is the favourite index
        if self.loop_vars and rng.random() < 0.6:
            return Index(Var(self.loop_vars[-1]))
        safe = [v for v in self.scalars if v not in self.tainted]
        if not safe:
            return Index(Num(self.index_literal()))
        return Index(Var(rng.choice(safe)))

    def atom(self):
        r = self.rng.random()
        if r < 0.4:
            return Num(self.literal())
        if r < 0.95:
            return self.index()
        return Var(self.rng.choice(self.scalars))

    def expr(self):
        prof = self.prof
        n_ops = self.rng.choices(range(len(prof.op_count_weights)), prof.op_count_weights)[0]
        e = self.atom()
        for _ in range(n_ops):
            e = BinOp(self.rng.choice("+-"), e, self.atom())
        if n_ops and self.rng.random() < prof.p_paren:
            e = Paren(e)
        return e

    def simple(self):
        rng = self.rng
        writable = [s for s in self.scalars if s not in self.loop_vars and s.startswith("l_")]
        if writable and rng.random() < self.prof.p_scalar_assign:
            var = rng.choice(writable)
            self.tainted.discard(var)
            return Assign(Var(var), Num(self.index_literal()))
        r = rng.random()
        if r < 0.7:
            return Assign(self.index(), self.expr())
        if r < 0.8:
            return IncDec(self.index(), "--", prefix=True)
        return IncDec(self.index(), rng.choice(("++", "--")))

    def cond(self):
        rng = self.rng
        if rng.random() < 0.5:
            return self.index()
        return Compare(rng.choice(RELOPS), self.index(), Num(self.literal()))

    def branch(self, depth):
        rng = self.rng
        if self.loop_vars and rng.random() < 0.45:
            return (Break(),) if rng.random() < 0.6 else (Continue(),)
        n = 1 if rng.random() < 0.75 else 2
        return self.block(n, depth, allow_for=False, allow_if=False)

    def if_stmt(self, depth):
        then = self.branch(depth + 1)
        orelse = self.branch(depth + 1) if self.rng.random() < self.prof.p_else else None
        return If(self.cond(), then, orelse)

    def for_stmt(self, depth):
        rng = self.rng
        L = self.cfg.list_len
        if not self.loop_vars and "p_0" in self.scalars and rng.random() < 0.8:
            var, declare = "p_0", False
        else:
            var = next(f"p_{k}" for k in range(1, 4) if f"p_{k}" not in self.loop_vars)
            declare = var not in self.scalars
        lo, hi = sorted((rng.randrange(L), rng.randrange(L)))
        if rng.random() < 0.5:
            init, cmp, bound, step = lo, "<=", hi, "++"
        else:
            init, cmp, bound, step = hi, ">=", lo, "--"
        self.loop_vars.append(var)
        self.tainted.discard(var)
        if declare:
            self.scalars.append(var)
        n = rng.randint(1, self.prof.max_body_stmts)
        body = self.block(n, depth + 1, allow_for=True, allow_if=True)
        self.loop_vars.pop()
        if declare:
            self.scalars.remove(var)
        elif _breaks_out(body):
            self.tainted.add(var)
        return For(var, init, cmp, bound, step, body, declare)

    def block(self, n, depth, allow_for=True, allow_if=True, force_for=False):
        prof = self.prof
        rng = self.rng
        compound_ok = depth < prof.max_depth
        can_for = allow_for and compound_ok and len(self.loop_vars) < prof.max_loop_nesting
        can_if = allow_if and compound_ok
        forced_at = rng.randrange(n) if force_for else -1
        stmts = []
        n_ifs = 0
        for i in range(n):
            r = rng.random()
            if i == forced_at or (can_for and r < prof.p_for):
                stmts.append(self.for_stmt(depth))
            elif can_if and n_ifs < prof.max_ifs_per_body and r < prof.p_for + prof.p_if:
                stmts.append(self.if_stmt(depth))
                n_ifs += 1
            else:
                stmts.append(self.simple())
        return tuple(stmts)


def _sample_once(rng: random.Random, cfg: GenConfig, loop: LoopMode) -> Program:
    prof = cfg.profile
    L = cfg.list_len
    decls = [Decl("p_0", rng.randrange(L))]
    for k in rng.sample(range(32), rng.randint(0, prof.max_extra_decls)):
        decls.append(Decl(f"l_{k}", rng.randrange(L)))
    ctx = _Ctx(rng, cfg, [d.name for d in decls])
    if loop is LoopMode.FORBIDDEN:
        ctx.prof = replace(prof, p_for=0.0)
    n = rng.randint(prof.min_stmts, prof.max_stmts)
    force = loop is LoopMode.REQUIRED and prof.max_depth > 1
    body = ctx.block(n, 1, force_for=force)
    return Program(tuple(decls), body)


def has_for(program: Program) -> bool:
    return any(isinstance(s, For) for s in walk_stmts(program.body))


def sample_candidate(rng: random.Random, cfg: GenConfig, loop: LoopMode = LoopMode.ANY) -> Program:
    """Draw one program satisfying the syntactic constraints (not yet IO-checked)."""
    for _ in range(_RESAMPLE_LIMIT):
        prog = _sample_once(rng, cfg, loop)
        if len(token_strings(prog)) <= cfg.max_tokens:
            return prog
    raise RuntimeError(f"could not fit a program into {cfg.max_tokens} tokens")


def random_input(rng: random.Random, cfg: GenConfig) -> list[int]:
    lo, hi = cfg.value_range
    return [rng.randint(lo, hi) for _ in range(cfg.list_len)]


def is_trivial(program: Program, rng: random.Random, cfg: GenConfig) -> bool:
    """Probe with random inputs; identity or constant behaviour means trivial."""
    identity = True
    outputs = set()
    inputs = set()
    for _ in range(cfg.triviality_probe_count):
        x = random_input(rng, cfg)
        y = interpret(program, x)
        identity &= y == x
        inputs.add(tuple(x))
        outputs.add(tuple(y))
    constant = len(outputs) == 1 and len(inputs) > 1
    return identity or constant


def is_degenerate(program: Program, rng: random.Random, cfg: GenConfig) -> bool:
    """Stricter acceptance filter than :func:`is_trivial`.

    Rejects when fewer than half of the probes change their input, or when
    one output accounts for more than half of the probes. Identity and
    constant programs always fail; so do programs that only act on rare
    inputs, whose IO pairs would say little about them.
    """
    n = cfg.triviality_probe_count
    changed = 0
    seen = {}
    for _ in range(n):
        x = random_input(rng, cfg)
        y = interpret(program, x)
        changed += y != x
        seen[tuple(y)] = seen.get(tuple(y), 0) + 1
    return 2 * changed < n or 2 * max(seen.values()) > n


def sample_io(program: Program, rng: random.Random, cfg: GenConfig):
    """Sample spec + held-out pairs; None if any value leaves the range or execution faults."""
    lo, hi = cfg.value_range
    pairs = []
    for _ in range(cfg.k_spec + cfg.k_test):
        x = random_input(rng, cfg)
        try:
            y = interpret(program, x)
        except RuntimeFault:
            return None
        if any(v < lo or v > hi for v in y):
            return None
        pairs.append((x, y))
    return pairs[: cfg.k_spec], pairs[cfg.k_spec:]
