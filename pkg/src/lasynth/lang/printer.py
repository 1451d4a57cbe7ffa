"""Canonical source formatting and direct AST -> token conversion."""

from __future__ import annotations

from .nodes import (
    Assign, BinOp, Break, Compare, Continue, For, If, IncDec, Index, Num,
    Paren, Program, Var,
)
from .vocab import HEADER_TEXT, VOCAB

INDENT = "    "


def expr_str(e) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"a[{expr_str(e.index)}]"
    if isinstance(e, BinOp):
        return f"{expr_str(e.left)} {e.op} {expr_str(e.right)}"
    if isinstance(e, Paren):
        return f"({expr_str(e.expr)})"
    if isinstance(e, Compare):
        return f"{expr_str(e.left)} {e.op} {expr_str(e.right)}"
    raise TypeError(f"not an expression: {e!r}")


def _simple_str(s) -> str:
    if isinstance(s, Assign):
        return f"{expr_str(s.target)} = {expr_str(s.expr)};"
    if isinstance(s, IncDec):
        t = expr_str(s.target)
        return f"{s.op}{t};" if s.prefix else f"{t}{s.op};"
    if isinstance(s, Break):
        return "break;"
    if isinstance(s, Continue):
        return "continue;"
    raise TypeError(f"not a simple statement: {s!r}")


def _braced_body(stmts) -> bool:
    # single simple statements under if/else print without braces
    return len(stmts) != 1 or isinstance(stmts[0], (For, If))


def _emit(stmts, depth, lines):
    pad = INDENT * depth
    for s in stmts:
        if isinstance(s, For):
            decl = "int " if s.declare else ""
            lines.append(
                f"{pad}for ({decl}{s.var} = {s.init}; {s.var} {s.cmp} {s.bound}; {s.var}{s.step})"
            )
            lines.append(pad + "{")
            _emit(s.body, depth + 1, lines)
            lines.append(pad + "}")
        elif isinstance(s, If):
            lines.append(f"{pad}if ({expr_str(s.cond)})")
            _emit_branch(s.then, depth, lines)
            if s.orelse is not None:
                lines.append(pad + "else")
                _emit_branch(s.orelse, depth, lines)
        else:
            lines.append(pad + _simple_str(s))


def _emit_branch(stmts, depth, lines):
    pad = INDENT * depth
    if _braced_body(stmts):
        lines.append(pad + "{")
        _emit(stmts, depth + 1, lines)
        lines.append(pad + "}")
    else:
        _emit(stmts, depth + 1, lines)


def pretty_print(program: Program) -> str:
    lines = [HEADER_TEXT, "{"]
    for d in program.decls:
        lines.append(f"{INDENT}int {d.name} = {d.value};")
    _emit(program.body, 1, lines)
    lines.append(INDENT + "return a;")
    lines.append("}")
    return "\n".join(lines)


# -- direct token emission (same stream as lex(pretty_print(p))) --

def _expr_toks(e, out):
    if isinstance(e, Num):
        out.append(str(e.value))
    elif isinstance(e, Var):
        out.append(e.name)
    elif isinstance(e, Index):
        out.extend(("a", "["))
        _expr_toks(e.index, out)
        out.append("]")
    elif isinstance(e, BinOp):
        _expr_toks(e.left, out)
        out.append(e.op)
        _expr_toks(e.right, out)
    elif isinstance(e, Paren):
        out.append("(")
        _expr_toks(e.expr, out)
        out.append(")")
    elif isinstance(e, Compare):
        _expr_toks(e.left, out)
        out.append(e.op)
        _expr_toks(e.right, out)
    else:
        raise TypeError(f"not an expression: {e!r}")


def _stmt_toks(stmts, out):
    for s in stmts:
        if isinstance(s, For):
            out.extend(("for", "("))
            if s.declare:
                out.append("int")
            out.extend((s.var, "=", str(s.init), ";", s.var, s.cmp, str(s.bound), ";",
                        s.var, s.step, ")", "{"))
            _stmt_toks(s.body, out)
            out.append("}")
        elif isinstance(s, If):
            out.extend(("if", "("))
            _expr_toks(s.cond, out)
            out.append(")")
            _branch_toks(s.then, out)
            if s.orelse is not None:
                out.append("else")
                _branch_toks(s.orelse, out)
        elif isinstance(s, Assign):
            _expr_toks(s.target, out)
            out.append("=")
            _expr_toks(s.expr, out)
            out.append(";")
        elif isinstance(s, IncDec):
            if s.prefix:
                out.append(s.op)
                _expr_toks(s.target, out)
            else:
                _expr_toks(s.target, out)
                out.append(s.op)
            out.append(";")
        elif isinstance(s, Break):
            out.extend(("break", ";"))
        elif isinstance(s, Continue):
            out.extend(("continue", ";"))
        else:
            raise TypeError(f"not a statement: {s!r}")


def _branch_toks(stmts, out):
    if _braced_body(stmts):
        out.append("{")
        _stmt_toks(stmts, out)
        out.append("}")
    else:
        _stmt_toks(stmts, out)


def token_strings(program: Program) -> list[str]:
    out = ["{"]
    for d in program.decls:
        out.extend(("int", d.name, "=", str(d.value), ";"))
    _stmt_toks(program.body, out)
    out.extend(("return", "a", ";", "}"))
    return out


def to_token_ids(program: Program) -> list[int]:
    return VOCAB.encode(token_strings(program))
