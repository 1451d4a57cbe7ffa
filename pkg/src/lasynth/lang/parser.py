"""Lexer and recursive-descent parser for the restricted C dialect."""

from __future__ import annotations

import re

from .nodes import (
    Assign, BinOp, Break, Compare, Continue, Decl, For, If, IncDec, Index,
    Num, Paren, Program, Var, count_ops,
)
from .vocab import BOS, EOS, HEADER, PAD, SCALAR_NAMES, VOCAB

DEFAULT_LIST_LEN = 5
DEFAULT_MAX_TOKENS = 256
MAX_EXPR_OPS = 2

RELOPS = ("==", "!=", "<", ">", "<=", ">=")
_SCALARS = frozenset(SCALAR_NAMES)
_LITERALS = frozenset(str(v) for v in range(-4, 5))


class LangError(Exception):
    pass


class UnknownLexeme(LangError):
    def __init__(self, position, lexeme):
        super().__init__(f"unknown lexeme {lexeme!r} at offset {position}")
        self.position = position
        self.lexeme = lexeme


class ParseError(LangError):
    def __init__(self, position, expected, found=None):
        expected = tuple(sorted(set(expected)))
        super().__init__(f"at token {position}: expected one of {expected}, found {found!r}")
        self.position = position
        self.expected = expected
        self.found = found


class InvariantViolation(LangError):
    pass


_LEX_RE = re.compile(
    r"\s*(?:"
    r"(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<num>\d+)"
    r"|(?P<op>\+\+|--|==|!=|<=|>=|[-+*=<>(){}\[\];,])"
    r")"
)
_OPERAND_END = re.compile(r"[A-Za-z0-9_\])]")


def lex(source: str) -> list[str]:
    """Split source text into lexeme strings, dropping the fixed header."""
    out: list[str] = []
    pos = 0
    n = len(source)
    while True:
        while pos < n and source[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _LEX_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise UnknownLexeme(pos, source[pos])
        start = m.start(m.lastgroup)
        text = m.group(m.lastgroup)
        # "-" glued to a digit is a negative literal unless it follows an operand.
        if (
            text == "-"
            and m.end() < n
            and source[m.end()].isdigit()
            and not (out and _OPERAND_END.match(out[-1][-1]))
        ):
            d = re.match(r"\d+", source[m.end():])
            text = "-" + d.group(0)
            pos = m.end() + d.end()
        else:
            pos = m.end()
        if text not in VOCAB and not (text == "func_1" and len(out) < len(HEADER)):
            raise UnknownLexeme(start, text)
        out.append(text)
    if tuple(out[: len(HEADER)]) == HEADER:
        out = out[len(HEADER):]
    elif "func_1" in out:
        raise UnknownLexeme(source.index("func_1"), "func_1")
    return out


def tokenize(source: str) -> list[int]:
    return VOCAB.encode(lex(source))


def detokenize(ids) -> str:
    return " ".join(VOCAB.decode(ids))


class _Parser:
    def __init__(self, toks, list_len):
        self.toks = toks
        self.i = 0
        self.list_len = list_len
        self.loop_depth = 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def fail(self, expected):
        raise ParseError(self.i, expected, self.peek())

    def expect(self, *options):
        tok = self.peek()
        if tok not in options:
            self.fail(options)
        self.i += 1
        return tok

    def scalar(self):
        tok = self.peek()
        if tok not in _SCALARS:
            self.fail(["<scalar>"])
        self.i += 1
        return tok

    def literal(self):
        tok = self.peek()
        if tok not in _LITERALS:
            self.fail(["<literal>"])
        self.i += 1
        return int(tok)

    def program(self):
        self.expect("{")
        decls = []
        while self.peek() == "int":
            self.i += 1
            name = self.scalar()
            self.expect("=")
            value = self.literal()
            self.expect(";")
            decls.append(Decl(name, value))
        body = []
        while self.peek() != "return":
            body.append(self.stmt())
        self.expect("return")
        self.expect("a")
        self.expect(";")
        self.expect("}")
        if self.i != len(self.toks):
            self.fail(["<end>"])
        return Program(tuple(decls), tuple(body))

    def block(self):
        if self.peek() == "{":
            self.i += 1
            stmts = []
            while self.peek() != "}":
                if self.peek() is None:
                    self.fail(["}"])
                stmts.append(self.stmt())
            self.i += 1
            return tuple(stmts)
        return (self.stmt(),)

    def stmt(self):
        tok = self.peek()
        if tok == "for":
            return self.for_stmt()
        if tok == "if":
            return self.if_stmt()
        if tok in ("break", "continue"):
            if self.loop_depth == 0:
                raise ParseError(self.i, ["<statement>"], tok)
            self.i += 1
            self.expect(";")
            return Break() if tok == "break" else Continue()
        if tok in ("++", "--"):
            self.i += 1
            target = self.target()
            self.expect(";")
            return IncDec(target, tok, prefix=True)
        if tok == "a" or tok in _SCALARS:
            target = self.target()
            op = self.expect("=", "++", "--")
            if op == "=":
                expr = self.checked_expr()
                self.expect(";")
                return Assign(target, expr)
            self.expect(";")
            return IncDec(target, op)
        self.fail(["for", "if", "break", "continue", "++", "--", "a", "<scalar>"])

    def for_stmt(self):
        self.expect("for")
        self.expect("(")
        declare = self.peek() == "int"
        if declare:
            self.i += 1
        var = self.scalar()
        self.expect("=")
        init = self.literal()
        self.expect(";")
        self.expect(var)
        cmp = self.expect("<=", ">=")
        bound = self.literal()
        self.expect(";")
        self.expect(var)
        step = self.expect("++", "--")
        self.expect(")")
        for v in (init, bound):
            if not 0 <= v < self.list_len:
                raise InvariantViolation(f"loop limit {v} outside [0, {self.list_len - 1}]")
        self.loop_depth += 1
        body = self.block()
        self.loop_depth -= 1
        return For(var, init, cmp, bound, step, body, declare)

    def if_stmt(self):
        self.expect("if")
        self.expect("(")
        left = self.checked_expr()
        if self.peek() in RELOPS:
            op = self.peek()
            self.i += 1
            cond = Compare(op, left, self.checked_expr())
        else:
            cond = left
        self.expect(")")
        then = self.block()
        orelse = None
        if self.peek() == "else":
            self.i += 1
            orelse = self.block()
        return If(cond, then, orelse)

    def target(self):
        if self.peek() == "a":
            return self.index()
        return Var(self.scalar())

    def index(self):
        self.expect("a")
        self.expect("[")
        tok = self.peek()
        if tok in _SCALARS:
            idx = Var(tok)
        elif tok in _LITERALS:
            idx = Num(int(tok))
        else:
            self.fail(["<scalar>", "<literal>"])
        self.i += 1
        self.expect("]")
        return Index(idx)

    def checked_expr(self):
        e = self.expr()
        if count_ops(e) > MAX_EXPR_OPS:
            raise InvariantViolation(f"expression has {count_ops(e)} operations (max {MAX_EXPR_OPS})")
        return e

    def expr(self):
        left = self.term()
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        tok = self.peek()
        if tok in _LITERALS:
            self.i += 1
            return Num(int(tok))
        if tok in _SCALARS:
            self.i += 1
            return Var(tok)
        if tok == "a":
            return self.index()
        if tok == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return Paren(e)
        self.fail(["<literal>", "<scalar>", "a", "("])


def parse(tokens, list_len: int = DEFAULT_LIST_LEN, max_tokens: int = DEFAULT_MAX_TOKENS) -> Program:
    """Parse token ids (or token strings) into a :class:`Program`.

    BOS/EOS/PAD markers are ignored so raw decoder output can be passed in.
    """
    toks = [VOCAB.token(t) if isinstance(t, int) else t for t in tokens]
    toks = [t for t in toks if t not in (BOS, EOS, PAD)]
    if len(toks) > max_tokens:
        raise InvariantViolation(f"program has {len(toks)} tokens (max {max_tokens})")
    return _Parser(toks, list_len).program()
