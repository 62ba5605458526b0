"""Tokenizer and recursive-descent parser for phase expressions.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-' factor | base ('^' INT)?
    base   := rational | VARIABLE | '(' expr ')'
    rational := NUMBER ('/' NUMBER)?

NUMBER is an integer or decimal literal (``12``, ``0.5``, ``.25``); decimals
are converted exactly, so ``0.1`` is 1/10. VARIABLE is ``x<i>`` or ``y<i>``
with ``1 <= i <= d``; ``t<i>`` is accepted only with ``allow_tau=True``
(the form used when reading back serialized determinants). Implicit
multiplication such as ``2x1`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .polycore import Polynomial, Role, VarId

__all__ = ["Token", "ParseError", "tokenize", "parse_phase", "parse_polynomial"]

_PUNCT = {
    "+": "plus",
    "-": "minus",
    "*": "star",
    "^": "caret",
    "(": "lparen",
    ")": "rparen",
    "/": "slash",
}
_NUMBER = re.compile(r"\d+(?:\.\d*)?|\.\d+")
_WORD = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_VARIABLE = re.compile(r"([xyt])([0-9]+)")

# powers beyond this degree are certainly typos and would blow up term counts
MAX_EXPONENT = 64
MAX_NESTING = 100


@dataclass(frozen=True)
class Token:
    kind: str
    span: tuple[int, int]
    text: str


@dataclass
class ParseError(Exception):
    """Syntax or validation error at ``span`` (offsets into the source)."""

    span: tuple[int, int]
    message: str
    expected: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        super().__init__(self.message)

    def __str__(self) -> str:
        msg = f"{self.message} at {self.span[0]}"
        if self.expected:
            msg += f" (expected {', '.join(sorted(self.expected))})"
        return msg


def tokenize(src: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        ch = src[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], (pos, pos + 1), ch))
            pos += 1
            continue
        m = _NUMBER.match(src, pos)
        if m:
            end = m.end()
            if end < n and (src[end].isalpha() or src[end] == "_"):
                raise ParseError((end, end + 1), "implicit multiplication is not allowed; use '*'",
                                 frozenset({"'*'"}))
            tokens.append(Token("number", (pos, end), m.group()))
            pos = end
            continue
        m = _WORD.match(src, pos)
        if m:
            tokens.append(Token("variable", (pos, m.end()), m.group()))
            pos = m.end()
            continue
        raise ParseError((pos, pos + 1), f"illegal character {ch!r}")
    return tokens


def _number_value(tok: Token) -> Fraction:
    return Fraction(tok.text if not tok.text.endswith(".") else tok.text[:-1])


class _Parser:
    def __init__(self, src: str, d: int, allow_tau: bool):
        self.src = src
        self.d = d
        self.allow_tau = allow_tau
        self.tokens = tokenize(src)
        self.i = 0
        self.depth = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def eof_span(self) -> tuple[int, int]:
        n = len(self.src)
        return (n, n)

    def fail(self, message: str, expected: set[str]):
        tok = self.peek()
        span = tok.span if tok else self.eof_span()
        found = f"{tok.text!r}" if tok else "end of input"
        raise ParseError(span, f"{message}, found {found}", frozenset(expected))

    def expect(self, kind: str, label: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            self.fail(f"expected {label}", {label})
        self.i += 1
        return tok

    def parse(self) -> Polynomial:
        if not self.tokens:
            raise ParseError(self.eof_span(), "empty expression", frozenset({"expression"}))
        p = self.expr()
        if self.peek() is not None:
            self.fail("unexpected token", {"'+'", "'-'", "'*'", "end of input"})
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while (tok := self.peek()) is not None and tok.kind in ("plus", "minus"):
            self.i += 1
            q = self.term()
            p = p + q if tok.kind == "plus" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.factor()
        while (tok := self.peek()) is not None and tok.kind == "star":
            self.i += 1
            p = p * self.factor()
        return p

    def factor(self) -> Polynomial:
        tok = self.peek()
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ParseError(tok.span if tok else self.eof_span(), "expression nested too deeply")
        try:
            if tok is not None and tok.kind == "minus":
                self.i += 1
                return -self.factor()
            return self.power()
        finally:
            self.depth -= 1

    def power(self) -> Polynomial:
        base = self.base()
        tok = self.peek()
        if tok is not None and tok.kind == "caret":
            self.i += 1
            exp_tok = self.peek()
            if exp_tok is None or exp_tok.kind != "number" or not exp_tok.text.isdigit():
                span = exp_tok.span if exp_tok else self.eof_span()
                raise ParseError(span, "exponent must be a nonnegative integer",
                                 frozenset({"integer"}))
            n = int(exp_tok.text)
            if n > MAX_EXPONENT:
                raise ParseError(exp_tok.span, f"exponent {n} exceeds limit {MAX_EXPONENT}",
                                 frozenset({"integer"}))
            self.i += 1
            if not base.is_zero() and base.degree * n > MAX_EXPONENT:
                raise ParseError(exp_tok.span, f"power has degree above {MAX_EXPONENT}",
                                 frozenset({"integer"}))
            return base ** n
        return base

    def base(self) -> Polynomial:
        tok = self.peek()
        if tok is None:
            self.fail("expected a number, variable or '('", {"number", "variable", "'('"})
        if tok.kind == "number":
            self.i += 1
            value = _number_value(tok)
            nxt = self.peek()
            if nxt is not None and nxt.kind == "slash":
                self.i += 1
                den_tok = self.peek()
                if den_tok is None or den_tok.kind != "number":
                    self.fail("expected a denominator", {"number"})
                self.i += 1
                den = _number_value(den_tok)
                if den == 0:
                    raise ParseError((tok.span[0], den_tok.span[1]), "zero denominator")
                value = value / den
            return Polynomial.constant(self.d, value)
        if tok.kind == "variable":
            self.i += 1
            return Polynomial.var(self.d, self.variable(tok))
        if tok.kind == "lparen":
            self.i += 1
            p = self.expr()
            self.expect("rparen", "')'")
            return p
        self.fail("expected a number, variable or '('", {"number", "variable", "'('"})

    def variable(self, tok: Token) -> VarId:
        m = _VARIABLE.fullmatch(tok.text)
        allowed = "x, y or t" if self.allow_tau else "x or y"
        if m is None or (m.group(1) == "t" and not self.allow_tau):
            raise ParseError(tok.span, f"unknown identifier {tok.text!r} (variables are {allowed} "
                                       f"followed by an index)", frozenset({"variable"}))
        index = int(m.group(2))
        if not 1 <= index <= self.d:
            raise ParseError(tok.span, f"variable index of {tok.text!r} exceeds dimension {self.d}"
                             if index > self.d else f"variable index must be >= 1 in {tok.text!r}",
                             frozenset({"variable"}))
        role = {"x": Role.X, "y": Role.Y, "t": Role.TAU}[m.group(1)]
        return VarId(role, index)


def parse_polynomial(src: str, d: int, allow_tau: bool = False) -> Polynomial:
    if not isinstance(d, int) or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return _Parser(src, d, allow_tau).parse()


def parse_phase(src: str, d: int) -> Polynomial:
    """Parse a phase ``S(x, y)`` in dimension ``d``; tau variables are rejected."""
    return parse_polynomial(src, d, allow_tau=False)
