"""Small expression DSL shared by the CLI, serialization, and scripts.

Grammar (no implicit multiplication, rationals written p/q):

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ('^' nat)?
    atom   := rational | ident | '(' expr ')'

The optional leading '-' exists so printed canonical forms round-trip.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, UnknownSymbolError, ValidationError
from .polynomial import Polynomial


@dataclass(frozen=True)
class Lit:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Mul:
    factors: tuple


@dataclass(frozen=True)
class Sum:
    # (sign, node) pairs, sign in {+1, -1}
    terms: tuple


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, OP, END
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            if j < len(text) and text[j] == "/" and j + 1 < len(text) and text[j + 1].isdigit():
                j += 1
                while j < len(text) and text[j].isdigit():
                    j += 1
            tokens.append(Token("NUMBER", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in "+-*^()":
            tokens.append(Token("OP", ch, line, start_col))
            col += 1
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("END", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str):
        tok = self.next()
        if tok.kind != "OP" or tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)

    def parse_expr(self):
        terms = []
        sign = 1
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.next()
            sign = -1
        terms.append((sign, self.parse_term()))
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in "+-":
                self.next()
                terms.append((1 if tok.text == "+" else -1, self.parse_term()))
            else:
                break
        if len(terms) == 1 and terms[0][0] == 1:
            return terms[0][1]
        return Sum(tuple(terms))

    def parse_term(self):
        factors = [self.parse_factor()]
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text == "*":
                self.next()
                factors.append(self.parse_factor())
            else:
                break
        if len(factors) == 1:
            return factors[0]
        return Mul(tuple(factors))

    def parse_factor(self):
        atom = self.parse_atom()
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "^":
            self.next()
            exp = self.next()
            if exp.kind != "NUMBER" or "/" in exp.text:
                raise ParseError("exponent must be a natural number", exp.line, exp.column)
            return Pow(atom, int(exp.text))
        return atom

    def parse_atom(self):
        tok = self.next()
        if tok.kind == "NUMBER":
            return Lit(Fraction(tok.text))
        if tok.kind == "IDENT":
            return Sym(tok.text)
        if tok.kind == "OP" and tok.text == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}",
                         tok.line, tok.column)


def parse_expression(text: str):
    """Parse the DSL into an AST; raises ParseError with line/column."""
    parser = _Parser(tokenize(text))
    node = parser.parse_expr()
    tail = parser.peek()
    if tail.kind != "END":
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.line, tail.column)
    return node


def evaluate_polynomial(node, vars: tuple[str, ...]) -> Polynomial:
    """Evaluate an AST over the pure polynomial ring in the given variables."""
    if isinstance(node, Lit):
        return Polynomial.constant(vars, node.value)
    if isinstance(node, Sym):
        if node.name not in vars:
            raise UnknownSymbolError(f"{node.name!r} is not a base variable")
        return Polynomial.variable(vars, node.name)
    if isinstance(node, Pow):
        return evaluate_polynomial(node.base, vars) ** node.exponent
    if isinstance(node, Mul):
        out = Polynomial.constant(vars, 1)
        for factor in node.factors:
            out = out * evaluate_polynomial(factor, vars)
        return out
    if isinstance(node, Sum):
        out = Polynomial.zero(vars)
        for sign, term in node.terms:
            value = evaluate_polynomial(term, vars)
            out = out + (value if sign > 0 else -value)
        return out
    raise ValidationError(f"unknown AST node {node!r}")


def parse_polynomial(text: str, vars: tuple[str, ...]) -> Polynomial:
    return evaluate_polynomial(parse_expression(text), vars)
