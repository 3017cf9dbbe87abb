"""Exact multivariate polynomials over the rationals.

These are the base-variable coefficients of graded series: every identity
in the engine reduces to exact arithmetic here.  A polynomial is a term
map from exponent tuples (one slot per variable, fixed order) to nonzero
Fractions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError


def as_fraction(value) -> Fraction:
    """Coerce an int, Fraction, or 'p/q' string to an exact rational.

    Floats are rejected: the engine never rounds.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad rational literal {value!r}: {exc}") from None
    raise ValidationError(f"expected an exact rational, got {type(value).__name__}")


def fraction_to_json(q: Fraction):
    """Ints stay JSON numbers; proper fractions become 'p/q' strings."""
    return int(q) if q.denominator == 1 else str(q)


class Polynomial:
    """Multivariate polynomial with Fraction coefficients.

    Immutable by convention; all operations return new instances.  Two
    polynomials combine only when they share the same variable tuple.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, vars: Sequence[str], terms: Mapping[tuple, Fraction] | None = None):
        self.vars = tuple(vars)
        clean = {}
        if terms:
            width = len(self.vars)
            for expo, coeff in terms.items():
                coeff = as_fraction(coeff)
                if coeff == 0:
                    continue
                expo = tuple(int(e) for e in expo)
                if len(expo) != width or any(e < 0 for e in expo):
                    raise ValidationError(f"bad exponent tuple {expo} for {width} variables")
                clean[expo] = coeff
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, vars: Sequence[str]) -> "Polynomial":
        return cls(vars)

    @classmethod
    def constant(cls, vars: Sequence[str], value) -> "Polynomial":
        value = as_fraction(value)
        if value == 0:
            return cls(vars)
        return cls(vars, {(0,) * len(tuple(vars)): value})

    @classmethod
    def variable(cls, vars: Sequence[str], name: str) -> "Polynomial":
        vars = tuple(vars)
        idx = vars.index(name)
        expo = tuple(1 if i == idx else 0 for i in range(len(vars)))
        return cls(vars, {expo: Fraction(1)})

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_constant():
            raise ValidationError("polynomial is not constant")
        return next(iter(self.terms.values()))

    # -- ring operations ---------------------------------------------------

    def _check_compatible(self, other: "Polynomial"):
        if self.vars != other.vars:
            raise ValidationError(f"variable mismatch: {self.vars} vs {other.vars}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.vars, other)
        elif not isinstance(other, Polynomial):
            return NotImplemented
        self._check_compatible(other)
        terms = dict(self.terms)
        for expo, coeff in other.terms.items():
            acc = terms.get(expo, Fraction(0)) + coeff
            if acc == 0:
                terms.pop(expo, None)
            else:
                terms[expo] = acc
        return Polynomial(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.vars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = as_fraction(other)
            return Polynomial(self.vars, {e: c * q for e, c in self.terms.items()})
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check_compatible(other)
        terms: dict[tuple, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                acc = terms.get(expo, Fraction(0)) + c1 * c2
                if acc == 0:
                    terms.pop(expo, None)
                else:
                    terms[expo] = acc
        return Polynomial(self.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValidationError("polynomial powers must be non-negative integers")
        out = Polynomial.constant(self.vars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_value() == other
        return (
            isinstance(other, Polynomial)
            and self.vars == other.vars
            and self.terms == other.terms
        )

    __hash__ = None

    # -- calculus ----------------------------------------------------------

    def derivative(self, name: str) -> "Polynomial":
        idx = self.vars.index(name)
        terms = {}
        for expo, coeff in self.terms.items():
            e = expo[idx]
            if e == 0:
                continue
            new = list(expo)
            new[idx] = e - 1
            terms[tuple(new)] = coeff * e
        return Polynomial(self.vars, terms)

    def evaluate(self, values: Mapping[str, object]):
        """Evaluate with values from any commutative ring containing Q.

        Values may be Fractions, Polynomials, or graded series; missing
        variables are an error.
        """
        missing = [v for v in self.vars if v not in values]
        if missing:
            raise ValidationError(f"no value supplied for {missing}")
        vals = [values[v] for v in self.vars]
        total = None
        for expo, coeff in sorted(self.terms.items()):
            term = None
            for v, e in zip(vals, expo):
                if e == 0:
                    continue
                factor = v ** e
                term = factor if term is None else term * factor
            term = coeff if term is None else term * coeff
            total = term if total is None else total + term
        return Fraction(0) if total is None else total

    def taylor_shift(self, point: Sequence) -> "Polynomial":
        """The polynomial u -> f(u + point), in the same variable names."""
        point = [as_fraction(a) for a in point]
        if len(point) != len(self.vars):
            raise ValidationError("shift point has wrong dimension")
        values = {
            v: Polynomial.variable(self.vars, v) + a for v, a in zip(self.vars, point)
        }
        out = self.evaluate(values)
        if isinstance(out, Fraction):
            return Polynomial.constant(self.vars, out)
        return out

    def vanishing_order_at(self, point: Sequence):
        """Order of the zero of f at the point; inf when f == 0."""
        shifted = self.taylor_shift(point)
        if shifted.is_zero():
            return float("inf")
        return min(sum(e) for e in shifted.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def degree_in(self, name: str) -> int:
        idx = self.vars.index(name)
        if not self.terms:
            return 0
        return max(e[idx] for e in self.terms)

    # -- printing ----------------------------------------------------------

    def _term_strings(self) -> list[str]:
        def key(expo):
            return (-sum(expo), tuple(-e for e in expo))

        out = []
        for expo in sorted(self.terms, key=key):
            coeff = self.terms[expo]
            factors = []
            for v, e in zip(self.vars, expo):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            if not factors:
                out.append(str(coeff))
            elif coeff == 1:
                out.append("*".join(factors))
            elif coeff == -1:
                out.append("-" + "*".join(factors))
            else:
                out.append("*".join([str(coeff)] + factors))
        return out

    def __str__(self) -> str:
        return join_signed_terms(self._term_strings())

    def __repr__(self) -> str:
        return f"Polynomial({self})"

    def leading_sign(self) -> int:
        parts = self._term_strings()
        return -1 if parts and parts[0].startswith("-") else 1


def join_signed_terms(parts: Iterable[str]) -> str:
    """Join canonical term strings with ' + ' / ' - ', folding leading minus signs."""
    parts = list(parts)
    if not parts:
        return "0"
    text = parts[0]
    for part in parts[1:]:
        if part.startswith("-"):
            text += " - " + part[1:]
        else:
            text += " + " + part
    return text
