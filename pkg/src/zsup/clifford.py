"""Color Clifford algebras and commutativity checks for finite algebras.

A presentation is a set of graded generators plus a bilinear form h; the
algebra is the free algebra modulo

    f_a f_b - (-1)**<deg a, deg b> f_b f_a = h_ab . 1

Elements are kept in an ordered square-free word basis.  The relation
determines the square of a generator only when <a,a> is odd (it gives
2 f_a^2 = h_aa); even self-products must be supplied explicitly by the
presentation or the offending word is rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import expr as expr_mod
from .errors import UnknownSymbolError, ValidationError
from .grading import Degree, commutation_sign, scalar_product
from .polynomial import as_fraction, fraction_to_json


class CliffordPresentation:
    """Graded generators with a bilinear form defining the Clifford relations."""

    def __init__(self, n: int, generators: Sequence, h: Sequence[Sequence],
                 squares: Mapping[str, object] | None = None):
        self.n = int(n)
        gens = []
        for entry in generators:
            name, degree = (entry["name"], entry["degree"]) if isinstance(entry, dict) \
                else entry
            degree = Degree(degree)
            if len(degree) != self.n:
                raise ValidationError(f"degree of {name!r} has wrong rank")
            gens.append((str(name), degree))
        self.generators = tuple(gens)
        names = [g for g, _ in gens]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate generator names")
        self._index = {name: i for i, name in enumerate(names)}
        m = len(gens)
        self.h = [[as_fraction(v) for v in row] for row in h]
        if len(self.h) != m or any(len(row) != m for row in self.h):
            raise ValidationError(f"h must be {m}x{m}")
        self.squares = {str(k): as_fraction(v) for k, v in (squares or {}).items()}
        for name in self.squares:
            if name not in self._index:
                raise UnknownSymbolError(f"square given for unknown generator {name!r}")
        self._validate_form()

    def _validate_form(self):
        for i, (_, da) in enumerate(self.generators):
            for j, (_, db) in enumerate(self.generators):
                expected = -commutation_sign(da, db) * self.h[i][j]
                if self.h[j][i] != expected:
                    raise ValidationError(
                        f"h[{j}][{i}] must equal -(-1)^<a,b> h[{i}][{j}] "
                        f"(got {self.h[j][i]}, expected {expected})")
                if self.h[i][j] != 0 and not (da + db).is_zero():
                    raise ValidationError(
                        f"h[{i}][{j}] nonzero but degrees sum to {tuple(da + db)};"
                        " the quotient would not be graded")

    def degree(self, index: int) -> Degree:
        return self.generators[index][1]

    def name(self, index: int) -> str:
        return self.generators[index][0]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown generator {name!r}") from None

    def generator(self, name: str) -> "CliffordElement":
        return CliffordElement(self, {(self.index(name),): Fraction(1)})

    def scalar(self, value) -> "CliffordElement":
        return CliffordElement(self, {(): as_fraction(value)})

    def square_value(self, index: int) -> Fraction:
        """Value of f_a^2 in the quotient, when the data determines it."""
        name, degree = self.generators[index]
        if scalar_product(degree, degree) == 1:
            return self.h[index][index] / 2
        if name in self.squares:
            return self.squares[name]
        raise ValidationError(
            f"square of {name!r} is not determined (<a,a> even) and no explicit "
            f"square value was supplied")

    def __eq__(self, other) -> bool:
        return (isinstance(other, CliffordPresentation)
                and self.n == other.n and self.generators == other.generators
                and self.h == other.h and self.squares == other.squares)

    __hash__ = None

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "generators": [{"name": name, "degree": list(degree)}
                           for name, degree in self.generators],
            "h": [[fraction_to_json(v) for v in row] for row in self.h],
        }
        if self.squares:
            out["squares"] = {k: fraction_to_json(v)
                              for k, v in sorted(self.squares.items())}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CliffordPresentation":
        return cls(data["n"], data["generators"], data["h"], data.get("squares"))

    @classmethod
    def load(cls, path) -> "CliffordPresentation":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class CliffordElement:
    """Finite combination of strictly ascending generator words."""

    __slots__ = ("presentation", "terms")

    def __init__(self, presentation: CliffordPresentation,
                 terms: Mapping[tuple, Fraction] | None = None):
        self.presentation = presentation
        clean = {}
        if terms:
            for word, coeff in terms.items():
                word = tuple(int(i) for i in word)
                if any(b <= a for a, b in zip(word, word[1:])):
                    raise ValidationError(f"word {word} is not strictly ascending")
                coeff = as_fraction(coeff)
                if coeff != 0:
                    clean[word] = coeff
        self.terms = clean

    def _check(self, other: "CliffordElement"):
        if self.presentation != other.presentation:
            raise ValidationError("elements belong to different presentations")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.presentation.scalar(other)
        self._check(other)
        terms = dict(self.terms)
        for word, coeff in other.terms.items():
            acc = terms.get(word, Fraction(0)) + coeff
            if acc == 0:
                terms.pop(word, None)
            else:
                terms[word] = acc
        return CliffordElement(self.presentation, terms)

    __radd__ = __add__

    def __neg__(self):
        return CliffordElement(self.presentation,
                               {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.presentation.scalar(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = as_fraction(other)
            return CliffordElement(self.presentation,
                                   {w: c * q for w, c in self.terms.items()})
        self._check(other)
        out: dict[tuple, Fraction] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                for word, c in _normalize_word(self.presentation, w1 + w2).items():
                    acc = out.get(word, Fraction(0)) + c1 * c2 * c
                    if acc == 0:
                        out.pop(word, None)
                    else:
                        out[word] = acc
        return CliffordElement(self.presentation, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.__mul__(other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValidationError("powers must be non-negative integers")
        out = self.presentation.scalar(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.presentation.scalar(other)
        return (isinstance(other, CliffordElement)
                and self.presentation == other.presentation
                and self.terms == other.terms)

    __hash__ = None

    def __str__(self) -> str:
        from .polynomial import join_signed_terms

        if not self.terms:
            return "0"
        parts = []
        for word in sorted(self.terms, key=lambda w: (len(w), w)):
            coeff = self.terms[word]
            factors = "*".join(self.presentation.name(i) for i in word)
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append(factors)
            elif coeff == -1:
                parts.append("-" + factors)
            else:
                parts.append(f"{coeff}*{factors}")
        return join_signed_terms(parts)

    def __repr__(self) -> str:
        return f"CliffordElement({self})"


def _normalize_word(pres: CliffordPresentation, word: tuple) -> dict[tuple, Fraction]:
    """Rewrite an arbitrary word to the ascending square-free basis.

    Out-of-order adjacent pairs are swapped via
    f_i f_j = (-1)**<i,j> f_j f_i + h_ij, equal pairs are replaced by the
    square value; each step shortens the word or reduces its inversions.
    """
    for pos in range(len(word) - 1):
        i, j = word[pos], word[pos + 1]
        if i < j:
            continue
        rest = word[:pos] + word[pos + 2:]
        if i == j:
            value = pres.square_value(i)
            if value == 0:
                return {}
            return {w: c * value for w, c in _normalize_word(pres, rest).items()}
        swapped = word[:pos] + (j, i) + word[pos + 2:]
        sign = commutation_sign(pres.degree(i), pres.degree(j))
        out = {w: c * sign for w, c in _normalize_word(pres, swapped).items()}
        h = pres.h[i][j]
        if h != 0:
            for w, c in _normalize_word(pres, rest).items():
                acc = out.get(w, Fraction(0)) + c * h
                if acc == 0:
                    out.pop(w, None)
                else:
                    out[w] = acc
        return out
    return {word: Fraction(1)}


def clifford_mul(presentation: CliffordPresentation, u: CliffordElement,
                 v: CliffordElement) -> CliffordElement:
    if u.presentation != presentation or v.presentation != presentation:
        raise ValidationError("elements do not belong to the presentation")
    return u * v


def evaluate_clifford(node, presentation: CliffordPresentation) -> CliffordElement:
    """Evaluate a DSL AST over a Clifford presentation's generators."""
    if isinstance(node, expr_mod.Lit):
        return presentation.scalar(node.value)
    if isinstance(node, expr_mod.Sym):
        return presentation.generator(node.name)
    if isinstance(node, expr_mod.Pow):
        return evaluate_clifford(node.base, presentation) ** node.exponent
    if isinstance(node, expr_mod.Mul):
        out = presentation.scalar(1)
        for factor in node.factors:
            out = out * evaluate_clifford(factor, presentation)
        return out
    if isinstance(node, expr_mod.Sum):
        out = presentation.scalar(0)
        for sign, term in node.terms:
            value = evaluate_clifford(term, presentation)
            out = out + (value if sign > 0 else -value)
        return out
    raise ValidationError(f"unknown AST node {node!r}")


def parse_clifford(text: str, presentation: CliffordPresentation) -> CliffordElement:
    return evaluate_clifford(expr_mod.parse_expression(text), presentation)


# -- structure-constant algebras --------------------------------------------------


class StructureConstantAlgebra:
    """Finite-dimensional algebra given by a multiplication table.

    table[i][j] is the coefficient vector of (basis_i * basis_j) over the
    basis; every basis element carries a degree.
    """

    def __init__(self, n: int, basis: Sequence[str], degrees: Sequence,
                 table: Sequence):
        self.n = int(n)
        self.basis = tuple(str(b) for b in basis)
        size = len(self.basis)
        if len(set(self.basis)) != size:
            raise ValidationError("duplicate basis names")
        self.degrees = tuple(Degree(d) for d in degrees)
        if len(self.degrees) != size:
            raise ValidationError("one degree per basis element required")
        for d in self.degrees:
            if len(d) != self.n:
                raise ValidationError(f"degree {tuple(d)} has wrong rank")
        self.table = [[[as_fraction(v) for v in table[i][j]] for j in range(size)]
                      for i in range(size)]
        if len(table) != size or any(len(row) != size for row in table) or any(
                len(cell) != size for row in self.table for cell in row):
            raise ValidationError("table must be size x size x size")

    def product(self, i: int, j: int) -> list[Fraction]:
        return self.table[i][j]

    def index(self, name: str) -> int:
        try:
            return self.basis.index(name)
        except ValueError:
            raise UnknownSymbolError(f"unknown basis element {name!r}") from None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "basis": list(self.basis),
            "degrees": [list(d) for d in self.degrees],
            "table": [[[fraction_to_json(v) for v in cell] for cell in row]
                      for row in self.table],
        }

    @classmethod
    def from_json(cls, data: dict) -> "StructureConstantAlgebra":
        return cls(data["n"], data["basis"], data["degrees"], data["table"])

    @classmethod
    def load(cls, path) -> "StructureConstantAlgebra":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class ColorCommResult:
    ok: bool
    counterexample: tuple[str, str] | None = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok,
                "counterexample": list(self.counterexample)
                if self.counterexample else None}


def check_color_commutative(algebra: StructureConstantAlgebra) -> ColorCommResult:
    """Whether u v == (-1)**<deg u, deg v> v u for all basis pairs.

    Raises when some product of homogeneous basis elements is not itself
    supported on a single degree.
    """
    size = len(algebra.basis)
    for i in range(size):
        for j in range(size):
            expected = algebra.degrees[i] + algebra.degrees[j]
            for k, coeff in enumerate(algebra.table[i][j]):
                if coeff != 0 and algebra.degrees[k] != expected:
                    raise ValidationError(
                        f"product {algebra.basis[i]}*{algebra.basis[j]} is not "
                        f"homogeneous of degree {tuple(expected)}")
    for i in range(size):
        for j in range(size):
            sign = commutation_sign(algebra.degrees[i], algebra.degrees[j])
            forward = algebra.table[i][j]
            backward = algebra.table[j][i]
            if any(f != sign * b for f, b in zip(forward, backward)):
                return ColorCommResult(False, (algebra.basis[i], algebra.basis[j]))
    return ColorCommResult(True)


def quaternion_algebra() -> StructureConstantAlgebra:
    """The quaternions with the rank-3 degree assignment that makes them
    color-commutative: deg 1 = (0,0,0), deg i = (1,1,0), deg j = (1,0,1),
    deg k = (0,1,1)."""
    basis = ["1", "i", "j", "k"]
    degrees = [(0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
    one, i, j, k = ([1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1])

    def neg(v):
        return [-x for x in v]

    table = [
        [one, i, j, k],
        [i, neg(one), k, neg(j)],
        [j, neg(k), neg(one), i],
        [k, j, neg(i), neg(one)],
    ]
    return StructureConstantAlgebra(3, basis, degrees, table)
