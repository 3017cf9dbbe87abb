"""Truncated graded formal power series with exact polynomial coefficients.

A domain fixes base variables (degree zero), formal variables (nonzero
Z2^n degrees), and a truncation order N.  A series is a term map from
canonical formal monomials to polynomials in the base variables; every
operation truncates eagerly at N, so equality of term maps is equality
in the quotient by the (N+1)-st power of the formal ideal.

Odd formal variables (odd parity degree) square to zero and carry
exponent at most 1; even formal variables of nonzero degree are not
nilpotent, which is why monomial exponents are unbounded and truncation
is needed at all.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import expr as expr_mod
from .errors import (
    DomainMismatchError,
    NotInvertibleError,
    TruncationError,
    UnknownSymbolError,
    ValidationError,
)
from .grading import Degree, parity, scalar_product
from .polynomial import Polynomial, join_signed_terms

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class FormalVar(NamedTuple):
    name: str
    degree: Degree


class DomainSpec:
    """Coordinate system of a Z2^n-superdomain chart.

    Formal variables are stored in canonical order: sorted by degree
    (lexicographically), declaration order breaking ties.  Monomial
    exponent tuples are indexed in this order.
    """

    def __init__(self, n: int, base_vars: Sequence[str], formal_vars: Iterable,
                 truncation_order: int):
        self.n = int(n)
        if self.n < 0:
            raise ValidationError("grading rank must be non-negative")
        self.base_vars = tuple(base_vars)
        fvars = []
        for fv in formal_vars:
            if isinstance(fv, FormalVar):
                name, degree = fv.name, fv.degree
            elif isinstance(fv, dict):
                name, degree = fv["name"], fv["degree"]
            else:
                name, degree = fv
            degree = Degree(degree)
            if len(degree) != self.n:
                raise ValidationError(
                    f"degree {tuple(degree)} of {name!r} has rank {len(degree)}, expected {self.n}")
            if degree.is_zero():
                raise ValidationError(f"formal variable {name!r} must have nonzero degree")
            fvars.append(FormalVar(str(name), degree))
        self.formal_vars = tuple(sorted(fvars, key=lambda fv: fv.degree))
        self.truncation_order = int(truncation_order)
        if self.truncation_order < 0:
            raise ValidationError("truncation order must be non-negative")

        names = list(self.base_vars) + [fv.name for fv in self.formal_vars]
        for name in names:
            if not _NAME_RE.match(name):
                raise ValidationError(f"bad variable name {name!r}")
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate variable names in {names}")

        self._findex = {fv.name: i for i, fv in enumerate(self.formal_vars)}
        self._odd = tuple(parity(fv.degree) == 1 for fv in self.formal_vars)
        q = len(self.formal_vars)
        self._sp = tuple(
            tuple(scalar_product(self.formal_vars[i].degree, self.formal_vars[j].degree)
                  for j in range(q))
            for i in range(q)
        )

    # -- structure ----------------------------------------------------------

    @property
    def q(self) -> int:
        return len(self.formal_vars)

    @property
    def p(self) -> int:
        return len(self.base_vars)

    def q_vector(self) -> tuple[int, ...]:
        """Formal-variable counts per nonzero degree, in lexicographic order."""
        from .grading import enumerate_degrees

        counts = {d: 0 for d in enumerate_degrees(self.n)[1:]}
        for fv in self.formal_vars:
            counts[fv.degree] += 1
        return tuple(counts.values())

    def dimension_string(self) -> str:
        return f"{self.p}|{self.q_vector()}"

    def formal_index(self, name: str) -> int:
        try:
            return self._findex[name]
        except KeyError:
            raise UnknownSymbolError(f"{name!r} is not a formal variable of this domain") from None

    def degree_of(self, name: str) -> Degree:
        if name in self.base_vars:
            return Degree.zero(self.n)
        return self.formal_vars[self.formal_index(name)].degree

    def coordinate_names(self) -> tuple[str, ...]:
        """All coordinates, base first, then formal in canonical order."""
        return self.base_vars + tuple(fv.name for fv in self.formal_vars)

    def is_odd(self, index: int) -> bool:
        return self._odd[index]

    def empty_monomial(self) -> tuple[int, ...]:
        return (0,) * self.q

    def validate_monomial(self, mu: Sequence[int]) -> tuple[int, ...]:
        mu = tuple(int(e) for e in mu)
        if len(mu) != self.q:
            raise ValidationError(f"monomial {mu} has {len(mu)} slots, expected {self.q}")
        if any(e < 0 for e in mu):
            raise ValidationError(f"negative exponent in {mu}")
        for i, e in enumerate(mu):
            if self._odd[i] and e > 1:
                raise ValidationError(
                    f"odd variable {self.formal_vars[i].name!r} cannot carry exponent {e}")
        return mu

    def monomial_degree(self, mu: Sequence[int]) -> Degree:
        """Degree of a formal monomial: the mod-2 sum of its factors' degrees."""
        bits = [0] * self.n
        for e, fv in zip(mu, self.formal_vars):
            if e % 2:
                for k, b in enumerate(fv.degree):
                    bits[k] = (bits[k] + b) % 2
        return Degree(bits)

    def monomial_str(self, mu: Sequence[int]) -> str:
        factors = []
        for fv, e in zip(self.formal_vars, mu):
            if e == 1:
                factors.append(fv.name)
            elif e > 1:
                factors.append(f"{fv.name}^{e}")
        return "*".join(factors)

    def with_truncation_order(self, order: int) -> "DomainSpec":
        return DomainSpec(self.n, self.base_vars, self.formal_vars, order)

    def _key(self):
        return (self.n, self.base_vars, self.formal_vars, self.truncation_order)

    def __eq__(self, other) -> bool:
        return isinstance(other, DomainSpec) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"DomainSpec({self.dimension_string()}, n={self.n}, N={self.truncation_order})"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "base_vars": list(self.base_vars),
            "formal_vars": [{"name": fv.name, "degree": list(fv.degree)}
                            for fv in self.formal_vars],
            "truncation_order": self.truncation_order,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DomainSpec":
        return cls(data["n"], data["base_vars"], data["formal_vars"],
                   data["truncation_order"])

    @classmethod
    def load(cls, path) -> "DomainSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def merge_monomials(domain: DomainSpec, mu: tuple[int, ...], nu: tuple[int, ...]):
    """Sign and exponent tuple of (xi^mu)·(xi^nu) in canonical order.

    Returns (sign, None) when an odd variable would acquire exponent 2.
    Each factor of nu with index j crosses every factor of mu with index
    i > j, contributing <deg_i, deg_j> to the sign exponent.
    """
    sp = domain._sp
    sign_exp = 0
    for j, nj in enumerate(nu):
        if not nj:
            continue
        for i in range(j + 1, domain.q):
            mi = mu[i]
            if mi and sp[i][j]:
                sign_exp += mi * nj
    out = tuple(a + b for a, b in zip(mu, nu))
    for i, e in enumerate(out):
        if e > 1 and domain.is_odd(i):
            return (1, None)
    return (-1 if sign_exp % 2 else 1, out)


def normalize_product(domain: DomainSpec, word: Sequence[str]):
    """Canonical form of a product of formal generators.

    Sorts the word into canonical variable order, collecting the sign
    (-1)**<deg a, deg b> for every transposition; returns (sign, None)
    when an odd generator appears twice (its square is zero).
    """
    indices = [domain.formal_index(sym) for sym in word]
    sp = domain._sp
    sign = 1
    for i in range(1, len(indices)):
        j = i
        while j > 0 and indices[j - 1] > indices[j]:
            if sp[indices[j - 1]][indices[j]]:
                sign = -sign
            indices[j - 1], indices[j] = indices[j], indices[j - 1]
            j -= 1
    mu = [0] * domain.q
    for idx in indices:
        mu[idx] += 1
    for idx, e in enumerate(mu):
        if e > 1 and domain.is_odd(idx):
            return (1, None)
    return (sign, tuple(mu))


class GradedSeries:
    """A truncated formal power series over a domain.

    Term map: canonical monomial exponent tuple -> nonzero Polynomial in
    the base variables.  Value semantics; operations are pure.
    """

    __slots__ = ("domain", "terms")

    def __init__(self, domain: DomainSpec, terms: Mapping[tuple, Polynomial] | None = None):
        self.domain = domain
        clean: dict[tuple, Polynomial] = {}
        if terms:
            limit = domain.truncation_order
            for mu, coeff in terms.items():
                mu = domain.validate_monomial(mu)
                if sum(mu) > limit:
                    continue
                if not isinstance(coeff, Polynomial):
                    coeff = Polynomial.constant(domain.base_vars, coeff)
                elif coeff.vars != domain.base_vars:
                    raise ValidationError(
                        f"coefficient variables {coeff.vars} != domain base {domain.base_vars}")
                if coeff.is_zero():
                    continue
                clean[mu] = clean[mu] + coeff if mu in clean else coeff
                if clean[mu].is_zero():
                    del clean[mu]
        self.terms = clean

    @classmethod
    def _make(cls, domain: DomainSpec, terms: dict) -> "GradedSeries":
        out = object.__new__(cls)
        out.domain = domain
        out.terms = terms
        return out

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, domain: DomainSpec) -> "GradedSeries":
        return cls._make(domain, {})

    @classmethod
    def constant(cls, domain: DomainSpec, value) -> "GradedSeries":
        return cls(domain, {domain.empty_monomial(): value})

    @classmethod
    def one(cls, domain: DomainSpec) -> "GradedSeries":
        return cls.constant(domain, 1)

    @classmethod
    def generator(cls, domain: DomainSpec, name: str) -> "GradedSeries":
        """The coordinate series of a base or formal variable."""
        if name in domain.base_vars:
            poly = Polynomial.variable(domain.base_vars, name)
            return cls(domain, {domain.empty_monomial(): poly})
        idx = domain.formal_index(name)
        mu = tuple(1 if i == idx else 0 for i in range(domain.q))
        return cls(domain, {mu: Fraction(1)})

    @classmethod
    def from_polynomial(cls, domain: DomainSpec, poly: Polynomial) -> "GradedSeries":
        return cls(domain, {domain.empty_monomial(): poly})

    # -- ring structure ------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, GradedSeries):
            if other.domain != self.domain:
                raise DomainMismatchError(
                    f"domains differ: {self.domain!r} vs {other.domain!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return GradedSeries.constant(self.domain, other)
        if isinstance(other, Polynomial):
            return GradedSeries.from_polynomial(self.domain, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        terms = dict(self.terms)
        for mu, coeff in other.terms.items():
            acc = terms[mu] + coeff if mu in terms else coeff
            if acc.is_zero():
                terms.pop(mu, None)
            else:
                terms[mu] = acc
        return GradedSeries._make(self.domain, terms)

    __radd__ = __add__

    def __neg__(self):
        return GradedSeries._make(self.domain, {mu: -c for mu, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        domain = self.domain
        limit = domain.truncation_order
        terms: dict[tuple, Polynomial] = {}
        for mu, cmu in self.terms.items():
            omu = sum(mu)
            for nu, cnu in other.terms.items():
                if omu + sum(nu) > limit:
                    continue
                sign, out = merge_monomials(domain, mu, nu)
                if out is None:
                    continue
                coeff = cmu * cnu
                if sign < 0:
                    coeff = -coeff
                acc = terms[out] + coeff if out in terms else coeff
                if acc.is_zero():
                    terms.pop(out, None)
                else:
                    terms[out] = acc
        return GradedSeries._make(domain, terms)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        # remaining ring elements here are degree 0, so they commute past self
        return self.__mul__(other)

    def scale(self, value) -> "GradedSeries":
        value = value if isinstance(value, Fraction) else Fraction(value)
        if value == 0:
            return GradedSeries.zero(self.domain)
        return GradedSeries._make(
            self.domain, {mu: c * value for mu, c in self.terms.items()})

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValidationError("series powers must be non-negative integers")
        out = GradedSeries.one(self.domain)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Polynomial)):
            other = self._coerce(other)
        return (
            isinstance(other, GradedSeries)
            and self.domain == other.domain
            and self.terms == other.terms
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.terms

    # -- structure queries ----------------------------------------------------

    def base_project(self) -> Polynomial:
        """The independent term f_0: the coefficient of the empty monomial."""
        empty = self.domain.empty_monomial()
        return self.terms.get(empty, Polynomial.zero(self.domain.base_vars))

    def j_adic_valuation(self):
        """Minimum number of formal factors in any term; inf for the zero series."""
        if not self.terms:
            return float("inf")
        return min(sum(mu) for mu in self.terms)

    def truncate(self, k: int) -> "GradedSeries":
        """Representative of the class mod J^k: drops terms with k or more formal factors.

        k may be at most N+1 (N+1 keeps everything the domain tracks).
        """
        if k < 0 or k > self.domain.truncation_order + 1:
            raise TruncationError(
                f"truncation order {k} outside [0, {self.domain.truncation_order + 1}]")
        return GradedSeries._make(
            self.domain, {mu: c for mu, c in self.terms.items() if sum(mu) < k})

    def homogeneous_component(self, degree) -> "GradedSeries":
        degree = Degree(degree)
        return GradedSeries._make(
            self.domain,
            {mu: c for mu, c in self.terms.items()
             if self.domain.monomial_degree(mu) == degree})

    def homogeneous_components(self) -> dict[Degree, "GradedSeries"]:
        """Nonzero components indexed by degree, in lexicographic degree order."""
        buckets: dict[Degree, dict] = {}
        for mu, c in self.terms.items():
            buckets.setdefault(self.domain.monomial_degree(mu), {})[mu] = c
        return {d: GradedSeries._make(self.domain, buckets[d])
                for d in sorted(buckets)}

    def is_homogeneous(self, degree) -> bool:
        degree = Degree(degree)
        return all(self.domain.monomial_degree(mu) == degree for mu in self.terms)

    def invert(self) -> "GradedSeries":
        """Exact inverse at truncation order, via the geometric series.

        Requires the independent term to be a nonzero constant; with
        f = c + j (j in J) the inverse is (1/c) sum_k (-j/c)^k, which
        terminates because j^k vanishes beyond the truncation order.
        """
        f0 = self.base_project()
        if not f0.is_constant() or f0.is_zero():
            raise NotInvertibleError(
                f"independent term {f0} is not a nonzero constant")
        c = f0.constant_value()
        u = (self - c).scale(Fraction(-1) / c)
        acc = GradedSeries.one(self.domain)
        power = GradedSeries.one(self.domain)
        for _ in range(self.domain.truncation_order):
            power = power * u
            if power.is_zero():
                break
            acc = acc + power
        return acc.scale(Fraction(1) / c)

    def derivative(self, name: str) -> "GradedSeries":
        """Left partial derivative with respect to a base or formal variable.

        For a formal variable v, one factor of v is commuted to the front
        of the canonical monomial (collecting the sign rule across every
        crossed factor), multiplied by the exponent, and removed.
        """
        domain = self.domain
        if name in domain.base_vars:
            terms = {}
            for mu, coeff in self.terms.items():
                d = coeff.derivative(name)
                if not d.is_zero():
                    terms[mu] = d
            return GradedSeries._make(domain, terms)
        vi = domain.formal_index(name)
        sp = domain._sp
        terms = {}
        for mu, coeff in self.terms.items():
            e = mu[vi]
            if e == 0:
                continue
            crossings = sum(mu[w] for w in range(vi) if sp[vi][w]) % 2
            scalar = Fraction(-e if crossings else e)
            new_mu = tuple(x - 1 if i == vi else x for i, x in enumerate(mu))
            acc = coeff * scalar
            if new_mu in terms:
                acc = terms[new_mu] + acc
            if acc.is_zero():
                terms.pop(new_mu, None)
            else:
                terms[new_mu] = acc
        return GradedSeries._make(domain, terms)

    # -- io --------------------------------------------------------------------

    def _sorted_monomials(self):
        return sorted(self.terms, key=lambda mu: (sum(mu), mu))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mu in self._sorted_monomials():
            poly = self.terms[mu]
            mono = self.domain.monomial_str(mu)
            if not mono:
                parts.append(str(poly))
            elif poly == 1:
                parts.append(mono)
            elif poly == -1:
                parts.append("-" + mono)
            elif len(poly.terms) == 1:
                parts.append(f"{poly}*{mono}")
            else:
                parts.append(f"({poly})*{mono}")
        return join_signed_terms(parts)

    def __repr__(self) -> str:
        return f"GradedSeries({self})"

    def to_json(self) -> list:
        return [{"mu": list(mu), "coeff": str(self.terms[mu])}
                for mu in self._sorted_monomials()]

    @classmethod
    def from_json(cls, domain: DomainSpec, data: Iterable[dict]) -> "GradedSeries":
        terms = {}
        for entry in data:
            coeff = entry["coeff"]
            if isinstance(coeff, str):
                coeff = expr_mod.parse_polynomial(coeff, domain.base_vars)
            terms[tuple(entry["mu"])] = coeff
        return cls(domain, terms)


def enumerate_monomials(domain: DomainSpec, degree, max_order: int) -> list[tuple[int, ...]]:
    """All canonical monomials of the given degree with at most max_order factors.

    Odd variables carry exponent at most 1.  Sorted by (total exponent,
    exponent tuple) for determinism.
    """
    degree = Degree(degree)
    if len(degree) != domain.n:
        raise ValidationError(f"degree rank {len(degree)} != domain rank {domain.n}")
    out = []
    mu = [0] * domain.q

    def rec(i: int, budget: int):
        if i == domain.q:
            if domain.monomial_degree(mu) == degree:
                out.append(tuple(mu))
            return
        cap = 1 if domain.is_odd(i) else budget
        for e in range(0, min(cap, budget) + 1):
            mu[i] = e
            rec(i + 1, budget - e)
        mu[i] = 0

    rec(0, max_order)
    out.sort(key=lambda m: (sum(m), m))
    return out


def evaluate_series(node, domain: DomainSpec, env: Mapping[str, GradedSeries] | None = None
                    ) -> GradedSeries:
    """Evaluate a DSL AST to a series over the domain.

    Identifiers resolve to coordinates first, then to env bindings.
    Products evaluate left to right; the sign rule is applied by the
    series ring itself.
    """
    env = env or {}
    if isinstance(node, expr_mod.Lit):
        return GradedSeries.constant(domain, node.value)
    if isinstance(node, expr_mod.Sym):
        name = node.name
        if name in domain.base_vars or name in domain._findex:
            return GradedSeries.generator(domain, name)
        if name in env:
            value = env[name]
            if value.domain != domain:
                raise DomainMismatchError(f"binding {name!r} lives over another domain")
            return value
        raise UnknownSymbolError(f"{name!r} is not a variable or binding")
    if isinstance(node, expr_mod.Pow):
        return evaluate_series(node.base, domain, env) ** node.exponent
    if isinstance(node, expr_mod.Mul):
        out = GradedSeries.one(domain)
        for factor in node.factors:
            out = out * evaluate_series(factor, domain, env)
        return out
    if isinstance(node, expr_mod.Sum):
        out = GradedSeries.zero(domain)
        for sign, term in node.terms:
            value = evaluate_series(term, domain, env)
            out = out + (value if sign > 0 else -value)
        return out
    raise ValidationError(f"unknown AST node {node!r}")


def parse_series(text: str, domain: DomainSpec,
                 env: Mapping[str, GradedSeries] | None = None) -> GradedSeries:
    return evaluate_series(expr_mod.parse_expression(text), domain, env)
