"""Superdomain morphisms: coordinate pullback data and its extension.

A morphism from a source to a target domain is given by one series over
the source per target coordinate, matching that coordinate's degree.
The pullback of an arbitrary target section is computed by a formal
Taylor expansion of its coefficients around the base part of the base
map; the expansion terminates exactly because the correction terms sit
in the formal ideal.

Jets model germs of series at a rational base point: terms are weighted
by (vanishing order in the shifted base variables) + (formal order),
and everything beyond a weight cap is dropped.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from . import expr as expr_mod
from .errors import (
    DomainMismatchError,
    NotInvertibleError,
    ValidationError,
)
from .polynomial import Polynomial, as_fraction
from .series import DomainSpec, GradedSeries, merge_monomials, parse_series


class MorphismData:
    """Coordinate form of a morphism between two domains of equal rank."""

    __slots__ = ("source", "target", "pullbacks", "_degree_checked")

    def __init__(self, source: DomainSpec, target: DomainSpec,
                 pullbacks: Mapping[str, GradedSeries]):
        if source.n != target.n:
            raise ValidationError(
                f"grading ranks differ: source {source.n}, target {target.n}")
        self.source = source
        self.target = target
        wanted = target.coordinate_names()
        missing = [name for name in wanted if name not in pullbacks]
        if missing:
            raise ValidationError(f"missing pullbacks for {missing}")
        extra = [name for name in pullbacks if name not in wanted]
        if extra:
            raise ValidationError(f"pullbacks for unknown coordinates {extra}")
        clean = {}
        for name in wanted:
            series = pullbacks[name]
            if not isinstance(series, GradedSeries) or series.domain != source:
                raise DomainMismatchError(
                    f"pullback of {name!r} must be a series over the source domain")
            clean[name] = series
        self.pullbacks = clean
        self._degree_checked = False

    # -- validity -------------------------------------------------------------

    def degree_problems(self) -> list[str]:
        """Messages for every pullback that is not homogeneous of its coordinate's degree."""
        problems = []
        for name in self.target.coordinate_names():
            degree = self.target.degree_of(name)
            if not self.pullbacks[name].is_homogeneous(degree):
                problems.append(
                    f"pullback of {name!r} is not homogeneous of degree {tuple(degree)}")
        return problems

    def ensure_valid(self):
        if self._degree_checked:
            return
        problems = self.degree_problems()
        if problems:
            raise ValidationError("; ".join(problems))
        self._degree_checked = True

    # -- base map ---------------------------------------------------------------

    def base_map(self) -> tuple[Polynomial, ...]:
        """Independent terms of the base-coordinate pullbacks: the underlying map."""
        return tuple(self.pullbacks[y].base_project() for y in self.target.base_vars)

    def _base_env(self) -> dict[str, Polynomial]:
        return dict(zip(self.target.base_vars, self.base_map()))

    def base_map_at(self, point: Sequence) -> tuple[Fraction, ...]:
        values = dict(zip(self.source.base_vars, (as_fraction(a) for a in point)))
        out = []
        for poly in self.base_map():
            value = poly.evaluate(values)
            out.append(value if isinstance(value, Fraction) else value.constant_value())
        return tuple(out)

    # -- pullback ---------------------------------------------------------------

    def _pullback_coefficient(self, poly: Polynomial) -> GradedSeries:
        """Formal Taylor expansion of a target base-variable polynomial.

        sum over multi-indices alpha of (1/alpha!) (d^alpha poly)(phi0) j^alpha,
        where phi0 is the base map and j the formal correction of each base
        pullback.  Terms with j^alpha beyond the truncation order are skipped.
        """
        src = self.source
        tgt_base = self.target.base_vars
        limit = src.truncation_order
        base_series = [self.pullbacks[y] for y in tgt_base]
        phi0 = self.base_map()
        phi0_env = dict(zip(tgt_base, phi0))
        jparts = [s - GradedSeries.from_polynomial(src, p)
                  for s, p in zip(base_series, phi0)]
        jvals = [jp.j_adic_valuation() for jp in jparts]
        jpow_cache: list[dict[int, GradedSeries]] = [
            {0: GradedSeries.one(src)} for _ in tgt_base]

        def jpow(i: int, e: int) -> GradedSeries:
            cache = jpow_cache[i]
            while e not in cache:
                top = max(cache)
                cache[top + 1] = cache[top] * jparts[i]
            return cache[e]

        out = GradedSeries.zero(src)

        def rec(i: int, dpoly: Polynomial, weight, factorial: int,
                factor: GradedSeries):
            nonlocal out
            if dpoly.is_zero():
                return
            if i == len(tgt_base):
                value = dpoly.evaluate(phi0_env)
                term = factor * value
                out = out + term.scale(Fraction(1, factorial))
                return
            name = tgt_base[i]
            a = 0
            cur = dpoly
            fact = factorial
            while True:
                w = weight + a * jvals[i] if a else weight
                if w > limit:
                    break
                rec(i + 1, cur, w,
                    fact, factor * jpow(i, a) if a else factor)
                a += 1
                if jvals[i] == float("inf"):
                    break
                cur = cur.derivative(name)
                if cur.is_zero():
                    break
                fact *= a

        rec(0, poly, 0, 1, GradedSeries.one(src))
        return out

    def pullback(self, section: GradedSeries) -> GradedSeries:
        """Pullback of an arbitrary target section.

        A degree-preserving unital algebra morphism determined by the
        coordinate data: each term g_nu(y) eta^nu maps to the Taylor
        pullback of g_nu times the matching product of coordinate
        pullbacks.
        """
        if section.domain != self.target:
            raise DomainMismatchError("section does not live over the target domain")
        self.ensure_valid()
        src = self.source
        tgt = self.target
        formal = [self.pullbacks[fv.name] for fv in tgt.formal_vars]
        powers: list[dict[int, GradedSeries]] = [{0: GradedSeries.one(src)}
                                                 for _ in formal]

        def fpow(b: int, e: int) -> GradedSeries:
            cache = powers[b]
            while e not in cache:
                top = max(cache)
                cache[top + 1] = cache[top] * formal[b]
            return cache[e]

        out = GradedSeries.zero(src)
        for nu in sorted(section.terms, key=lambda m: (sum(m), m)):
            factor = self._pullback_coefficient(section.terms[nu])
            for b, e in enumerate(nu):
                if e:
                    factor = factor * fpow(b, e)
            out = out + factor
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MorphismData)
            and self.source == other.source
            and self.target == other.target
            and self.pullbacks == other.pullbacks
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (f"MorphismData({self.source.dimension_string()} -> "
                f"{self.target.dimension_string()})")

    # -- io -----------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "pullbacks": {name: str(self.pullbacks[name])
                          for name in self.target.coordinate_names()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "MorphismData":
        source = DomainSpec.from_json(data["source"])
        target = DomainSpec.from_json(data["target"])
        pullbacks = {name: parse_series(text, source)
                     for name, text in data["pullbacks"].items()}
        return cls(source, target, pullbacks)

    @classmethod
    def load(cls, path) -> "MorphismData":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def identity_morphism(domain: DomainSpec) -> MorphismData:
    return MorphismData(domain, domain, {
        name: GradedSeries.generator(domain, name)
        for name in domain.coordinate_names()
    })


def compose(outer: MorphismData, inner: MorphismData) -> MorphismData:
    """The composite morphism: its pullback is inner.pullback o outer.pullback."""
    if inner.target != outer.source:
        raise DomainMismatchError(
            "composition chain mismatch: inner target differs from outer source")
    return MorphismData(inner.source, outer.target, {
        name: inner.pullback(series) for name, series in outer.pullbacks.items()
    })


pullback_section = MorphismData.pullback


@dataclass(frozen=True)
class MorphismReport:
    ok: bool
    problems: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def sample_box_points(box, count: int, seed: int, denominator: int = 64):
    """Deterministic rational sample points inside a coordinate box."""
    rng = random.Random(seed)
    box = [(as_fraction(lo), as_fraction(hi)) for lo, hi in box]
    points = []
    for _ in range(count):
        points.append(tuple(
            lo + (hi - lo) * Fraction(rng.randint(0, denominator), denominator)
            for lo, hi in box))
    return points


def check_morphism_data(phi: MorphismData, *, source_box=None, target_box=None,
                        samples: int = 32, seed: int = 0) -> MorphismReport:
    """Validation report: degree homogeneity, plus an optional sampled range check.

    When both boxes are given, the base map is evaluated at rational
    sample points of the source box and must land inside the target box.
    """
    problems = list(phi.degree_problems())
    if source_box is not None and target_box is not None:
        target_box = [(as_fraction(lo), as_fraction(hi)) for lo, hi in target_box]
        for point in sample_box_points(source_box, samples, seed):
            image = phi.base_map_at(point)
            for value, (lo, hi) in zip(image, target_box):
                if not (lo <= value <= hi):
                    problems.append(
                        f"base map sends {tuple(point)} to {tuple(image)}, "
                        f"outside the target box")
                    break
            else:
                continue
            break
    return MorphismReport(not problems, tuple(problems))


@dataclass
class Jacobian:
    """Matrix of left partial derivatives of the coordinate pullbacks.

    Row (target coordinate w) and column (source coordinate v) hold
    d_v(pullback of w), homogeneous of degree deg w + deg v; the matrix
    is degree zero in the graded sense.
    """

    row_names: tuple[str, ...]
    col_names: tuple[str, ...]
    entries: list[list[GradedSeries]]

    def entry(self, row: str, col: str) -> GradedSeries:
        return self.entries[self.row_names.index(row)][self.col_names.index(col)]

    def to_json(self) -> dict:
        return {
            "rows": list(self.row_names),
            "cols": list(self.col_names),
            "entries": [[str(e) for e in row] for row in self.entries],
        }


def jacobian(phi: MorphismData) -> Jacobian:
    phi.ensure_valid()
    rows = phi.target.coordinate_names()
    cols = phi.source.coordinate_names()
    entries = [[phi.pullbacks[w].derivative(v) for v in cols] for w in rows]
    return Jacobian(rows, cols, entries)


def base_map_commutes(phi: MorphismData, section: GradedSeries) -> bool:
    """Whether base projection commutes with pullback on this section."""
    lhs = phi.pullback(section).base_project()
    rhs = section.base_project().evaluate(phi._base_env())
    if isinstance(rhs, Fraction):
        rhs = Polynomial.constant(phi.source.base_vars, rhs)
    return lhs == rhs


# -- germs and jets -------------------------------------------------------------


def madic_order(section: GradedSeries, point: Sequence):
    """Largest power of the maximal ideal at the point containing the germ.

    Computed as the minimum over terms of (vanishing order of the
    coefficient at the point) + (formal order); inf for the zero series.
    """
    point = [as_fraction(a) for a in point]
    if len(point) != len(section.domain.base_vars):
        raise ValidationError("point dimension does not match the base")
    best = float("inf")
    for mu, coeff in section.terms.items():
        best = min(best, coeff.vanishing_order_at(point) + sum(mu))
    return best


def _truncate_poly_total_degree(poly: Polynomial, max_degree: int) -> Polynomial:
    return Polynomial(poly.vars,
                      {e: c for e, c in poly.terms.items() if sum(e) <= max_degree})


class Jet:
    """Weight-truncated germ of a series at a rational base point.

    Coefficients are polynomials in the shifted variables (x - center);
    a term's weight is its shifted total degree plus its formal order.
    `order` is the largest stored weight.
    """

    __slots__ = ("domain", "center", "order", "terms")

    def __init__(self, domain: DomainSpec, center: Sequence, order: int,
                 terms: Mapping[tuple, Polynomial] | None = None):
        self.domain = domain
        self.center = tuple(as_fraction(a) for a in center)
        if len(self.center) != len(domain.base_vars):
            raise ValidationError("jet center dimension does not match the base")
        self.order = int(order)
        if self.order < 0:
            raise ValidationError("jet order must be non-negative")
        clean = {}
        if terms:
            for mu, coeff in terms.items():
                mu = domain.validate_monomial(mu)
                room = self.order - sum(mu)
                if room < 0:
                    continue
                if not isinstance(coeff, Polynomial):
                    coeff = Polynomial.constant(domain.base_vars, coeff)
                coeff = _truncate_poly_total_degree(coeff, room)
                if not coeff.is_zero():
                    clean[mu] = clean[mu] + coeff if mu in clean else coeff
                    if clean[mu].is_zero():
                        del clean[mu]
        self.terms = clean

    @classmethod
    def constant(cls, domain: DomainSpec, center, order: int, value) -> "Jet":
        return cls(domain, center, order, {domain.empty_monomial(): value})

    def _compatible(self, other: "Jet"):
        if (self.domain != other.domain or self.center != other.center
                or self.order != other.order):
            raise DomainMismatchError("jets live at different centers or orders")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Jet.constant(self.domain, self.center, self.order, other)
        self._compatible(other)
        terms = dict(self.terms)
        for mu, coeff in other.terms.items():
            acc = terms[mu] + coeff if mu in terms else coeff
            if acc.is_zero():
                terms.pop(mu, None)
            else:
                terms[mu] = acc
        out = Jet(self.domain, self.center, self.order)
        out.terms = terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Jet(self.domain, self.center, self.order)
        out.terms = {mu: -c for mu, c in self.terms.items()}
        return out

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Jet.constant(self.domain, self.center, self.order, other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            out = Jet(self.domain, self.center, self.order)
            q = as_fraction(other)
            out.terms = {} if q == 0 else {mu: c * q for mu, c in self.terms.items()}
            return out
        self._compatible(other)
        terms: dict[tuple, Polynomial] = {}
        for mu, p in self.terms.items():
            for nu, q in other.terms.items():
                sign, combined = merge_monomials(self.domain, mu, nu)
                if combined is None:
                    continue
                room = self.order - sum(combined)
                if room < 0:
                    continue
                coeff = _truncate_poly_total_degree(p * q, room)
                if sign < 0:
                    coeff = -coeff
                if coeff.is_zero():
                    continue
                acc = terms[combined] + coeff if combined in terms else coeff
                if acc.is_zero():
                    terms.pop(combined, None)
                else:
                    terms[combined] = acc
        out = Jet(self.domain, self.center, self.order)
        out.terms = terms
        return out

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Jet.constant(self.domain, self.center, self.order, other)
        return (
            isinstance(other, Jet)
            and self.domain == other.domain
            and self.center == other.center
            and self.order == other.order
            and self.terms == other.terms
        )

    __hash__ = None

    def as_series(self) -> GradedSeries:
        """Back to a series over the domain, unshifting the base variables."""
        neg_center = [-a for a in self.center]
        return GradedSeries(self.domain, {
            mu: coeff.taylor_shift(neg_center) for mu, coeff in self.terms.items()
        })

    def __repr__(self) -> str:
        return f"Jet(center={self.center}, order={self.order}, value={self.as_series()})"


def jet_at(section: GradedSeries, point: Sequence, k: int) -> Jet:
    """Polynomial approximation whose difference from the section has weight >= k.

    Keeps, for each monomial with fewer than k formal factors, the
    shifted Taylor truncation of its coefficient to degree k - |mu| - 1;
    the result is a jet of order k-1.
    """
    if k < 1:
        raise ValidationError("approximation degree k must be at least 1")
    point = [as_fraction(a) for a in point]
    terms = {}
    for mu, coeff in section.terms.items():
        if sum(mu) >= k:
            continue
        terms[mu] = coeff.taylor_shift(point)
    return Jet(section.domain, point, k - 1, terms)


def germ_invert(section: GradedSeries, point: Sequence, k: int) -> Jet:
    """Jet of order k inverting the germ of the section at the point.

    Requires the independent term not to vanish at the point; the
    result g satisfies jet(section * g) == 1 up to weight k.
    """
    point = [as_fraction(a) for a in point]
    f0 = section.base_project()
    value = f0.evaluate(dict(zip(section.domain.base_vars, point)))
    if isinstance(value, Polynomial):
        value = value.constant_value()
    if value == 0:
        raise NotInvertibleError(f"independent term vanishes at {tuple(point)}")
    jf = jet_at(section, point, k + 1)
    w = jf - value
    u = w * (Fraction(-1) / value)
    acc = Jet.constant(section.domain, point, k, 1)
    power = acc
    for _ in range(k):
        power = power * u
        if not power.terms:
            break
        acc = acc + power
    return acc * (Fraction(1) / value)
