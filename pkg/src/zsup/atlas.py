"""Charts, transitions, cocycle checks, tangent lifts, and bundle superization.

Equalities of transitions are symbolic (canonical term maps at the
truncation order); open-set geometry (ranges, invertibility) is checked
at sampled rational points only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import expr as expr_mod
from .errors import (
    DomainMismatchError,
    MissingTransitionError,
    ValidationError,
)
from .grading import Degree
from .morphism import (
    MorphismData,
    check_morphism_data,
    compose,
    identity_morphism,
    sample_box_points,
)
from .polynomial import Polynomial, as_fraction, fraction_to_json
from .series import DomainSpec, GradedSeries, parse_series


Box = tuple[tuple[Fraction, Fraction], ...]


def _parse_box(data) -> Box | None:
    if data is None:
        return None
    return tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in data)


def _box_to_json(box: Box | None):
    if box is None:
        return None
    return [[fraction_to_json(lo), fraction_to_json(hi)] for lo, hi in box]


def _boxes_intersect(a: Box, b: Box) -> bool:
    return all(max(lo1, lo2) <= min(hi1, hi2)
               for (lo1, hi1), (lo2, hi2) in zip(a, b))


@dataclass(frozen=True)
class Chart:
    """A coordinate system with the rational box it ranges over."""

    id: str
    domain: DomainSpec
    base_box: Box | None = None

    def to_json(self) -> dict:
        return {"id": self.id, "domain": self.domain.to_json(),
                "base_box": _box_to_json(self.base_box)}

    @classmethod
    def from_json(cls, data: dict) -> "Chart":
        return cls(data["id"], DomainSpec.from_json(data["domain"]),
                   _parse_box(data.get("base_box")))


@dataclass(frozen=True)
class Transition:
    """A coordinate transformation from one chart to another.

    `overlap` is the sub-box of the source chart's base box on which the
    transformation is defined; None means the whole chart.
    """

    from_id: str
    to_id: str
    map: MorphismData
    overlap: Box | None = None

    def to_json(self) -> dict:
        return {
            "from": self.from_id,
            "to": self.to_id,
            "overlap": _box_to_json(self.overlap),
            "pullbacks": {name: str(series)
                          for name, series in self.map.pullbacks.items()},
        }


class Atlas:
    """Charts plus transitions indexed by ordered chart pairs."""

    def __init__(self, charts: Iterable[Chart], transitions: Iterable[Transition]):
        self.charts: dict[str, Chart] = {}
        for chart in charts:
            if chart.id in self.charts:
                raise ValidationError(f"duplicate chart id {chart.id!r}")
            self.charts[chart.id] = chart
        self.transitions: dict[tuple[str, str], Transition] = {}
        for t in self.transitions_input_order(transitions):
            key = (t.from_id, t.to_id)
            if key in self.transitions:
                raise ValidationError(f"duplicate transition {key}")
            for cid in key:
                if cid not in self.charts:
                    raise ValidationError(f"transition references unknown chart {cid!r}")
            if t.map.source != self.charts[t.from_id].domain:
                raise DomainMismatchError(
                    f"transition {key}: map source differs from chart domain")
            if t.map.target != self.charts[t.to_id].domain:
                raise DomainMismatchError(
                    f"transition {key}: map target differs from chart domain")
            self.transitions[key] = t
        for (a, b) in list(self.transitions):
            if a != b and (b, a) not in self.transitions:
                raise ValidationError(f"transition {(a, b)} has no inverse-direction partner")
            if a == b and self.transitions[(a, b)].map != identity_morphism(
                    self.charts[a].domain):
                raise ValidationError(f"self-transition on {a!r} is not the identity")

    @staticmethod
    def transitions_input_order(transitions):
        return list(transitions)

    def chart_ids(self) -> list[str]:
        return sorted(self.charts)

    def transition(self, from_id: str, to_id: str) -> Transition:
        if from_id == to_id and (from_id, to_id) not in self.transitions:
            chart = self.charts[from_id]
            return Transition(from_id, to_id, identity_morphism(chart.domain),
                              chart.base_box)
        try:
            return self.transitions[(from_id, to_id)]
        except KeyError:
            raise MissingTransitionError(
                f"no transition from {from_id!r} to {to_id!r}") from None

    def to_json(self) -> dict:
        return {
            "charts": [self.charts[cid].to_json() for cid in self.chart_ids()],
            "transitions": [self.transitions[key].to_json()
                            for key in sorted(self.transitions)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Atlas":
        charts = [Chart.from_json(c) for c in data["charts"]]
        by_id = {c.id: c for c in charts}
        transitions = []
        for t in data["transitions"]:
            source = by_id[t["from"]].domain
            target = by_id[t["to"]].domain
            pullbacks = {name: parse_series(text, source)
                         for name, text in t["pullbacks"].items()}
            transitions.append(Transition(
                t["from"], t["to"], MorphismData(source, target, pullbacks),
                _parse_box(t.get("overlap"))))
        return cls(charts, transitions)

    @classmethod
    def load(cls, path) -> "Atlas":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class CocycleResult:
    triple: tuple[str, str, str]
    ok: bool
    counterexample_coordinate: str | None = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"triple": list(self.triple), "ok": self.ok,
                "counterexample_coordinate": self.counterexample_coordinate}


def check_cocycle(atlas: Atlas, triple: tuple[str, str, str]) -> CocycleResult:
    """Whether the transitions around one ordered triple compose consistently.

    For triple (a, b, g) this compares the composite of (a -> g) followed
    by (g -> b) against the direct (a -> b), coordinate by coordinate.
    """
    a, b, g = triple
    t_ga = atlas.transition(a, g)
    t_bg = atlas.transition(g, b)
    t_ba = atlas.transition(a, b)
    boxes = [t.overlap for t in (t_ga, t_ba)]
    if all(box is not None for box in boxes) and not _boxes_intersect(*boxes):
        raise ValidationError(f"triple {triple} has empty overlap")
    composite = compose(t_bg.map, t_ga.map)
    direct = t_ba.map
    for name in direct.target.coordinate_names():
        if composite.pullbacks[name] != direct.pullbacks[name]:
            return CocycleResult(tuple(triple), False, name)
    return CocycleResult(tuple(triple), True)


def check_all_cocycles(atlas: Atlas) -> list[CocycleResult]:
    """Cocycle results for every ordered triple of chart ids (repeats included)."""
    ids = atlas.chart_ids()
    results = []
    for a in ids:
        for b in ids:
            for g in ids:
                results.append(check_cocycle(atlas, (a, b, g)))
    return results


# -- tangent lift ----------------------------------------------------------------


DOT_SUFFIX = "_dot"


def tangent_lift_domain(domain: DomainSpec, order: int | None = None) -> DomainSpec:
    """Doubled domain of rank n+1: every coordinate u gains a partner u_dot.

    Original degrees embed as (0, d); the partner of a coordinate of
    degree d has degree (1, d).  The default truncation order grows by
    one to make room for the extra dotted factor.
    """
    dotted_base = [(x + DOT_SUFFIX, Degree((1,) + (0,) * domain.n))
                   for x in domain.base_vars]
    lifted_formals = [(fv.name, Degree((0,) + tuple(fv.degree)))
                      for fv in domain.formal_vars]
    dotted_formals = [(fv.name + DOT_SUFFIX, Degree((1,) + tuple(fv.degree)))
                      for fv in domain.formal_vars]
    if order is None:
        order = domain.truncation_order + 1
    return DomainSpec(domain.n + 1, domain.base_vars,
                      dotted_base + lifted_formals + dotted_formals, order)


def embed_series(series: GradedSeries, lifted: DomainSpec) -> GradedSeries:
    """Reinterpret a series in the lifted domain (no dotted factors).

    The embedding preserves the relative canonical order of the original
    formal variables, so no signs appear.
    """
    index_map = [lifted.formal_index(fv.name) for fv in series.domain.formal_vars]
    width = lifted.q
    terms = {}
    for mu, coeff in series.terms.items():
        new_mu = [0] * width
        for i, e in enumerate(mu):
            new_mu[index_map[i]] = e
        terms[tuple(new_mu)] = coeff
    return GradedSeries(lifted, terms)


def tangent_lift_morphism(phi: MorphismData,
                          lifted_source: DomainSpec | None = None,
                          lifted_target: DomainSpec | None = None) -> MorphismData:
    """Tangent prolongation: dotted pullbacks are u_dot' = sum_v v_dot d_v(u')."""
    phi.ensure_valid()
    lifted_source = lifted_source or tangent_lift_domain(phi.source)
    lifted_target = lifted_target or tangent_lift_domain(phi.target)
    pullbacks: dict[str, GradedSeries] = {}
    for name in phi.target.coordinate_names():
        original = phi.pullbacks[name]
        pullbacks[name] = embed_series(original, lifted_source)
        dotted = GradedSeries.zero(lifted_source)
        for v in phi.source.coordinate_names():
            partial = original.derivative(v)
            if partial.is_zero():
                continue
            v_dot = GradedSeries.generator(lifted_source, v + DOT_SUFFIX)
            dotted = dotted + v_dot * embed_series(partial, lifted_source)
        pullbacks[name + DOT_SUFFIX] = dotted
    return MorphismData(lifted_source, lifted_target, pullbacks)


def tangent_lift(transition: Transition, order: int | None = None) -> Transition:
    source = tangent_lift_domain(transition.map.source, order)
    target = tangent_lift_domain(transition.map.target, order)
    lifted = tangent_lift_morphism(transition.map, source, target)
    return Transition(transition.from_id, transition.to_id, lifted,
                      transition.overlap)


def tangent_lift_atlas(atlas: Atlas, order: int | None = None) -> Atlas:
    charts = [Chart(c.id, tangent_lift_domain(c.domain, order), c.base_box)
              for c in (atlas.charts[cid] for cid in atlas.chart_ids())]
    transitions = [tangent_lift(atlas.transitions[key], order)
                   for key in sorted(atlas.transitions)]
    return Atlas(charts, transitions)


# -- n-fold vector bundle superization --------------------------------------------


def _as_poly_matrix(entries, base_vars) -> list[list[Polynomial]]:
    out = []
    for row in entries:
        out.append([_as_poly(e, base_vars) for e in row])
    return out


def _as_poly(entry, base_vars) -> Polynomial:
    if isinstance(entry, Polynomial):
        if entry.vars != tuple(base_vars):
            raise ValidationError("structure polynomial over wrong variables")
        return entry
    if isinstance(entry, (int, Fraction)):
        return Polynomial.constant(base_vars, entry)
    return expr_mod.parse_polynomial(str(entry), tuple(base_vars))


class NVBSpec:
    """Double-vector-bundle transition data (the n=2 specialization).

    x' = phi(x), xi' = a(x) xi, eta' = b(x) eta, psi' = c(x) psi + d(x) xi eta,
    with polynomial entries; a, b, c must be invertible where sampled.
    """

    def __init__(self, base_vars: Sequence[str], phi, a, b, c, d,
                 truncation_order: int = 6):
        self.base_vars = tuple(base_vars)
        self.phi = [_as_poly(e, self.base_vars) for e in phi]
        if len(self.phi) != len(self.base_vars):
            raise ValidationError("phi must give one polynomial per base variable")
        self.a = _as_poly_matrix(a, self.base_vars)
        self.b = _as_poly_matrix(b, self.base_vars)
        self.c = _as_poly_matrix(c, self.base_vars)
        for name, mat in (("a", self.a), ("b", self.b), ("c", self.c)):
            if any(len(row) != len(mat) for row in mat):
                raise ValidationError(f"matrix {name} must be square")
        q1, q2, q3 = len(self.a), len(self.b), len(self.c)
        if len(d) != q3 or any(len(plane) != q1 for plane in d) or any(
                len(row) != q2 for plane in d for row in plane):
            raise ValidationError(f"d must have shape {q3}x{q1}x{q2}")
        self.d = [[[_as_poly(d[k][i][j], self.base_vars)
                    for j in range(q2)] for i in range(q1)] for k in range(q3)]
        self.truncation_order = int(truncation_order)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (len(self.a), len(self.b), len(self.c))

    def coordinate_names(self) -> list[tuple[str, Degree]]:
        q1, q2, q3 = self.dims
        out = []
        for group, count, degree in (("xi", q1, Degree((0, 1))),
                                     ("eta", q2, Degree((1, 0))),
                                     ("psi", q3, Degree((1, 1)))):
            if count == 1:
                out.append((group, degree))
            else:
                out.extend((f"{group}{i + 1}", degree) for i in range(count))
        return out

    def domain(self) -> DomainSpec:
        return DomainSpec(2, self.base_vars, self.coordinate_names(),
                          self.truncation_order)

    def to_json(self) -> dict:
        return {
            "base_vars": list(self.base_vars),
            "phi": [str(p) for p in self.phi],
            "a": [[str(e) for e in row] for row in self.a],
            "b": [[str(e) for e in row] for row in self.b],
            "c": [[str(e) for e in row] for row in self.c],
            "d": [[[str(e) for e in row] for row in plane] for plane in self.d],
            "truncation_order": self.truncation_order,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NVBSpec":
        return cls(data["base_vars"], data["phi"], data["a"], data["b"],
                   data["c"], data["d"], data.get("truncation_order", 6))

    @classmethod
    def load(cls, path) -> "NVBSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def superize_dvb(spec: NVBSpec, from_id: str = "source", to_id: str = "target",
                 d_factor_order: tuple[str, str] = ("xi", "eta")) -> Transition:
    """Reinterpret double-vector-bundle data as a rank-2 graded transition.

    The xi and eta factors of the d-term commute (their degrees have
    scalar product zero), so `d_factor_order` cannot change the result.
    """
    domain = spec.domain()
    q1, q2, q3 = spec.dims
    names = [name for name, _ in spec.coordinate_names()]
    xi_names, eta_names, psi_names = (names[:q1], names[q1:q1 + q2],
                                      names[q1 + q2:])

    def gen(name: str) -> GradedSeries:
        return GradedSeries.generator(domain, name)

    pullbacks: dict[str, GradedSeries] = {}
    for x, poly in zip(spec.base_vars, spec.phi):
        pullbacks[x] = GradedSeries.from_polynomial(domain, poly)
    for i, name in enumerate(xi_names):
        acc = GradedSeries.zero(domain)
        for j, src in enumerate(xi_names):
            acc = acc + gen(src) * spec.a[i][j]
        pullbacks[name] = acc
    for i, name in enumerate(eta_names):
        acc = GradedSeries.zero(domain)
        for j, src in enumerate(eta_names):
            acc = acc + gen(src) * spec.b[i][j]
        pullbacks[name] = acc
    for k, name in enumerate(psi_names):
        acc = GradedSeries.zero(domain)
        for l, src in enumerate(psi_names):
            acc = acc + gen(src) * spec.c[k][l]
        for i, xi in enumerate(xi_names):
            for j, eta in enumerate(eta_names):
                if d_factor_order == ("xi", "eta"):
                    product = gen(xi) * gen(eta)
                elif d_factor_order == ("eta", "xi"):
                    product = gen(eta) * gen(xi)
                else:
                    raise ValidationError(f"bad d_factor_order {d_factor_order}")
                acc = acc + product * spec.d[k][i][j]
        pullbacks[name] = acc
    return Transition(from_id, to_id, MorphismData(domain, domain, pullbacks))


def compose_nvb_specs(outer: NVBSpec, inner: NVBSpec) -> NVBSpec:
    """Transition data of the composite bundle map (inner first, then outer)."""
    if outer.dims != inner.dims or outer.base_vars != inner.base_vars:
        raise DomainMismatchError("bundle shapes differ")
    env = dict(zip(outer.base_vars, inner.phi))

    def shift(poly: Polynomial) -> Polynomial:
        value = poly.evaluate(env)
        if isinstance(value, Fraction):
            return Polynomial.constant(inner.base_vars, value)
        return value

    def mat_mul(m_outer, m_inner):
        size = len(m_outer)
        return [[sum((shift(m_outer[i][k]) * m_inner[k][j] for k in range(size)),
                     Polynomial.zero(inner.base_vars))
                 for j in range(size)] for i in range(size)]

    phi = [shift(p) for p in outer.phi]
    a = mat_mul(outer.a, inner.a)
    b = mat_mul(outer.b, inner.b)
    c = mat_mul(outer.c, inner.c)
    q1, q2, q3 = inner.dims
    d = []
    for k in range(q3):
        plane = []
        for i in range(q1):
            row = []
            for j in range(q2):
                acc = Polynomial.zero(inner.base_vars)
                for l in range(q3):
                    acc = acc + shift(outer.c[k][l]) * inner.d[l][i][j]
                for ip in range(q1):
                    for jp in range(q2):
                        acc = acc + (shift(outer.d[k][ip][jp])
                                     * inner.a[ip][i] * inner.b[jp][j])
                row.append(acc)
            plane.append(row)
        d.append(plane)
    return NVBSpec(inner.base_vars, phi, a, b, c, d, inner.truncation_order)


def superize_nvb(n: int, base_vars: Sequence[str], coords: Sequence,
                 phi, terms: Mapping[str, Sequence], truncation_order: int = 6,
                 from_id: str = "source", to_id: str = "target") -> Transition:
    """Superize general n-fold vector bundle transition data.

    `coords` lists the formal coordinates as (name, degree) with degrees
    in {0,1}^n; `terms[name]` is a list of (coefficient, word) pairs.
    Every word must consist of coordinates whose degrees have pairwise
    disjoint supports summing to the target coordinate's degree; data
    violating this is not n-fold-vector-bundle shaped and is rejected.
    """
    base_vars = tuple(base_vars)
    coord_list = []
    for entry in coords:
        name, degree = (entry["name"], entry["degree"]) if isinstance(entry, dict) \
            else entry
        coord_list.append((str(name), Degree(degree)))
    degree_of = dict(coord_list)
    domain = DomainSpec(n, base_vars, coord_list, truncation_order)

    pullbacks: dict[str, GradedSeries] = {}
    phi_polys = [_as_poly(e, base_vars) for e in phi]
    if len(phi_polys) != len(base_vars):
        raise ValidationError("phi must give one polynomial per base variable")
    for x, poly in zip(base_vars, phi_polys):
        pullbacks[x] = GradedSeries.from_polynomial(domain, poly)

    for name, degree in coord_list:
        acc = GradedSeries.zero(domain)
        for coeff, word in terms.get(name, ()):
            total = [0] * n
            for sym in word:
                if sym not in degree_of:
                    raise ValidationError(f"unknown coordinate {sym!r} in word for {name!r}")
                for idx, bit in enumerate(degree_of[sym]):
                    total[idx] += bit
            if any(v > 1 for v in total):
                raise ValidationError(
                    f"word {word} for {name!r} multiplies coordinates with "
                    f"overlapping degree supports")
            if tuple(total) != tuple(degree):
                raise ValidationError(
                    f"word {word} has degree {tuple(total)}, but {name!r} has "
                    f"degree {tuple(degree)}")
            factor = GradedSeries.from_polynomial(domain, _as_poly(coeff, base_vars))
            for sym in word:
                factor = factor * GradedSeries.generator(domain, sym)
            acc = acc + factor
        pullbacks[name] = acc
    return Transition(from_id, to_id, MorphismData(domain, domain, pullbacks))


# -- sampled geometry checks -------------------------------------------------------


def determinant(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant by fraction-free-ish Gaussian elimination."""
    size = len(matrix)
    rows = [list(map(Fraction, row)) for row in matrix]
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        det *= rows[col][col]
        inv = Fraction(1) / rows[col][col]
        for r in range(col + 1, size):
            factor = rows[r][col] * inv
            if factor == 0:
                continue
            for c2 in range(col, size):
                rows[r][c2] -= factor * rows[col][c2]
    return det


def verify_transition(atlas: Atlas, transition: Transition, samples: int = 8,
                      seed: int = 0) -> list[str]:
    """Sampled geometric checks for one transition; returns problem messages.

    Checks degree homogeneity, that the base map lands in the target
    chart's box, and that the base Jacobian is nonsingular at sampled
    points of the overlap.
    """
    source_chart = atlas.charts[transition.from_id]
    target_chart = atlas.charts[transition.to_id]
    box = transition.overlap or source_chart.base_box
    report = check_morphism_data(transition.map, source_box=box,
                                 target_box=target_chart.base_box,
                                 samples=samples, seed=seed)
    problems = list(report.problems)
    if box is not None:
        base = transition.map.base_map()
        names = transition.map.source.base_vars
        for point in sample_box_points(box, samples, seed):
            values = dict(zip(names, point))
            rows = []
            for poly in base:
                row = []
                for x in names:
                    value = poly.derivative(x).evaluate(values)
                    row.append(value if isinstance(value, Fraction)
                               else value.constant_value())
                rows.append(row)
            if determinant(rows) == 0:
                problems.append(
                    f"base Jacobian of ({transition.from_id}->{transition.to_id}) "
                    f"is singular at {tuple(point)}")
                break
    return problems


def verify_atlas(atlas: Atlas, samples: int = 8, seed: int = 0) -> list[str]:
    problems = []
    for key in sorted(atlas.transitions):
        problems.extend(verify_transition(atlas, atlas.transitions[key],
                                          samples, seed))
    return problems
