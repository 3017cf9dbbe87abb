"""Batch command-line front end and script runner.

Exit codes: 0 success, 1 verification failure (a check command found a
violation), 2 input error (bad syntax, bad files, evaluation errors).
Output is deterministic; set ZSUP_COLOR=1 for colored pass/fail markers.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from dataclasses import dataclass, field

from . import atlas as atlas_mod
from . import clifford as clifford_mod
from . import expr as expr_mod
from . import grading
from . import morphism as morphism_mod
from .errors import ValidationError, ZsupError
from .polynomial import as_fraction
from .series import DomainSpec, GradedSeries, evaluate_series


@dataclass
class ScriptState:
    """Active domain and let-bindings of a running script."""

    domain: DomainSpec | None = None
    bindings: dict[str, GradedSeries] = field(default_factory=dict)


def _color_enabled() -> bool:
    return os.environ.get("ZSUP_COLOR", "0") == "1"


def _mark(ok: bool) -> str:
    word = "ok" if ok else "FAIL"
    if _color_enabled():
        code = "32" if ok else "31"
        return f"\x1b[{code}m{word}\x1b[0m"
    return word


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _resolve_domain(ns, state: ScriptState) -> DomainSpec:
    domain = None
    if getattr(ns, "domain", None):
        domain = DomainSpec.load(ns.domain)
    elif state.domain is not None:
        domain = state.domain
    if domain is None:
        raise ValidationError("no domain in scope: pass --domain or declare one")
    order = getattr(ns, "order", None)
    if order is not None:
        domain = domain.with_truncation_order(order)
    return domain


def _eval(ns, text: str, state: ScriptState) -> GradedSeries:
    domain = _resolve_domain(ns, state)
    node = expr_mod.parse_expression(text)
    return evaluate_series(node, domain, state.bindings)


def _parse_point(text: str):
    return [as_fraction(part.strip()) for part in text.split(",")]


def _emit(payload: dict, lines: list[str], output: str):
    if output == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in lines:
            print(line)


# -- command handlers -------------------------------------------------------------


def _cmd_invert(ns, state):
    series = _eval(ns, ns.expr, state)
    result = series.invert()
    return 0, {"result": str(result)}, [str(result)]


def _cmd_decompose(ns, state):
    series = _eval(ns, ns.expr, state)
    components = series.homogeneous_components()
    payload = {"components": [
        {"degree": list(d), "series": str(s)} for d, s in components.items()]}
    lines = [f"degree {tuple(d)}: {s}" for d, s in components.items()] or ["0"]
    return 0, payload, lines


def _cmd_pullback(ns, state):
    phi = morphism_mod.MorphismData.load(ns.morphism)
    node = expr_mod.parse_expression(ns.expr)
    section = evaluate_series(node, phi.target, {})
    result = phi.pullback(section)
    return 0, {"result": str(result)}, [str(result)]


def _cmd_compose(ns, state):
    outer = morphism_mod.MorphismData.load(ns.outer)
    inner = morphism_mod.MorphismData.load(ns.inner)
    composite = morphism_mod.compose(outer, inner)
    payload = composite.to_json()
    lines = [f"{name} -> {text}" for name, text in payload["pullbacks"].items()]
    return 0, payload, lines


def _cmd_check_morphism(ns, state):
    phi = morphism_mod.MorphismData.load(ns.morphism)
    report = morphism_mod.check_morphism_data(phi, samples=ns.samples, seed=ns.seed)
    payload = {"ok": report.ok, "problems": list(report.problems)}
    lines = [f"morphism: {_mark(report.ok)}"] + [f"  {p}" for p in report.problems]
    return (0 if report.ok else 1), payload, lines


def _cmd_jacobian(ns, state):
    phi = morphism_mod.MorphismData.load(ns.morphism)
    jac = morphism_mod.jacobian(phi)
    payload = jac.to_json()
    lines = []
    for w, row in zip(jac.row_names, jac.entries):
        for v, entry in zip(jac.col_names, row):
            lines.append(f"d({w})/d({v}) = {entry}")
    return 0, payload, lines


def _cmd_check_cocycle(ns, state):
    atl = atlas_mod.Atlas.load(ns.atlas)
    results = atlas_mod.check_all_cocycles(atl)
    payload = {"results": [r.to_json() for r in results],
               "ok": all(r.ok for r in results)}
    lines = []
    for r in results:
        extra = "" if r.ok else f"  (coordinate {r.counterexample_coordinate})"
        lines.append(f"{','.join(r.triple)}: {_mark(r.ok)}{extra}")
    return (0 if payload["ok"] else 1), payload, lines


def _cmd_tangent_lift(ns, state):
    data = _load_json(ns.file)
    if "charts" in data:
        lifted = atlas_mod.tangent_lift_atlas(atlas_mod.Atlas.from_json(data))
        payload = lifted.to_json()
        lines = [json.dumps(payload, sort_keys=True)]
    elif "source" in data:
        phi = morphism_mod.MorphismData.from_json(data)
        lifted = atlas_mod.tangent_lift_morphism(phi)
        payload = lifted.to_json()
        lines = [f"{name} -> {text}" for name, text in payload["pullbacks"].items()]
    else:
        raise ValidationError("file is neither an atlas nor a morphism")
    return 0, payload, lines


def _transition_payload(transition):
    return {
        "from": transition.from_id,
        "to": transition.to_id,
        "morphism": transition.map.to_json(),
    }


def _cmd_superize_dvb(ns, state):
    spec = atlas_mod.NVBSpec.load(ns.spec)
    transition = atlas_mod.superize_dvb(spec)
    payload = _transition_payload(transition)
    lines = [f"{name} -> {text}"
             for name, text in payload["morphism"]["pullbacks"].items()]
    return 0, payload, lines


def _cmd_superize_nvb(ns, state):
    data = _load_json(ns.spec)
    terms = {name: [(entry["coeff"], entry["word"]) for entry in entries]
             for name, entries in data["terms"].items()}
    transition = atlas_mod.superize_nvb(
        data["n"], data["base_vars"], data["coords"], data["phi"], terms,
        data.get("truncation_order", 6))
    payload = _transition_payload(transition)
    lines = [f"{name} -> {text}"
             for name, text in payload["morphism"]["pullbacks"].items()]
    return 0, payload, lines


def _cmd_realize_signs(ns, state):
    table = grading.SignTable.load(ns.table)
    assignment = grading.realize_sign_table(table)
    if ns.minimize:
        assignment = grading.minimize_assignment(assignment)
    verified = grading.verify_assignment(table, assignment)
    payload = assignment.to_json() | {"verified": verified}
    lines = [f"sigma_{i + 1} = {tuple(s)}" for i, s in enumerate(assignment.sigmas)]
    lines.append(f"verified: {_mark(verified)}")
    return (0 if verified else 1), payload, lines


def _cmd_verify_signs(ns, state):
    table = grading.SignTable.load(ns.table)
    assignment = grading.DegreeAssignment.load(ns.assignment)
    ok = grading.verify_assignment(table, assignment)
    return (0 if ok else 1), {"ok": ok}, [f"assignment: {_mark(ok)}"]


def _cmd_clifford_mul(ns, state):
    pres = clifford_mod.CliffordPresentation.load(ns.presentation)
    u = clifford_mod.parse_clifford(ns.left, pres)
    v = clifford_mod.parse_clifford(ns.right, pres)
    result = clifford_mod.clifford_mul(pres, u, v)
    return 0, {"result": str(result)}, [str(result)]


def _cmd_check_color_comm(ns, state):
    algebra = clifford_mod.StructureConstantAlgebra.load(ns.algebra)
    result = clifford_mod.check_color_commutative(algebra)
    payload = result.to_json()
    line = f"color-commutative: {_mark(result.ok)}"
    if not result.ok:
        line += f"  (counterexample {result.counterexample})"
    return (0 if result.ok else 1), payload, [line]


def _cmd_jet(ns, state):
    series = _eval(ns, ns.expr, state)
    point = _parse_point(ns.at)
    jet = morphism_mod.jet_at(series, point, ns.k)
    approx = jet.as_series()
    payload = {"center": [str(a) for a in jet.center], "order": jet.order,
               "series": str(approx)}
    return 0, payload, [str(approx)]


def _cmd_madic_order(ns, state):
    series = _eval(ns, ns.expr, state)
    point = _parse_point(ns.at)
    order = morphism_mod.madic_order(series, point)
    text = "inf" if order == float("inf") else str(order)
    return 0, {"order": text}, [text]


def _add_expr_args(sub):
    sub.add_argument("expr", help="series expression in the domain's variables")
    sub.add_argument("--domain", help="path to a domain JSON file")
    sub.add_argument("--order", type=int, help="override the truncation order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsup",
        description="Exact Z2^n-graded series, morphisms, atlases, and Clifford algebra")
    parser.add_argument("--output", choices=("text", "json"), default=None)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("text", "json"),
                        default=argparse.SUPPRESS)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=(
        lambda **kw: argparse.ArgumentParser(parents=[common], **kw)))

    sub = subs.add_parser("invert", help="invert a series with constant independent term")
    _add_expr_args(sub)
    sub.set_defaults(handler=_cmd_invert)

    sub = subs.add_parser("decompose", help="split a series into homogeneous components")
    _add_expr_args(sub)
    sub.set_defaults(handler=_cmd_decompose)

    sub = subs.add_parser("pullback", help="pull a target section back along a morphism")
    sub.add_argument("morphism", help="morphism JSON file")
    sub.add_argument("expr", help="expression over the target domain")
    sub.set_defaults(handler=_cmd_pullback)

    sub = subs.add_parser("compose", help="compose two morphisms (outer inner)")
    sub.add_argument("outer")
    sub.add_argument("inner")
    sub.set_defaults(handler=_cmd_compose)

    sub = subs.add_parser("check-morphism", help="validate morphism coordinate data")
    sub.add_argument("morphism")
    sub.add_argument("--samples", type=int, default=32)
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(handler=_cmd_check_morphism)

    sub = subs.add_parser("jacobian", help="matrix of coordinate partial derivatives")
    sub.add_argument("morphism")
    sub.set_defaults(handler=_cmd_jacobian)

    sub = subs.add_parser("check-cocycle", help="verify all transition triples of an atlas")
    sub.add_argument("atlas")
    sub.set_defaults(handler=_cmd_check_cocycle)

    sub = subs.add_parser("tangent-lift", help="lift an atlas or morphism one rank up")
    sub.add_argument("file")
    sub.set_defaults(handler=_cmd_tangent_lift)

    sub = subs.add_parser("superize-dvb", help="superize double vector bundle data")
    sub.add_argument("spec")
    sub.set_defaults(handler=_cmd_superize_dvb)

    sub = subs.add_parser("superize-nvb", help="superize n-fold vector bundle data")
    sub.add_argument("spec")
    sub.set_defaults(handler=_cmd_superize_nvb)

    sub = subs.add_parser("realize-signs", help="realize a sign table by Z2^n degrees")
    sub.add_argument("table")
    sub.add_argument("--minimize", action="store_true",
                     help="drop all-zero degree columns")
    sub.set_defaults(handler=_cmd_realize_signs)

    sub = subs.add_parser("verify-signs", help="check a degree assignment against a table")
    sub.add_argument("table")
    sub.add_argument("assignment")
    sub.set_defaults(handler=_cmd_verify_signs)

    sub = subs.add_parser("clifford-mul", help="multiply two color Clifford elements")
    sub.add_argument("presentation")
    sub.add_argument("left")
    sub.add_argument("right")
    sub.set_defaults(handler=_cmd_clifford_mul)

    sub = subs.add_parser("check-color-comm",
                          help="check a structure-constant algebra for color commutativity")
    sub.add_argument("algebra")
    sub.set_defaults(handler=_cmd_check_color_comm)

    sub = subs.add_parser("jet", help="polynomial approximation at a base point")
    _add_expr_args(sub)
    sub.add_argument("--at", required=True, help="base point, comma-separated rationals")
    sub.add_argument("--k", type=int, required=True, help="approximation degree")
    sub.set_defaults(handler=_cmd_jet)

    sub = subs.add_parser("madic-order", help="maximal-ideal order of a germ")
    _add_expr_args(sub)
    sub.add_argument("--at", required=True, help="base point, comma-separated rationals")
    sub.set_defaults(handler=_cmd_madic_order)

    sub = subs.add_parser("run", help="run a script of statements")
    sub.add_argument("script")
    sub.set_defaults(handler=None)

    return parser


@dataclass
class Script:
    """Parsed script: ordered (kind, payload) statements."""

    statements: list[tuple[str, str]]

    @classmethod
    def parse(cls, text: str) -> "Script":
        statements = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("domain "):
                statements.append(("domain", line[len("domain "):].strip()))
            elif line.startswith("let "):
                statements.append(("let", line[len("let "):].strip()))
            else:
                statements.append(("command", line))
        return cls(statements)


def run_command(argv: list[str], state: ScriptState, output: str = "text") -> int:
    """Execute one command line against the script state; returns its exit code."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit:
        return 2
    if ns.command == "run":
        raise ValidationError("nested scripts are not supported")
    code, payload, lines = ns.handler(ns, state)
    _emit(payload, lines, ns.output or output)
    return code


def run_script(script: Script, output: str = "text") -> int:
    state = ScriptState()
    worst = 0
    for kind, payload in script.statements:
        if kind == "domain":
            if payload.startswith("{"):
                state.domain = DomainSpec.from_json(json.loads(payload))
            else:
                state.domain = DomainSpec.load(payload)
            state.bindings = {}
        elif kind == "let":
            name, _, expr_text = payload.partition("=")
            name = name.strip()
            if not name.isidentifier():
                raise ValidationError(f"bad binding name {name!r}")
            if state.domain is None:
                raise ValidationError("let before any domain declaration")
            if name in state.domain.coordinate_names():
                raise ValidationError(f"{name!r} would shadow a coordinate")
            node = expr_mod.parse_expression(expr_text)
            state.bindings[name] = evaluate_series(node, state.domain, state.bindings)
        else:
            code = run_command(shlex.split(payload), state, output)
            if code == 2:
                return 2
            worst = max(worst, code)
    return worst


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        output = ns.output or "text"
        if ns.command == "run":
            with open(ns.script) as fh:
                script = Script.parse(fh.read())
            return run_script(script, output)
        code, payload, lines = ns.handler(ns, ScriptState())
        _emit(payload, lines, output)
        return code
    except ZsupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
