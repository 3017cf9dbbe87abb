"""Exact symbolic computation for Z2^n-graded commutative algebra.

Degrees, sign rules, and sign-table realization live in `grading`;
truncated graded power series over exact polynomial coefficients in
`series`; superdomain morphisms, pullbacks, and jets in `morphism`;
charts, cocycles, tangent lifts, and bundle superization in `atlas`;
color Clifford algebras in `clifford`; the expression DSL in `expr`
and the command-line front end in `cli`.
"""

from .errors import (
    DimensionError,
    DomainMismatchError,
    MissingTransitionError,
    NotInvertibleError,
    ParseError,
    TruncationError,
    UnknownSymbolError,
    ValidationError,
    ZsupError,
)
from .grading import (
    Degree,
    DegreeAssignment,
    SignTable,
    commutation_sign,
    enumerate_degrees,
    minimize_assignment,
    parity,
    realize_sign_table,
    scalar_product,
    verify_assignment,
)
from .polynomial import Polynomial, as_fraction
from .series import (
    DomainSpec,
    FormalVar,
    GradedSeries,
    enumerate_monomials,
    merge_monomials,
    normalize_product,
    parse_series,
)
from .morphism import (
    Jacobian,
    Jet,
    MorphismData,
    base_map_commutes,
    check_morphism_data,
    compose,
    germ_invert,
    identity_morphism,
    jacobian,
    jet_at,
    madic_order,
)
from .atlas import (
    Atlas,
    Chart,
    CocycleResult,
    NVBSpec,
    Transition,
    check_all_cocycles,
    check_cocycle,
    compose_nvb_specs,
    superize_dvb,
    superize_nvb,
    tangent_lift,
    tangent_lift_atlas,
    tangent_lift_domain,
    tangent_lift_morphism,
)
from .clifford import (
    CliffordElement,
    CliffordPresentation,
    ColorCommResult,
    StructureConstantAlgebra,
    check_color_commutative,
    clifford_mul,
    parse_clifford,
    quaternion_algebra,
)
from .expr import parse_expression

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
