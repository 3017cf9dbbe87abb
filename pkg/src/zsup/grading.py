"""Z2^n degree arithmetic, sign rules, and realization of sign tables.

Degrees are n-tuples of bits that add componentwise mod 2.  The commutation
sign of two homogeneous elements is (-1)**<a,b> where <a,b> is the mod-2
scalar product of their degrees.  Any symmetric sign table on m generators
can be realized by such degrees in rank at most 2m; `realize_sign_table`
does this constructively.
"""

from __future__ import annotations

import itertools
import json
from typing import Iterable, Sequence

from .errors import DimensionError, ValidationError


class Degree(tuple):
    """An element of Z2^n: a tuple of bits, ordered lexicographically.

    `+` is componentwise addition mod 2 (not tuple concatenation).
    """

    def __new__(cls, bits: Iterable[int]):
        bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError(f"degree components must be bits: {bits}")
        return super().__new__(cls, bits)

    @classmethod
    def zero(cls, n: int) -> "Degree":
        return cls((0,) * n)

    @property
    def rank(self) -> int:
        return len(self)

    def __add__(self, other) -> "Degree":
        other = other if isinstance(other, Degree) else Degree(other)
        if len(self) != len(other):
            raise DimensionError(f"degree ranks differ: {len(self)} vs {len(other)}")
        return Degree((a + b) % 2 for a, b in zip(self, other))

    __radd__ = __add__

    def is_zero(self) -> bool:
        return not any(self)

    def __repr__(self) -> str:
        return f"Degree({tuple(self)})"


def scalar_product(a, b) -> int:
    """Mod-2 scalar product <a,b> of two degrees of equal rank."""
    a, b = Degree(a), Degree(b)
    if len(a) != len(b):
        raise DimensionError(f"degree ranks differ: {len(a)} vs {len(b)}")
    return sum(x * y for x, y in zip(a, b)) % 2


def parity(d) -> int:
    """Parity of a degree: the sum of its components mod 2."""
    return sum(Degree(d)) % 2


def commutation_sign(a, b) -> int:
    """(-1)**<a,b>: the factor picked up when swapping elements of degrees a, b."""
    return -1 if scalar_product(a, b) else 1


def enumerate_degrees(n: int) -> list[Degree]:
    """All 2^n degrees of rank n in increasing lexicographic order."""
    if n < 0:
        raise ValidationError("rank must be non-negative")
    return [Degree(bits) for bits in itertools.product((0, 1), repeat=n)]


class SignTable:
    """A symmetric table of pairwise commutation signs for m generators."""

    def __init__(self, phi: Sequence[Sequence[int]]):
        self.m = len(phi)
        if self.m < 1:
            raise ValidationError("sign table needs at least one generator")
        self.phi = tuple(tuple(int(v) for v in row) for row in phi)
        for i, row in enumerate(self.phi):
            if len(row) != self.m:
                raise ValidationError(f"row {i} has length {len(row)}, expected {self.m}")
            for j, v in enumerate(row):
                if v not in (1, -1):
                    raise ValidationError(f"sign table entries must be +1 or -1, got {v}")
                if self.phi[j][i] != v:
                    raise ValidationError(f"sign table is not symmetric at ({i}, {j})")

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.phi[i][j]

    def sign_parity(self, i: int, j: int) -> int:
        """p(i,j): 0 if the (i,j) sign is +1, 1 if it is -1."""
        return 0 if self.phi[i][j] == 1 else 1

    def __eq__(self, other) -> bool:
        return isinstance(other, SignTable) and self.phi == other.phi

    def __repr__(self) -> str:
        return f"SignTable(m={self.m})"

    def to_json(self) -> dict:
        return {"m": self.m, "phi": [list(row) for row in self.phi]}

    @classmethod
    def from_json(cls, data: dict) -> "SignTable":
        phi = data["phi"]
        if "m" in data and int(data["m"]) != len(phi):
            raise ValidationError("declared m does not match phi size")
        return cls(phi)

    @classmethod
    def load(cls, path) -> "SignTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class DegreeAssignment:
    """Degrees sigma_1..sigma_m in a common Z2^n, one per generator."""

    def __init__(self, n: int, sigmas: Sequence[Iterable[int]]):
        self.n = int(n)
        self.sigmas = tuple(Degree(s) for s in sigmas)
        for s in self.sigmas:
            if len(s) != self.n:
                raise DimensionError(f"sigma {tuple(s)} has rank {len(s)}, expected {self.n}")

    @property
    def m(self) -> int:
        return len(self.sigmas)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DegreeAssignment)
            and self.n == other.n
            and self.sigmas == other.sigmas
        )

    def __repr__(self) -> str:
        return f"DegreeAssignment(n={self.n}, sigmas={[tuple(s) for s in self.sigmas]})"

    def to_json(self) -> dict:
        return {"n": self.n, "sigmas": [list(s) for s in self.sigmas]}

    @classmethod
    def from_json(cls, data: dict) -> "DegreeAssignment":
        return cls(data["n"], data["sigmas"])

    @classmethod
    def load(cls, path) -> "DegreeAssignment":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def realize_sign_table(table: SignTable) -> DegreeAssignment:
    """Degrees in Z2^(2m) whose pairwise commutation signs reproduce the table.

    Inductive construction over generators.  Coordinates are indexed by
    (1, -1, 2, -2, ..., m, -m); column 2(r-1) holds index r and column
    2(r-1)+1 holds index -r.  All arithmetic is mod 2.
    """
    m = table.m
    p = table.sign_parity
    n = 2 * m
    sigma = [[0] * n for _ in range(m)]

    def pos(k: int) -> int:
        return 2 * (abs(k) - 1) + (0 if k > 0 else 1)

    sigma[0][pos(1)] = 1
    sigma[0][pos(-1)] = (1 + p(0, 0)) % 2
    for j in range(1, m):
        sigma[j][pos(1)] = p(j, 0)
        sigma[j][pos(-1)] = 0

    for r in range(1, m):
        lower = [pos(k) for k in range(1, r + 1)] + [pos(-k) for k in range(1, r + 1)]
        sigma[r][pos(r + 1)] = 1
        sigma[r][pos(-(r + 1))] = (1 + sum(sigma[r][c] for c in lower) + p(r, r)) % 2
        for j in range(r + 1, m):
            sigma[j][pos(r + 1)] = (
                sum(sigma[j][c] * sigma[r][c] for c in lower) + p(j, r)
            ) % 2
            sigma[j][pos(-(r + 1))] = 0

    return DegreeAssignment(n, sigma)


def verify_assignment(table: SignTable, assignment: DegreeAssignment) -> bool:
    """True iff phi(i,j) == (-1)**<sigma_i, sigma_j> for every pair."""
    if assignment.m != table.m:
        raise DimensionError(
            f"assignment has {assignment.m} degrees, table has {table.m} generators"
        )
    for i in range(table.m):
        for j in range(table.m):
            if table[i, j] != commutation_sign(assignment.sigmas[i], assignment.sigmas[j]):
                return False
    return True


def minimize_assignment(assignment: DegreeAssignment) -> DegreeAssignment:
    """Drop coordinate columns that are zero in every sigma.

    Scalar products, hence all commutation signs, are unchanged.
    """
    keep = [
        c
        for c in range(assignment.n)
        if any(s[c] for s in assignment.sigmas)
    ]
    sigmas = [Degree(s[c] for c in keep) for s in assignment.sigmas]
    return DegreeAssignment(len(keep), sigmas)
