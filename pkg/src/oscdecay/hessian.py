"""Shifted phases, mixed Hessians and their minors.

Sign convention: the shifted phase is

    S_tau(x, y) = S(x, y) - S(x + tau, y - tau)

and the mixed Hessian is ``M[i][j] = d^2 S_tau / dx_i dy_j``. The opposite
shift ``S(x, y) - S(x - tau, y + tau)`` replaces ``tau`` by ``-tau`` and flips
the overall sign of S_tau; ``|det|`` sublevel sets are the same under either
choice, so minors computed here may differ from other write-ups by the
global factor ``(-1)^k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

from .polycore import (
    AffineMap,
    DimensionMismatch,
    Polynomial,
    Role,
    VarId,
    linear_map,
)

__all__ = [
    "PolyMatrix",
    "MinorSelection",
    "GLTransform",
    "PhaseError",
    "build_s_tau",
    "mixed_hessian",
    "d_operator",
    "minor_determinant",
    "determinant",
    "enumerate_minors",
    "gl_pushforward",
    "MAX_DIM",
]

MAX_DIM = 6


class PhaseError(ValueError):
    """Phase is not a polynomial in (x, y) alone."""


class GuardError(ValueError):
    """Combinatorial guard exceeded (dimension too large)."""


@dataclass(frozen=True)
class PolyMatrix:
    rows: tuple[tuple[Polynomial, ...], ...]

    def __post_init__(self):
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ValueError("PolyMatrix must be square")
        dims = {p.dim for r in self.rows for p in r}
        if len(dims) > 1:
            raise DimensionMismatch("PolyMatrix entries have different dimensions")

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> Polynomial:
        """Entry at 1-based (row, col)."""
        i, j = ij
        return self.rows[i - 1][j - 1]

    def is_zero(self) -> bool:
        return all(p.is_zero() for r in self.rows for p in r)

    def map(self, fn) -> "PolyMatrix":
        return PolyMatrix(tuple(tuple(fn(p) for p in r) for r in self.rows))

    def to_lists(self) -> list[list[str]]:
        return [[str(p) for p in r] for r in self.rows]


@dataclass(frozen=True, order=True)
class MinorSelection:
    """Rows and columns (1-based, sorted) of a k x k minor."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != len(self.cols) or not self.rows:
            raise ValueError("a minor needs equally many (>= 1) rows and columns")
        for idx in (self.rows, self.cols):
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"minor indices must be sorted and distinct: {idx}")

    @property
    def k(self) -> int:
        return len(self.rows)

    def validate(self, d: int) -> None:
        if self.k > d or min(self.rows + self.cols) < 1 or max(self.rows + self.cols) > d:
            raise ValueError(f"minor {self} is not valid for a {d}x{d} matrix")

    def label(self) -> str:
        return f"rows{list(self.rows)}cols{list(self.cols)}"

    def to_json(self) -> dict:
        return {"k": self.k, "rows": list(self.rows), "cols": list(self.cols)}


@dataclass(frozen=True)
class GLTransform:
    """Invertible rational matrix acting on both x and y."""

    matrix: tuple[tuple[Fraction, ...], ...]
    det: Fraction

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "GLTransform":
        m = tuple(tuple(Fraction(a) for a in r) for r in rows)
        n = len(m)
        if any(len(r) != n for r in m):
            raise ValueError("GL transform must be square")
        det = _fraction_det(m)
        if det == 0:
            raise ValueError("singular matrix is not in GL(d)")
        return cls(m, det)

    @property
    def dim(self) -> int:
        return len(self.matrix)


def _fraction_det(m) -> Fraction:
    a = [list(r) for r in m]
    n = len(a)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else Fraction(1)


def _check_phase(S: Polynomial) -> None:
    if S.uses_role(Role.TAU):
        raise PhaseError("phase must not contain tau variables")


def build_s_tau(S: Polynomial) -> Polynomial:
    """``S(x, y) - S(x + tau, y - tau)``."""
    _check_phase(S)
    d = S.dim
    shift = {}
    for i in range(1, d + 1):
        t = Polynomial.tau(d, i)
        shift[VarId(Role.X, i)] = Polynomial.x(d, i) + t
        shift[VarId(Role.Y, i)] = Polynomial.y(d, i) - t
    return S - S.substitute(AffineMap.from_mapping(d, shift))


def mixed_hessian(S: Polynomial) -> PolyMatrix:
    s_tau = build_s_tau(S)
    d = S.dim
    rows = []
    for i in range(1, d + 1):
        dx = s_tau.differentiate(VarId(Role.X, i))
        rows.append(tuple(dx.differentiate(VarId(Role.Y, j)) for j in range(1, d + 1)))
    return PolyMatrix(tuple(rows))


def d_operator(S: Polynomial, i: int, j: int, l: int) -> Polynomial:
    """``dx_i dy_j (dx_l - dy_l) S``."""
    d = S.dim
    for idx in (i, j, l):
        if not 1 <= idx <= d:
            raise ValueError(f"index {idx} out of range 1..{d}")
    base = S.differentiate(VarId(Role.X, i)).differentiate(VarId(Role.Y, j))
    return base.differentiate(VarId(Role.X, l)) - base.differentiate(VarId(Role.Y, l))


def _cofactor_det(m: list[list[Polynomial]]) -> Polynomial:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = Polynomial.zero(m[0][0].dim)
    for j in range(n):
        if m[0][j].is_zero():
            continue
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _cofactor_det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def _bareiss_det(m: list[list[Polynomial]]) -> Polynomial:
    a = [list(r) for r in m]
    n = len(a)
    dim = a[0][0].dim
    sign = 1
    prev = Polynomial.constant(dim, 1)
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero()), None)
            if swap is None:
                return Polynomial.zero(dim)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[k][k] * a[i][j] - a[i][k] * a[k][j]
                a[i][j] = num.exact_div(prev)
        prev = a[k][k]
    det = a[n - 1][n - 1]
    return det if sign > 0 else -det


def determinant(m: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Exact determinant: cofactor expansion up to 3x3, Bareiss elimination above."""
    m = [list(r) for r in m]
    if len(m) <= 3:
        return _cofactor_det(m)
    return _bareiss_det(m)


def minor_determinant(M: PolyMatrix, sel: MinorSelection) -> Polynomial:
    sel.validate(M.size)
    sub = [[M[i, j] for j in sel.cols] for i in sel.rows]
    return determinant(sub)


def enumerate_minors(d: int, k_range: Sequence[int] | None = None) -> list[MinorSelection]:
    """All minors with k in ``k_range``: k descending, then rows, then cols lexicographic."""
    if d > MAX_DIM:
        raise GuardError(f"dimension {d} exceeds the minor-enumeration guard ({MAX_DIM})")
    ks = sorted(set(k_range if k_range is not None else range(1, d + 1)), reverse=True)
    out = []
    for k in ks:
        if not 1 <= k <= d:
            raise ValueError(f"minor size {k} out of range 1..{d}")
        subsets = list(itertools.combinations(range(1, d + 1), k))
        out.extend(MinorSelection(r, c) for r in subsets for c in subsets)
    assert len(out) == sum(comb(d, k) ** 2 for k in ks)
    return out


def gl_pushforward(S: Polynomial, A: GLTransform) -> Polynomial:
    """``(S o A)(x, y) = S(Ax, Ay)``."""
    if A.dim != S.dim:
        raise DimensionMismatch(f"transform of size {A.dim} for dimension {S.dim}")
    if A.det == 0:
        raise ValueError("singular transform")
    d = S.dim
    mapping = linear_map(d, Role.X, A.matrix)
    mapping.update(linear_map(d, Role.Y, A.matrix))
    return S.substitute(AffineMap.from_mapping(d, mapping))


def gl_pushforward_full(P: Polynomial, A: GLTransform) -> Polynomial:
    """``P(Ax, Ay, A tau)``, the form in which determinants transform."""
    d = P.dim
    mapping = linear_map(d, Role.X, A.matrix)
    mapping.update(linear_map(d, Role.Y, A.matrix))
    mapping.update(linear_map(d, Role.TAU, A.matrix))
    return P.substitute(AffineMap.from_mapping(d, mapping))
