"""Exact sparse polynomials over Q in the variables x1..xd, y1..yd, t1..td.

A polynomial of dimension ``d`` lives in 3d variables laid out as one
exponent vector ``(x1, ..., xd, y1, ..., yd, t1, ..., td)``. The ``t``
block holds the shift variable tau. Coefficients are
:class:`fractions.Fraction`, so identities between derived polynomials
(shifted phases, Hessian minors, determinants) are checked exactly.

Example:
    >>> from oscdecay.polycore import Polynomial
    >>> x1, y1 = Polynomial.x(1, 1), Polynomial.y(1, 1)
    >>> str((x1 + y1) * (x1 - y1))
    'x1^2 - y1^2'
"""

from __future__ import annotations

import enum
import itertools
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Role",
    "VarId",
    "Polynomial",
    "AffineMap",
    "DimensionMismatch",
    "InvalidVariable",
    "NEG_INF_DEGREE",
]

# degree sentinel for the zero polynomial
NEG_INF_DEGREE = float("-inf")

Exponent = tuple  # tuple[int, ...] of length 3d


class DimensionMismatch(ValueError):
    pass


class InvalidVariable(ValueError):
    pass


class Role(enum.Enum):
    X = "x"
    Y = "y"
    TAU = "t"


_ROLE_BLOCK = {Role.X: 0, Role.Y: 1, Role.TAU: 2}


@dataclass(frozen=True, order=True)
class VarId:
    """A variable ``x_i``, ``y_i`` or ``t_i`` with 1-based index."""

    role: Role
    index: int

    def slot(self, d: int) -> int:
        """Position of this variable in a length-3d exponent vector."""
        if not isinstance(self.index, int) or not 1 <= self.index <= d:
            raise InvalidVariable(f"{self.name} is not a variable of dimension {d}")
        return _ROLE_BLOCK[self.role] * d + self.index - 1

    @property
    def name(self) -> str:
        return f"{self.role.value}{self.index}"

    @classmethod
    def from_slot(cls, slot: int, d: int) -> "VarId":
        block, i = divmod(slot, d)
        return cls((Role.X, Role.Y, Role.TAU)[block], i + 1)

    @classmethod
    def parse(cls, name: str) -> "VarId":
        roles = {"x": Role.X, "y": Role.Y, "t": Role.TAU}
        if len(name) < 2 or name[0] not in roles or not name[1:].isdigit():
            raise InvalidVariable(f"not a variable name: {name!r}")
        return cls(roles[name[0]], int(name[1:]))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, numbers.Rational):
        return Fraction(c.numerator, c.denominator)
    raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")


def _grlex_key(exp: Exponent):
    # graded lex, variable order x1 > ... > xd > y1 > ... > td
    return (sum(exp), exp)


class Polynomial:
    """Immutable sparse polynomial with rational coefficients.

    ``terms`` maps exponent vectors of length ``3*dim`` to nonzero
    :class:`~fractions.Fraction` coefficients. Two polynomials compare equal
    iff their dimensions and term maps are identical.
    """

    __slots__ = ("_dim", "_terms", "_hash", "_compiled")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], object] | None = None):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {dim!r}")
        dim = int(dim)
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != 3 * dim:
                raise DimensionMismatch(
                    f"exponent vector {exp} has length {len(exp)}, expected {3 * dim}"
                )
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = _as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._dim = dim
        self._terms = dict(sorted(clean.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True))
        self._hash = None
        self._compiled = None

    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "Polynomial":
        # trusted constructor: terms already clean (no zeros, right length)
        p = cls.__new__(cls)
        p._dim = dim
        p._terms = dict(sorted(terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True))
        p._hash = None
        p._compiled = None
        return p

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, c) -> "Polynomial":
        return cls(dim, {(0,) * (3 * dim): c})

    @classmethod
    def var(cls, dim: int, v: VarId) -> "Polynomial":
        exp = [0] * (3 * dim)
        exp[v.slot(dim)] = 1
        return cls._raw(dim, {tuple(exp): Fraction(1)})

    @classmethod
    def x(cls, dim: int, i: int) -> "Polynomial":
        return cls.var(dim, VarId(Role.X, i))

    @classmethod
    def y(cls, dim: int, i: int) -> "Polynomial":
        return cls.var(dim, VarId(Role.Y, i))

    @classmethod
    def tau(cls, dim: int, i: int) -> "Polynomial":
        return cls.var(dim, VarId(Role.TAU, i))

    # -- basic properties ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def nvars(self) -> int:
        return 3 * self._dim

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Exponent, Fraction]]:
        """Terms in canonical (descending graded-lex) order."""
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def degree(self):
        if not self._terms:
            return NEG_INF_DEGREE
        return max(sum(e) for e in self._terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def variables(self) -> list[VarId]:
        """Variables that occur in at least one term, in slot order."""
        used = set()
        for exp in self._terms:
            used.update(i for i, e in enumerate(exp) if e)
        return [VarId.from_slot(i, self._dim) for i in sorted(used)]

    def uses_role(self, role: Role) -> bool:
        lo = _ROLE_BLOCK[role] * self._dim
        return any(any(exp[lo:lo + self._dim]) for exp in self._terms)

    # -- equality / hashing -------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self._dim == other._dim and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self._dim, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._dim, tuple(self._terms.items())))
        return self._hash

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._dim != self._dim:
                raise DimensionMismatch(
                    f"dimension mismatch: {self._dim} vs {other._dim}"
                )
            return other
        if isinstance(other, (int, Fraction, np.integer)):
            return Polynomial.constant(self._dim, other)
        raise TypeError(f"cannot combine Polynomial with {type(other).__name__}")

    def __add__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for exp, c in other._terms.items():
            s = out.get(exp, 0) + c
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return Polynomial._raw(self._dim, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self._dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction, np.integer)):
            c = _as_fraction(other)
            if not c:
                return Polynomial.zero(self._dim)
            return Polynomial._raw(self._dim, {e: v * c for e, v in self._terms.items()})
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Polynomial._raw(self._dim, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction, np.integer)):
            c = _as_fraction(other)
            if not c:
                raise ZeroDivisionError("division of a polynomial by zero")
            return self * (1 / c)
        return NotImplemented

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(self._dim, 1)
        base = self
        n = int(n)
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def exact_div(self, divisor: "Polynomial") -> "Polynomial":
        """Quotient of an exact division; raises ``ArithmeticError`` if a remainder is left."""
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        lead_e, lead_c = next(iter(divisor._terms.items()))
        rem = self
        quotient: dict[Exponent, Fraction] = {}
        while rem:
            e, c = next(iter(rem._terms.items()))
            shift = tuple(a - b for a, b in zip(e, lead_e))
            if any(s < 0 for s in shift):
                raise ArithmeticError("division is not exact")
            q = c / lead_c
            quotient[shift] = q
            step = Polynomial._raw(self._dim, {shift: q}) * divisor
            rem = rem - step
        return Polynomial._raw(self._dim, quotient)

    # -- calculus and substitution -----------------------------------------

    def differentiate(self, v: VarId) -> "Polynomial":
        k = v.slot(self._dim)
        out: dict[Exponent, Fraction] = {}
        for exp, c in self._terms.items():
            n = exp[k]
            if n:
                e = list(exp)
                e[k] = n - 1
                out[tuple(e)] = c * n
        return Polynomial._raw(self._dim, out)

    def substitute(self, m: "AffineMap") -> "Polynomial":
        """Compose with an affine change of variables: ``p(m(v))``."""
        if m.dim != self._dim:
            raise DimensionMismatch(f"map of dimension {m.dim} applied to dimension {self._dim}")
        powers: dict[tuple[int, int], Polynomial] = {}

        def power(slot: int, n: int) -> Polynomial:
            key = (slot, n)
            if key not in powers:
                powers[key] = m.images[slot] if n == 1 else power(slot, n - 1) * m.images[slot]
            return powers[key]

        acc: dict[Exponent, Fraction] = {}
        for exp, c in self._terms.items():
            term = Polynomial.constant(self._dim, c)
            for slot, n in enumerate(exp):
                if n:
                    term = term * power(slot, n)
            for e, v in term._terms.items():
                s = acc.get(e, 0) + v
                if s:
                    acc[e] = s
                else:
                    acc.pop(e, None)
        return Polynomial._raw(self._dim, acc)

    def homogeneous_part(self, m: int) -> "Polynomial":
        """Terms whose total degree in the (x, y) variables is exactly ``m``."""
        n = 2 * self._dim
        return Polynomial._raw(
            self._dim, {e: c for e, c in self._terms.items() if sum(e[:n]) == m}
        )

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, point: Sequence):
        """Value at a point of length 3d.

        Exact (a ``Fraction``) when every coordinate is an int or Fraction;
        otherwise each coordinate is converted to float and the result is the
        float64 round-to-nearest evaluation of the term sum.
        """
        point = list(point)
        if len(point) != self.nvars:
            raise DimensionMismatch(
                f"point has length {len(point)}, expected {self.nvars}"
            )
        exact = all(isinstance(v, (int, Fraction, np.integer)) for v in point)
        if exact:
            point = [_as_fraction(v) for v in point]
            total = Fraction(0)
            for exp, c in self._terms.items():
                t = c
                for v, n in zip(point, exp):
                    if n:
                        t *= v ** n
                total += t
            return total
        fpoint = [float(v) for v in point]
        total = 0.0
        for exp, c in self._terms.items():
            t = float(c)
            for v, n in zip(fpoint, exp):
                if n:
                    t *= v ** n
            total += t
        return total

    def compiled(self) -> tuple[np.ndarray, np.ndarray]:
        """``(exponents[int64, nterms x 3d], coefficients[float64])`` for vector kernels."""
        if self._compiled is None:
            if self._terms:
                exps = np.array(list(self._terms.keys()), dtype=np.int64)
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
            coefs = np.array([float(c) for c in self._terms.values()], dtype=np.float64)
            exps.setflags(write=False)
            coefs.setflags(write=False)
            self._compiled = (exps, coefs)
        return self._compiled

    def abs_coefficient_sum(self) -> Fraction:
        return sum((abs(c) for c in self._terms.values()), Fraction(0))

    # -- text form ------------------------------------------------------------

    def __str__(self) -> str:
        return serialize(self)

    def __repr__(self) -> str:
        return f"Polynomial({self._dim}, {serialize(self)!r})"


def _monomial_text(exp: Exponent, dim: int) -> str:
    parts = []
    for slot, n in enumerate(exp):
        if n:
            name = VarId.from_slot(slot, dim).name
            parts.append(name if n == 1 else f"{name}^{n}")
    return "*".join(parts)


def _coef_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def serialize(p: Polynomial) -> str:
    """Canonical text form, readable back by :func:`oscdecay.parser.parse_phase`.

    Terms appear in descending graded-lex order; coefficient 1 is omitted.
    """
    if p.is_zero():
        return "0"
    out = []
    for i, (exp, c) in enumerate(p.items()):
        mono = _monomial_text(exp, p.dim)
        mag = abs(c)
        if not mono:
            body = _coef_text(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_coef_text(mag)}*{mono}"
        if i == 0:
            out.append(f"-{body}" if c < 0 else body)
        else:
            out.append(f" - {body}" if c < 0 else f" + {body}")
    return "".join(out)


class AffineMap:
    """An affine substitution ``v -> images[v]`` for every variable.

    Each image must be a polynomial of degree at most 1 in the same dimension.
    Variables not mentioned in :meth:`from_mapping` are left fixed.
    """

    __slots__ = ("dim", "images")

    def __init__(self, dim: int, images: Sequence[Polynomial]):
        images = tuple(images)
        if len(images) != 3 * dim:
            raise ValueError(f"affine map needs {3 * dim} images, got {len(images)}")
        for img in images:
            if not isinstance(img, Polynomial) or img.dim != dim:
                raise DimensionMismatch("affine map image has the wrong dimension")
            if img.degree > 1:
                raise ValueError(f"affine map image {img} is not affine")
        self.dim = dim
        self.images = images

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(dim, [Polynomial.var(dim, VarId.from_slot(i, dim)) for i in range(3 * dim)])

    @classmethod
    def from_mapping(cls, dim: int, mapping: Mapping[VarId, Polynomial]) -> "AffineMap":
        images = list(cls.identity(dim).images)
        for v, img in mapping.items():
            images[v.slot(dim)] = img
        return cls(dim, images)

    def then(self, other: "AffineMap") -> "AffineMap":
        """Map equivalent to substituting ``self`` first and ``other`` second."""
        if other.dim != self.dim:
            raise DimensionMismatch("cannot compose maps of different dimension")
        return AffineMap(self.dim, [img.substitute(other) for img in self.images])

    def __eq__(self, other) -> bool:
        return isinstance(other, AffineMap) and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)


def linear_map(dim: int, role: Role, matrix: Sequence[Sequence], offset: Sequence | None = None) -> dict:
    """Mapping ``v_i -> sum_j matrix[i][j] v_j (+ offset_i)`` on one variable block."""
    out = {}
    for i in range(dim):
        img = Polynomial.zero(dim)
        for j in range(dim):
            a = _as_fraction(matrix[i][j])
            if a:
                img = img + Polynomial.var(dim, VarId(role, j + 1)) * a
        if offset is not None:
            img = img + _as_fraction(offset[i])
        out[VarId(role, i + 1)] = img
    return out


def random_polynomial(rng: np.random.Generator, dim: int, max_degree: int, n_terms: int,
                      roles: Iterable[Role] = (Role.X, Role.Y, Role.TAU), max_num: int = 9,
                      max_den: int = 5) -> Polynomial:
    """Random polynomial with small rational coefficients (used by tests and benchmarks)."""
    slots = [VarId(r, i).slot(dim) for r in roles for i in range(1, dim + 1)]
    terms = {}
    for _ in range(n_terms):
        deg = int(rng.integers(0, max_degree + 1))
        exp = [0] * (3 * dim)
        for s in rng.choice(slots, size=deg, replace=True) if deg else []:
            exp[int(s)] += 1
        num = int(rng.integers(-max_num, max_num + 1))
        den = int(rng.integers(1, max_den + 1))
        terms[tuple(exp)] = terms.get(tuple(exp), Fraction(0)) + Fraction(num, den)
    return Polynomial(dim, terms)


def monomials_of_degree(nvars: int, degree: int) -> Iterator[tuple[int, ...]]:
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        exp = [0] * nvars
        for i in combo:
            exp[i] += 1
        yield tuple(exp)
