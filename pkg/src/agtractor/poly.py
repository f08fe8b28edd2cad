"""Sparse multivariate polynomials with exact rational coefficients.

Variables are indexed ``0 .. nvars-1``.  On a type (2,n) chart the variable
``A*n + A'`` is the coordinate :math:`x^{A'}_A`.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction
from numbers import Rational

__all__ = [
    "Poly",
    "DegreeCapError",
    "degree_cap",
    "get_degree_cap",
    "set_degree_cap",
    "to_fraction",
    "monomials_upto",
]

DEFAULT_DEGREE_CAP = 12
_degree_cap = DEFAULT_DEGREE_CAP


class DegreeCapError(ArithmeticError):
    """Raised when a polynomial result would exceed the configured degree cap."""


def get_degree_cap() -> int:
    return _degree_cap


def set_degree_cap(cap: int) -> None:
    global _degree_cap
    if cap < 0:
        raise ValueError("degree cap must be non-negative")
    _degree_cap = int(cap)


@contextlib.contextmanager
def degree_cap(cap: int):
    """Temporarily override the degree cap."""
    old = _degree_cap
    set_degree_cap(cap)
    try:
        yield
    finally:
        set_degree_cap(old)


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def _add_exp(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class Poly:
    """Immutable polynomial in ``nvars`` variables over the rationals.

    ``terms`` maps exponent tuples to nonzero :class:`~fractions.Fraction`
    coefficients.  Equality and hashing are by canonical term set, so two
    polynomials compare equal iff they are the same polynomial.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(exp)
                if len(exp) != nvars:
                    raise ValueError(f"exponent {exp} has wrong length for {nvars} variables")
                c = to_fraction(c)
                if c:
                    clean[exp] = clean.get(exp, 0) + c
            clean = {e: c for e, c in clean.items() if c}
        self._terms = clean
        self._hash = None
        if clean and self.degree() > _degree_cap:
            raise DegreeCapError(f"construction: degree {self.degree()} exceeds cap {_degree_cap}")

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "Poly":
        # trusted constructor: terms already canonical
        p = object.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        c = to_fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars: int, i: int, coeff=1) -> "Poly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): coeff})

    @classmethod
    def monomial(cls, exp, coeff=1) -> "Poly":
        exp = tuple(exp)
        return cls(len(exp), {exp: coeff})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, exp) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        return Poly.const(self.nvars, other)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v += c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            if not self._terms or not other._terms:
                return Poly._raw(self.nvars, {})
            if self.degree() + other.degree() > _degree_cap:
                raise DegreeCapError(
                    f"multiplication: degree {self.degree()} * degree {other.degree()} "
                    f"exceeds cap {_degree_cap}"
                )
            out = {}
            for e1, c1 in self._terms.items():
                for e2, c2 in other._terms.items():
                    e = _add_exp(e1, e2)
                    v = out.get(e, 0) + c1 * c2
                    if v:
                        out[e] = v
                    else:
                        out.pop(e, None)
            return Poly._raw(self.nvars, out)
        try:
            c = to_fraction(other)
        except TypeError:
            return NotImplemented
        if not c:
            return Poly._raw(self.nvars, {})
        if c == 1:
            return self
        return Poly._raw(self.nvars, {e: v * c for e, v in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = to_fraction(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = Poly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        try:
            c = to_fraction(other)
        except TypeError:
            return NotImplemented
        if not c:
            return not self._terms
        return self._terms == {(0,) * self.nvars: c}

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # calculus -------------------------------------------------------------
    def diff(self, var: int) -> "Poly":
        """Exact partial derivative with respect to variable ``var``."""
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable index {var} out of range")
        out = {}
        for e, c in self._terms.items():
            k = e[var]
            if k:
                ne = e[:var] + (k - 1,) + e[var + 1:]
                out[ne] = c * k
        return Poly._raw(self.nvars, out)

    def __call__(self, point) -> Fraction:
        return self.evaluate(point)

    def evaluate(self, point) -> Fraction:
        pt = [to_fraction(v) for v in point]
        if len(pt) != self.nvars:
            raise ValueError(f"point has {len(pt)} coordinates, expected {self.nvars}")
        total = Fraction(0)
        for e, c in self._terms.items():
            t = c
            for v, k in zip(pt, e):
                if k:
                    t *= v ** k
            total += t
        return total

    def substitute(self, images) -> "Poly":
        """Compose with a list of polynomials, one per variable."""
        out = Poly.zero(images[0].nvars)
        for e, c in self._terms.items():
            t = Poly.const(out.nvars, c)
            for img, k in zip(images, e):
                if k:
                    t = t * img ** k
            out = out + t
        return out

    # presentation ---------------------------------------------------------
    def sorted_terms(self):
        """Terms in graded-lex order, highest degree first."""
        return sorted(self._terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0])))

    def to_json(self) -> list:
        return [[list(e), _frac_str(c)] for e, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, nvars: int, data) -> "Poly":
        if isinstance(data, (int, str)):
            return cls.const(nvars, data)
        terms = {}
        for item in data:
            exp, c = item
            if len(exp) != nvars or any((not isinstance(k, int)) or k < 0 for k in exp):
                raise ValueError(f"bad exponent vector {exp!r} for {nvars} variables")
            exp = tuple(exp)
            terms[exp] = terms.get(exp, 0) + to_fraction(c)
        return cls(nvars, terms)

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                f"x{i}" if k == 1 else f"x{i}^{k}" for i, k in enumerate(e) if k
            )
            if not mono:
                parts.append(_frac_str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{_frac_str(c)}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def monomials_upto(nvars: int, degree: int) -> list[tuple]:
    """Exponent vectors of total degree <= ``degree`` in degree-lex order."""
    out = []
    for d in range(degree + 1):
        level = list(_compositions(d, nvars))
        level.sort(reverse=True)
        out.extend(level)
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
