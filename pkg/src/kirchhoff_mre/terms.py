r"""Closed algebra of Poisson-type kernels in one time variable.

Every density and layer potential produced by the reflection expansion is a
finite sum of three shapes centered at the source time ``s0``::

    LOG(c, d)   c * ln[(t - s0)^2 + d^2]
    EVEN(c, d)  c * (1/pi) * d / [(t - s0)^2 + d^2]
    ODD(c, d)   c * (1/pi) * (t - s0) / [(t - s0)^2 + d^2]

EVEN and ODD are the Poisson kernel and its harmonic conjugate; both form a
convolution semigroup in the width ``d``.  Coefficients live in Q[pi, 1/pi]
(see :class:`Coef`) so that every operation stays exact, and widths are
``Fraction``.  Floating point appears only in :func:`evaluate`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import SingularEvaluationError, UnsupportedOperationError

Rational = Union[int, Fraction]

__all__ = [
    "Coef",
    "Kind",
    "CanonicalTerm",
    "TermSum",
    "LOG",
    "EVEN",
    "ODD",
    "as_fraction",
    "g0",
    "g0_grad",
    "convolve",
    "convolve_sum",
    "differentiate",
    "antiderivative",
    "evaluate",
    "evaluate_derivative",
    "compact",
    "term_to_json",
    "term_from_json",
    "termsum_to_json",
    "termsum_from_json",
]


def as_fraction(value) -> Fraction:
    """Exact conversion; decimal strings and ints are accepted, floats are not."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class Coef:
    """Exact element of Q[pi, 1/pi], stored as {power of pi: rational}.

    >>> c = Coef(Fraction(1, 2), -1)
    >>> str(c * Coef.pi())
    '1/2'
    """

    __slots__ = ("_parts", "_hash")

    def __init__(self, value: Rational | Mapping[int, Rational] = 0, pi_power: int = 0):
        if isinstance(value, Mapping):
            parts = {int(k): as_fraction(v) for k, v in value.items()}
        else:
            parts = {int(pi_power): as_fraction(value)}
        self._parts = {k: v for k, v in parts.items() if v != 0}
        self._hash = None

    @classmethod
    def pi(cls, power: int = 1) -> "Coef":
        return cls(1, power)

    @classmethod
    def _coerce(cls, other) -> "Coef":
        if isinstance(other, Coef):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return cls(other)
        return NotImplemented

    @property
    def parts(self) -> dict[int, Fraction]:
        return dict(self._parts)

    def is_rational(self) -> bool:
        return set(self._parts) <= {0}

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._parts.get(0, Fraction(0))

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        parts = dict(self._parts)
        for k, v in other._parts.items():
            parts[k] = parts.get(k, Fraction(0)) + v
        return Coef(parts)

    __radd__ = __add__

    def __neg__(self):
        return Coef({k: -v for k, v in self._parts.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        parts: dict[int, Fraction] = {}
        for k1, v1 in self._parts.items():
            for k2, v2 in other._parts.items():
                parts[k1 + k2] = parts.get(k1 + k2, Fraction(0)) + v1 * v2
        return Coef(parts)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # division only by monomials keeps the ring closed
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(other._parts) != 1:
            raise ZeroDivisionError("can only divide by a nonzero monomial in pi")
        (k, v), = other._parts.items()
        return self * Coef(1 / v, -k)

    def __bool__(self):
        return bool(self._parts)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._parts == other._parts

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._parts.items()))
        return self._hash

    def __float__(self):
        return math.fsum(float(v) * math.pi**k for k, v in self._parts.items())

    def __abs__(self):
        return abs(float(self))

    def __repr__(self):
        return f"Coef({str(self)!r})"

    def __str__(self):
        if not self._parts:
            return "0"
        pieces = []
        for k in sorted(self._parts):
            v = self._parts[k]
            pieces.append(str(v) if k == 0 else f"{v}*pi^{k}")
        return " + ".join(pieces)

    @classmethod
    def parse(cls, text: str) -> "Coef":
        total = cls(0)
        for piece in str(text).split("+"):
            piece = piece.strip()
            if not piece:
                continue
            if "*pi^" in piece:
                value, power = piece.split("*pi^")
                total = total + cls(Fraction(value), int(power))
            else:
                total = total + cls(Fraction(piece))
        return total


class Kind(str, enum.Enum):
    LOG = "LOG"
    EVEN = "EVEN"
    ODD = "ODD"


_KIND_ORDER = {Kind.LOG: 0, Kind.EVEN: 1, Kind.ODD: 2}


@dataclass(frozen=True)
class CanonicalTerm:
    """One analytic term; see the module docstring for the three shapes."""

    kind: Kind
    c: Coef
    d: Fraction
    s0: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not isinstance(self.c, Coef):
            object.__setattr__(self, "c", Coef(self.c))
        object.__setattr__(self, "d", as_fraction(self.d))
        object.__setattr__(self, "s0", as_fraction(self.s0))
        if self.d < 0:
            raise ValueError(f"distance parameter must be nonnegative, got {self.d}")

    @property
    def key(self):
        return (_KIND_ORDER[self.kind], self.d)

    @property
    def is_singular(self) -> bool:
        """LOG or EVEN at zero width (log singularity or delta function)."""
        return self.d == 0 and self.kind in (Kind.LOG, Kind.EVEN)

    def scaled(self, factor) -> "CanonicalTerm":
        return CanonicalTerm(self.kind, self.c * factor, self.d, self.s0)

    def shifted(self, extra: Rational) -> "CanonicalTerm":
        return CanonicalTerm(self.kind, self.c, self.d + as_fraction(extra), self.s0)

    def __str__(self):
        return f"{self.kind.value}({self.c}, {self.d})"


def LOG(c, d, s0=0) -> CanonicalTerm:
    return CanonicalTerm(Kind.LOG, c, d, s0)


def EVEN(c, d, s0=0) -> CanonicalTerm:
    return CanonicalTerm(Kind.EVEN, c, d, s0)


def ODD(c, d, s0=0) -> CanonicalTerm:
    return CanonicalTerm(Kind.ODD, c, d, s0)


@dataclass(frozen=True)
class TermSum:
    """Sum of canonical terms sharing one center ``s0``.

    Instances built through :func:`compact` (and every arithmetic method)
    hold at most one term per (kind, d) and no zero coefficients.
    """

    terms: tuple[CanonicalTerm, ...] = ()
    s0: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "s0", as_fraction(self.s0))
        for term in self.terms:
            if term.s0 != self.s0:
                raise ValueError(f"term {term} is centered at {term.s0}, sum at {self.s0}")

    @classmethod
    def of(cls, *terms: CanonicalTerm, s0=None) -> "TermSum":
        if s0 is None:
            s0 = terms[0].s0 if terms else Fraction(0)
        return compact(cls(tuple(terms), s0))

    def __add__(self, other: "TermSum") -> "TermSum":
        if not isinstance(other, TermSum):
            return NotImplemented
        if not self.terms:
            return compact(TermSum(other.terms, other.s0))
        if not other.terms:
            return compact(self)
        if self.s0 != other.s0:
            raise ValueError("cannot add term sums with different centers")
        return compact(TermSum(self.terms + other.terms, self.s0))

    def __neg__(self):
        return self.scaled(-1)

    def __sub__(self, other: "TermSum") -> "TermSum":
        return self + (-other)

    def scaled(self, factor) -> "TermSum":
        return compact(TermSum(tuple(t.scaled(factor) for t in self.terms), self.s0))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def kinds(self) -> set[Kind]:
        return {t.kind for t in self.terms}

    def distances(self) -> list[Fraction]:
        return [t.d for t in self.terms]

    def __str__(self):
        return " + ".join(str(t) for t in self.terms) or "0"


def compact(ts: TermSum) -> TermSum:
    """Merge equal (kind, d) keys exactly, drop zeros, sort by (kind, d)."""
    merged: dict[tuple, Coef] = {}
    kinds: dict[tuple, Kind] = {}
    for term in ts.terms:
        merged[term.key] = merged.get(term.key, Coef(0)) + term.c
        kinds[term.key] = term.kind
    terms = tuple(
        CanonicalTerm(kinds[key], merged[key], key[1], ts.s0)
        for key in sorted(merged)
        if merged[key]
    )
    return TermSum(terms, ts.s0)


# --- free Green function -------------------------------------------------

_FOUR_PI = 4.0 * math.pi
_TWO_PI = 2.0 * math.pi


def _difference(a, b):
    # exact rationals are subtracted before rounding
    if isinstance(a, Rational) and isinstance(b, Rational):
        return np.float64(a - b)
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float)


def _sqdist(t, x, s, y):
    dt = _difference(t, s)
    dx = _difference(x, y)
    r2 = dt * dt + dx * dx
    if np.any(r2 == 0):
        raise SingularEvaluationError("free Green function evaluated at its source point")
    return dt, dx, r2


def g0(t, x, s, y):
    """Free 2-D Green function -(1/4 pi) ln[(t-s)^2 + (x-y)^2], with C = 0."""
    _, _, r2 = _sqdist(t, x, s, y)
    out = -np.log(r2) / _FOUR_PI
    return float(out) if np.ndim(out) == 0 else out


def g0_grad(t, x, s, y):
    """Return (dG0/dt, dG0/dx); the source derivatives are their negatives."""
    dt, dx, r2 = _sqdist(t, x, s, y)
    gt = -dt / (_TWO_PI * r2)
    gx = -dx / (_TWO_PI * r2)
    if np.ndim(gt) == 0:
        return float(gt), float(gx)
    return gt, gx


# --- convolution ---------------------------------------------------------

_CONV_RULES = {
    (Kind.EVEN, Kind.EVEN): (Kind.EVEN, 1),
    (Kind.ODD, Kind.EVEN): (Kind.ODD, 1),
    (Kind.EVEN, Kind.ODD): (Kind.ODD, 1),
    (Kind.ODD, Kind.ODD): (Kind.EVEN, -1),
    (Kind.LOG, Kind.EVEN): (Kind.LOG, 1),
    (Kind.EVEN, Kind.LOG): (Kind.LOG, 1),
}


def convolve(kernel: CanonicalTerm, density: CanonicalTerm) -> CanonicalTerm:
    """Exact time convolution  (kernel * density)(t) = int kernel(t-s) density(s) ds.

    Widths add; the result is centered at ``kernel.s0 + density.s0``.
    """
    if kernel.d <= 0 or density.d <= 0:
        raise UnsupportedOperationError(
            "convolution requires strictly positive widths "
            f"(got {kernel.d} and {density.d})"
        )
    try:
        kind, sign = _CONV_RULES[(kernel.kind, density.kind)]
    except KeyError:
        raise UnsupportedOperationError(
            f"{kernel.kind.value} * {density.kind.value} diverges; not in the closed family"
        ) from None
    return CanonicalTerm(kind, kernel.c * density.c * sign, kernel.d + density.d,
                         kernel.s0 + density.s0)


def convolve_sum(kernel: CanonicalTerm, density: TermSum) -> TermSum:
    s0 = kernel.s0 + density.s0
    return compact(TermSum(tuple(convolve(kernel, t) for t in density.terms), s0))


def differentiate(term: CanonicalTerm) -> TermSum:
    """Time derivative; only LOG stays in the family: d/dt LOG(c,d) = ODD(2 pi c, d)."""
    if term.kind is not Kind.LOG:
        raise UnsupportedOperationError(
            f"d/dt {term.kind.value} has a second-order pole; "
            "use the NU_PRIME formulation, which never needs it"
        )
    if term.d <= 0:
        raise SingularEvaluationError("derivative of LOG with zero width")
    if not term.c:
        return TermSum((), term.s0)
    return TermSum((ODD(term.c * Coef(2, 1), term.d, term.s0),), term.s0)


def antiderivative(term: CanonicalTerm) -> TermSum:
    """Inverse of :func:`differentiate` with zero integration constant."""
    if term.kind is not Kind.ODD:
        raise UnsupportedOperationError(f"antiderivative of {term.kind.value} is not in the family")
    if not term.c:
        return TermSum((), term.s0)
    return TermSum((LOG(term.c * Coef(Fraction(1, 2), -1), term.d, term.s0),), term.s0)


# --- numerics ------------------------------------------------------------

def _term_values(term: CanonicalTerm, u, s0_float=None):
    d = float(term.d)
    c = float(term.c)
    r2 = u * u + d * d
    if term.is_singular and np.any(u == 0):
        raise SingularEvaluationError(f"{term} evaluated at its center")
    if term.kind is Kind.LOG:
        return c * np.log(r2)
    if term.kind is Kind.EVEN:
        if d == 0:
            return np.zeros_like(u)
        return c * d / (math.pi * r2)
    if term.d == 0:
        return c / (math.pi * u)
    return c * u / (math.pi * r2)


def evaluate(ts: TermSum | CanonicalTerm, t):
    """Numeric value at time ``t`` (scalar or array)."""
    if isinstance(ts, CanonicalTerm):
        ts = TermSum((ts,), ts.s0)
    u = np.asarray(t, dtype=float) - float(ts.s0)
    out = np.zeros_like(u)
    for term in ts.terms:
        out = out + _term_values(term, u)
    return float(out) if out.ndim == 0 else out


def evaluate_derivative(ts: TermSum | CanonicalTerm, t):
    """Numeric first time-derivative of every kind.

    The EVEN and ODD derivatives are outside the algebra; this is for
    diagnostics only.
    """
    if isinstance(ts, CanonicalTerm):
        ts = TermSum((ts,), ts.s0)
    u = np.asarray(t, dtype=float) - float(ts.s0)
    out = np.zeros_like(u)
    for term in ts.terms:
        d = float(term.d)
        c = float(term.c)
        r2 = u * u + d * d
        if term.d == 0:
            raise SingularEvaluationError(f"derivative of zero-width {term}")
        if term.kind is Kind.LOG:
            out = out + c * 2.0 * u / r2
        elif term.kind is Kind.EVEN:
            out = out - c * 2.0 * d * u / (math.pi * r2 * r2)
        else:
            out = out + c * (d * d - u * u) / (math.pi * r2 * r2)
    return float(out) if out.ndim == 0 else out


# --- serialization -------------------------------------------------------

def term_to_json(term: CanonicalTerm) -> dict:
    return {"kind": term.kind.value, "c": str(term.c), "d": str(term.d), "s0": str(term.s0)}


def term_from_json(obj: Mapping) -> CanonicalTerm:
    return CanonicalTerm(Kind(obj["kind"]), Coef.parse(obj["c"]), Fraction(obj["d"]),
                         Fraction(obj.get("s0", "0")))


def termsum_to_json(ts: TermSum) -> list[dict]:
    return [term_to_json(t) for t in ts.terms]


def termsum_from_json(items: Iterable[Mapping], s0=None) -> TermSum:
    terms = [term_from_json(obj) for obj in items]
    if s0 is None:
        s0 = terms[0].s0 if terms else Fraction(0)
    return compact(TermSum(tuple(terms), s0))
