"""Independent ground truths: image solutions and quadrature of the basic integrals.

Nothing here calls the closed-form convolution rules; the image ladder is
generated by enumerating words in the two boundary reflections, and every
integral is done numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .quadrature import integrate_intervals, integrate_real_line
from .terms import CanonicalTerm, as_fraction, evaluate, g0

__all__ = [
    "ImageExpansion",
    "QuadratureRequest",
    "image_halfline",
    "image_star",
    "image_interval",
    "quad",
    "a1_rhs",
    "a2_rhs",
    "a3_rhs",
    "convolution_quad",
    "balian_bloch_lhs",
    "balian_bloch_check",
    "k0_rowsum_quad",
    "constant_vanishing_integral",
]


def image_halfline(t, x, s0, y0) -> float:
    """Neumann image term on the half-line: G0 at the mirrored source (s0, -y0)."""
    if x <= 0 or y0 <= 0:
        raise ValueError("x and y0 must be positive")
    return -math.log((t - s0) ** 2 + (x + y0) ** 2) / (4 * math.pi)


def image_star(d_v: int, j, l, t, x, y) -> float:
    """Cylinder kernel T on an infinite Kirchhoff star, field on edge j, source on edge l."""
    if d_v < 1 or t <= 0 or x <= 0 or y <= 0:
        raise ValueError("need d_v >= 1 and t, x, y > 0")
    delta = 1.0 if j == l else 0.0
    direct = delta * (t / math.pi) / (t * t + (x - y) ** 2) if delta else 0.0
    return direct + (2.0 / d_v - delta) * (t / math.pi) / (t * t + (x + y) ** 2)


@dataclass
class ImageExpansion:
    """Images ``(amplitude, position, order)``; order n images took n+1 reflections."""

    L: Fraction
    y0: Fraction
    order: int
    images: list[tuple[Fraction, Fraction, int]] = field(default_factory=list)

    def at_order(self, n: int) -> dict[Fraction, Fraction]:
        return {p: a for a, p, k in self.images if k == n}

    def through_order(self, n: int) -> dict[Fraction, Fraction]:
        out: dict[Fraction, Fraction] = {}
        for a, p, k in self.images:
            if k <= n:
                out[p] = out.get(p, Fraction(0)) + a
        return out

    def positions(self) -> list[Fraction]:
        return [p for _, p, _ in self.images]

    def __len__(self):
        return len(self.images)


def image_interval(L, y0, N: int) -> ImageExpansion:
    """Neumann images on (0, L) with 1..N+1 reflections, found by reflecting level by level."""
    L, y0 = as_fraction(L), as_fraction(y0)
    if not 0 < y0 < L:
        raise ValueError("need 0 < y0 < L")
    if N < 0:
        raise ValueError("N must be nonnegative")
    reflections = (lambda p: -p, lambda p: 2 * L - p)
    previous, current = set(), {y0}
    images = []
    for level in range(1, N + 2):
        nxt = set()
        for p in current:
            for reflect in reflections:
                q = reflect(p)
                if q not in previous and q not in current:
                    nxt.add(q)
        images.extend((Fraction(1), q, level - 1) for q in sorted(nxt))
        previous, current = current, nxt
    return ImageExpansion(L, y0, N, images)


# --- quadrature ------------------------------------------------------------

def a1_rhs(t, x, s0, y0) -> float:
    return math.pi / (x * y0) * (x + y0) / ((t - s0) ** 2 + (x + y0) ** 2)


def a2_rhs(t, x, s0, y0) -> float:
    return math.pi / y0 * (t - s0) / ((t - s0) ** 2 + (x + y0) ** 2)


def a3_rhs(t, x, s0, y0) -> float:
    return math.pi / y0 * math.log((t - s0) ** 2 + (x + y0) ** 2)


_INTEGRANDS: dict[str, Callable] = {
    "A1": lambda s, t, x, s0, y0: 1.0 / (((t - s) ** 2 + x * x) * ((s - s0) ** 2 + y0 * y0)),
    "A2": lambda s, t, x, s0, y0: (t - s) / (((t - s) ** 2 + x * x) * ((s - s0) ** 2 + y0 * y0)),
    "A3": lambda s, t, x, s0, y0: np.log((t - s) ** 2 + x * x) / ((s - s0) ** 2 + y0 * y0),
}


@dataclass
class QuadratureRequest:
    """One of the tagged integrals ``A1``, ``A2``, ``A3`` or a ``custom`` callable."""

    tag: str
    params: dict
    atol: float = 1e-10
    integrand: Callable | None = None
    centers: tuple = ()
    scale: float | None = None

    def __post_init__(self):
        if self.atol < 1e-12:
            raise ValueError("tolerance below 1e-12 is not supported")
        if self.tag in _INTEGRANDS:
            if self.params.get("x", 1) <= 0 or self.params.get("y0", 1) <= 0:
                raise ValueError("x and y0 must be positive")


def quad(request: QuadratureRequest) -> float:
    """Numerical value of the requested integral over the real line."""
    if request.tag in _INTEGRANDS:
        p = {k: float(request.params[k]) for k in ("t", "x", "s0", "y0")}
        base = _INTEGRANDS[request.tag]
        f = lambda s: base(s, **p)
        centers = (p["t"], p["s0"])
        scale = max(p["x"], p["y0"])
    elif request.tag == "custom":
        if request.integrand is None:
            raise ValueError("custom request needs an integrand")
        f = request.integrand
        centers = request.centers or (0.0,)
        scale = request.scale or 1.0
    else:
        raise ValueError(f"unknown quadrature tag {request.tag!r}")
    return integrate_real_line(f, centers=centers, scale=scale, atol=request.atol).value


def convolution_quad(kernel: CanonicalTerm, density: CanonicalTerm, t, atol=1e-12) -> float:
    """int kernel(t - s) density(s) ds, straight from the term definitions."""
    t = float(t)
    f = lambda s: evaluate(kernel, t - s) * evaluate(density, s)
    centers = (t - float(kernel.s0), float(density.s0))
    scale = max(float(kernel.d), float(density.d))
    return quad(QuadratureRequest("custom", {}, atol, f, centers, scale))


def balian_bloch_lhs(t, x, s0, y0, atol=1e-12) -> float:
    """2 * int over the line y=0 of dG0/dn(field, boundary) * G0(boundary, source)."""
    t, x, s0, y0 = map(float, (t, x, s0, y0))

    def f(s):
        dn = x / (2 * math.pi * ((t - s) ** 2 + x * x))
        return 2.0 * dn * (-np.log((s - s0) ** 2 + y0 * y0) / (4 * math.pi))

    return quad(QuadratureRequest("custom", {}, atol, f, (t, s0), max(x, y0)))


def balian_bloch_check(t, x, s0, y0, atol=1e-12) -> float:
    """Residual of the boundary-integral form of the image source for a flat boundary."""
    if x <= 0 or y0 <= 0:
        raise ValueError("x and y0 must be positive")
    return abs(balian_bloch_lhs(t, x, s0, y0, atol) - g0(t, x, s0, -y0))


def k0_rowsum_quad(L, t=0.0, atol=1e-12) -> float:
    L = float(L)
    f = lambda s: L / (math.pi * ((t - s) ** 2 + L * L))
    return quad(QuadratureRequest("custom", {}, atol, f, (t,), L))


def constant_vanishing_integral(atol=1e-12) -> float:
    """int_0^inf ln(s)/(s^2+1) ds, which must vanish."""
    f = lambda s: np.log(s) / (s * s + 1.0)
    core = integrate_intervals(f, (0.0, 0.5, 1.0, 2.0, 10.0), atol=atol / 2)
    tail = integrate_intervals(lambda u: f(1.0 / u) / (u * u), (0.0, 0.05, 0.1), atol=atol / 2)
    return core.value + tail.value
