r"""Boundary densities and the multiple-reflection (Neumann) series.

Layer representation on an edge ``e``: every end ``h`` of ``e`` (a
:class:`~kirchhoff_mre.graph.HalfEdge`) carries the charge density ``mu`` of
its vertex (shared by all edges there) and a dipole density ``nu_h`` whose
normal derivative points into the edge.  Kirchhoff conditions at a vertex
``v`` of degree ``d`` then reduce to

    mu_v   = (1/d) sum_h [ P_L * mu_far(h) + Q_L * nu'_opp(h) ]   (+ source)
    nu'_h  = X_h - (1/d) sum_k X_k,   X_h = Q_L * mu_far(h) - P_L * nu'_opp(h)

where ``P_L = EVEN(1, L)``, ``Q_L = ODD(1, L)``, ``L`` is the length of the
edge of ``h``, ``far(h)`` its other vertex and ``opp(h)`` its other end.
Working with ``nu' = d nu/dt`` (the NU_PRIME formulation) keeps every kernel
inside the three-kind family; ``nu`` itself is recovered term by term with
:func:`~kirchhoff_mre.terms.antiderivative`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import FormulationError, GraphValidationError
from .graph import EdgePoint, HalfEdge, QuantumGraph
from .quadrature import integrate_real_line
from .terms import (
    EVEN,
    LOG,
    ODD,
    CanonicalTerm,
    Coef,
    Kind,
    TermSum,
    antiderivative,
    as_fraction,
    convolve,
    convolve_sum,
    evaluate,
    evaluate_derivative,
    termsum_to_json,
)

__all__ = [
    "Formulation",
    "DensitySystem",
    "DensitySeries",
    "NormReport",
    "source_densities",
    "solve_star",
    "iterate",
    "neumann_sum",
    "k0_rowsum",
    "iterated_k0",
    "norm_report",
    "star_center",
    "series_from_closed_form",
]

_HALF_OVER_PI = Coef(Fraction(1, 2), -1)


class Formulation(str, enum.Enum):
    NU = "NU"
    NU_PRIME = "NU_PRIME"


@dataclass(frozen=True)
class DensitySystem:
    """Charge densities per vertex and dipole densities per half-edge at one order.

    ``nu`` holds ``nu`` (LOG terms) or ``nu'`` (ODD terms) depending on
    ``formulation``.  Degree-1 vertices carry no dipole density.
    """

    order: int
    mu: dict[str, TermSum]
    nu: dict[HalfEdge, TermSum]
    formulation: Formulation
    source: EdgePoint
    s0: Fraction
    graph: QuantumGraph = field(repr=False, compare=False)
    closed_form: bool = False

    def dipole(self, h: HalfEdge) -> TermSum:
        return self.nu.get(h, TermSum((), self.s0))

    def charge(self, v: str) -> TermSum:
        return self.mu.get(v, TermSum((), self.s0))

    def dipole_nu(self, h: HalfEdge) -> TermSum:
        """Dipole density ``nu`` itself, integrating ``nu'`` when needed."""
        ts = self.dipole(h)
        if self.formulation is Formulation.NU:
            return ts
        out = TermSum((), self.s0)
        for term in ts:
            out = out + antiderivative(term)
        return out

    def constraint_violations(self) -> list[str]:
        """Vertex-sum of dipole densities must vanish exactly."""
        bad = []
        for v in self.graph.vertices:
            hs = [h for h in self.graph.half_edges(v) if h in self.nu]
            if not hs:
                continue
            total = TermSum((), self.s0)
            for h in hs:
                total = total + self.nu[h]
            if total:
                bad.append(f"sum of dipole densities at {v} is {total}")
        return bad

    def is_empty(self) -> bool:
        return not any(self.mu.values()) and not any(self.nu.values())

    def all_terms(self) -> list[CanonicalTerm]:
        out = []
        for ts in self.mu.values():
            out.extend(ts)
        for ts in self.nu.values():
            out.extend(ts)
        return out

    def __add__(self, other: "DensitySystem") -> "DensitySystem":
        if self.formulation is not other.formulation:
            raise FormulationError("cannot add density systems of different formulations")
        mu = {v: self.charge(v) + other.charge(v) for v in {*self.mu, *other.mu}}
        nu = {h: self.dipole(h) + other.dipole(h) for h in {*self.nu, *other.nu}}
        return DensitySystem(max(self.order, other.order), mu, nu, self.formulation,
                             self.source, self.s0, self.graph, self.closed_form)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "formulation": self.formulation.value,
            "mu": {v: termsum_to_json(self.mu[v]) for v in sorted(self.mu)},
            "nu": {_nu_key(self.graph, h): termsum_to_json(self.nu[h])
                   for h in sorted(self.nu)},
        }


def _nu_key(g: QuantumGraph, h: HalfEdge) -> str:
    v = g.vertex_of(h)
    if g.edge(h.edge).is_loop:
        return f"{v},{h.edge},{'init' if h.side == 0 else 'term'}"
    return f"{v},{h.edge}"


def _empty(s0):
    return TermSum((), s0)


def _check_source(g: QuantumGraph, src: EdgePoint):
    try:
        g.check_point(src)
    except GraphValidationError as exc:
        raise GraphValidationError(
            f"source must lie strictly inside an edge (vertex placement rejected): {exc}"
        ) from None


def _dipole_sites(g: QuantumGraph) -> list[HalfEdge]:
    return [h for h in g.all_half_edges() if g.degree(g.vertex_of(h)) >= 2]


def _project_dipoles(g: QuantumGraph, X: dict[HalfEdge, TermSum], s0) -> dict[HalfEdge, TermSum]:
    """nu_h = X_h - mean of X over the half-edges at the same vertex."""
    nu = {}
    for v in g.vertices:
        hs = g.half_edges(v)
        if len(hs) < 2:
            continue
        total = _empty(s0)
        for h in hs:
            total = total + X.get(h, _empty(s0))
        mean = total.scaled(Fraction(1, len(hs)))
        for h in hs:
            nu[h] = X.get(h, _empty(s0)) - mean
    return nu


def source_densities(g: QuantumGraph, src: EdgePoint, formulation=Formulation.NU_PRIME,
                     s0=0) -> DensitySystem:
    """Order-0 densities generated directly by a unit source at ``(s0, src)``."""
    formulation = Formulation(formulation)
    s0 = as_fraction(s0)
    _check_source(g, src)
    mu = {v: _empty(s0) for v in g.vertices}
    X: dict[HalfEdge, TermSum] = {}
    for side in (0, 1):
        h = HalfEdge(src.edge, side)
        v = g.vertex_of(h)
        y = g.distance_from_end(h, src)
        mu[v] = mu[v] + TermSum((EVEN(Fraction(1, g.degree(v)), y, s0),), s0)
        if formulation is Formulation.NU_PRIME:
            X[h] = TermSum((ODD(1, y, s0),), s0)
        else:
            X[h] = TermSum((LOG(_HALF_OVER_PI, y, s0),), s0)
    nu = _project_dipoles(g, X, s0)
    return DensitySystem(0, mu, nu, formulation, src, s0, g)


def star_center(g: QuantumGraph, center: str | None = None) -> str:
    if center is not None:
        if center not in g.vertices:
            raise GraphValidationError(f"unknown center {center!r}")
        return center
    hubs = [v for v in g.vertices if g.degree(v) >= 2]
    if len(hubs) == 1:
        return hubs[0]
    if not hubs and len(g.edges) == 1:
        return g.edges[0].ends[0]
    raise GraphValidationError("not a star graph: need exactly one vertex of degree >= 2")


def solve_star(g: QuantumGraph, src: EdgePoint, center: str | None = None, s0=0) -> DensitySystem:
    """Exact densities for a star whose edges are infinite leads out of ``center``.

    Edge lengths only fix the coordinate direction; no reflection from the
    leaf ends is included, so the single system is the whole solution.
    """
    s0 = as_fraction(s0)
    c = star_center(g, center)
    for e in g.edges:
        if e.is_loop or c not in e.ends:
            raise GraphValidationError(f"not a star graph: edge {e.id} does not touch {c!r}")
    for v in g.vertices:
        if v != c and g.degree(v) != 1:
            raise GraphValidationError(f"not a star graph: leaf {v!r} has degree {g.degree(v)}")
    _check_source(g, src)
    d = g.degree(c)
    src_edge = g.edge(src.edge)
    h0 = HalfEdge(src.edge, 0 if src_edge.ends[0] == c else 1)
    y = g.distance_from_end(h0, src)
    mu = {c: TermSum((EVEN(Fraction(1, d), y, s0),), s0)}
    nu = {}
    if d >= 2:
        for h in g.half_edges(c):
            weight = (1 if h == h0 else 0) - Fraction(1, d)
            nu[h] = TermSum((LOG(_HALF_OVER_PI * weight, y, s0),), s0)
    return DensitySystem(0, mu, nu, Formulation.NU, src, s0, g, closed_form=True)


def iterate(ds: DensitySystem, g: QuantumGraph | None = None) -> DensitySystem:
    """Apply the boundary operator K once: order N -> order N+1 (increment only)."""
    g = ds.graph if g is None else g
    if ds.closed_form:
        raise FormulationError("closed-form systems already contain every order")
    s0 = ds.s0
    if ds.formulation is Formulation.NU and any(g.degree(v) >= 2 for v in g.vertices):
        raise FormulationError(
            "the NU formulation needs time derivatives of EVEN kernels at vertices of "
            "degree >= 2; use NU_PRIME on this graph"
        )
    mu = {v: _empty(s0) for v in g.vertices}
    X: dict[HalfEdge, TermSum] = {}
    for v in g.vertices:
        hs = g.half_edges(v)
        inv_d = Fraction(1, len(hs))
        acc = _empty(s0)
        for h in hs:
            L = g.length(h)
            far = g.vertex_of(h.opposite)
            P = EVEN(1, L)
            Q = ODD(1, L)
            m_far = ds.charge(far)
            n_opp = ds.dipole(h.opposite)
            acc = acc + convolve_sum(P, m_far)
            if n_opp:
                acc = acc + convolve_sum(Q, n_opp)
            if len(hs) >= 2:
                X[h] = convolve_sum(Q, m_far) - convolve_sum(P, n_opp)
        mu[v] = acc.scaled(inv_d)
    nu = _project_dipoles(g, X, s0) if ds.formulation is Formulation.NU_PRIME else {}
    return DensitySystem(ds.order + 1, mu, nu, ds.formulation, ds.source, s0, g)


@dataclass
class DensitySeries:
    """Orders 0..N of the Neumann series, each entry the order's increment."""

    orders: list[DensitySystem]

    @property
    def graph(self) -> QuantumGraph:
        return self.orders[0].graph

    @property
    def source(self) -> EdgePoint:
        return self.orders[0].source

    @property
    def s0(self) -> Fraction:
        return self.orders[0].s0

    @property
    def max_order(self) -> int:
        return len(self.orders) - 1

    def cumulative(self, n: int | None = None) -> DensitySystem:
        n = self.max_order if n is None else n
        total = self.orders[0]
        for ds in self.orders[1:n + 1]:
            total = total + ds
        return total

    def cumulative_all(self) -> list[DensitySystem]:
        out = [self.orders[0]]
        for ds in self.orders[1:]:
            out.append(out[-1] + ds)
        return out

    def stats(self) -> list[dict]:
        rows = []
        for ds in self.orders:
            terms = ds.all_terms()
            rows.append({
                "order": ds.order,
                "terms": len(terms),
                "max_abs_coef": max((abs(t.c) for t in terms), default=0.0),
            })
        return rows

    def to_json(self) -> dict:
        return {
            "source": {"edge": self.source.edge, "x": str(self.source.x), "s0": str(self.s0)},
            "formulation": self.orders[0].formulation.value,
            "orders": [ds.to_json() for ds in self.orders],
            "stats": self.stats(),
        }


def neumann_sum(g: QuantumGraph, src: EdgePoint, N_max: int,
                formulation=Formulation.NU_PRIME, s0=0) -> DensitySeries:
    """Truncated series (1 + K + ... + K^N_max) g0, kept order by order."""
    if N_max < 0:
        raise ValueError("N_max must be nonnegative")
    current = source_densities(g, src, formulation, s0)
    orders = [current]
    for _ in range(N_max):
        current = iterate(current, g)
        orders.append(current)
    return DensitySeries(orders)


def series_from_closed_form(ds: DensitySystem) -> DensitySeries:
    return DensitySeries([ds])


# --- the interval kernel K0 ----------------------------------------------

def k0_rowsum(L) -> Fraction:
    """Integral of K0(t, s) = (1/pi) L / ((t-s)^2 + L^2) over s: exactly 1 for all L > 0."""
    L = as_fraction(L)
    if L <= 0:
        raise ValueError("L must be positive")
    # the EVEN shape is a probability density in t for every width
    return Fraction(1)


def iterated_k0(L, N: int) -> CanonicalTerm:
    """K0^N by repeated exact convolution; the width comes out as N*L."""
    if N < 1:
        raise ValueError("N must be at least 1")
    base = EVEN(1, as_fraction(L))
    out = base
    for _ in range(N - 1):
        out = convolve(base, out)
    return out


# --- diagnostics -----------------------------------------------------------

_EVEN_DERIV_PEAK = 3.0 * math.sqrt(3.0) / (8.0 * math.pi)


def _sup_norm(ts: TermSum, derivative: int) -> float:
    if not ts:
        return 0.0
    if derivative == 0 and Kind.LOG in ts.kinds():
        return math.inf
    if len(ts) == 1:
        (term,) = ts.terms
        c, d = abs(term.c), float(term.d)
        if derivative == 0:
            return c / (math.pi * d) if term.kind is Kind.EVEN else c / (2 * math.pi * d)
        if term.kind is Kind.LOG:
            return c / d
        if term.kind is Kind.EVEN:
            return c * _EVEN_DERIV_PEAK / (d * d)
        return c / (math.pi * d * d)
    f = evaluate if derivative == 0 else evaluate_derivative
    s0 = float(ts.s0)
    reach = 20.0 * max(float(t.d) for t in ts)
    grid = s0 + np.linspace(-reach, reach, 20001)
    vals = np.abs(f(ts, grid))
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: -abs(f(ts, t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


def _l1_norm(ts: TermSum, derivative: int, weight: str) -> float:
    if not ts:
        return 0.0
    kinds = ts.kinds()
    net_slow = Coef(0)
    for term in ts:
        # terms whose tail decays only like 1/|t|
        if (derivative == 0 and term.kind is Kind.ODD) or (derivative == 1 and term.kind is Kind.LOG):
            net_slow = net_slow + term.c
    if derivative == 0 and Kind.LOG in kinds:
        return math.inf
    if weight == "none" and net_slow:
        return math.inf
    f = evaluate if derivative == 0 else evaluate_derivative
    if weight == "rho":
        integrand = lambda s: np.abs(f(ts, s)) / (1.0 + np.abs(s))
    else:
        integrand = lambda s: np.abs(f(ts, s))
    scale = max(float(t.d) for t in ts)
    return integrate_real_line(integrand, centers=(float(ts.s0), 0.0), scale=scale,
                               atol=1e-12, rtol=1e-9).value


@dataclass
class NormReport:
    rows: list[dict]
    classification: str
    decay_exponent: float | None
    one_sample: bool
    weight: str
    derivative: int

    def series(self, column: str) -> list[tuple[int, float]]:
        return [(row["order"], row[column]) for row in self.rows]


def norm_report(series: DensitySeries, weight: str = "none", derivative: int = 0,
                threshold: float = 1.25) -> NormReport:
    """Per-order size of the densities and a convergence classification.

    The sup-norms ``s_k`` of successive orders are compared against the
    smallest width ``D_k`` present; ``s_k ~ D_k^-p`` with ``p`` above
    ``threshold`` is "decaying", an increasing ``s_k`` is "growing", anything
    else (the harmonic-like ``p = 1`` of the plain interval series) is
    "marginal".
    """
    if weight not in ("none", "rho"):
        raise ValueError("weight must be 'none' or 'rho'")
    if derivative not in (0, 1):
        raise ValueError("derivative must be 0 or 1")
    rows = []
    for ds in series.orders:
        dens = [ts for ts in (*ds.mu.values(), *ds.nu.values()) if ts]
        terms = ds.all_terms()
        rows.append({
            "order": ds.order,
            "terms": len(terms),
            "max_abs_coef": max((abs(t.c) for t in terms), default=0.0),
            "min_distance": min((float(t.d) for t in terms), default=math.inf),
            "sup_norm": max((_sup_norm(ts, derivative) for ts in dens), default=0.0),
            "weighted_l1": max((_l1_norm(ts, derivative, weight) for ts in dens), default=0.0),
        })
    if len(rows) < 2:
        return NormReport(rows, "marginal", None, True, weight, derivative)
    prev, last = rows[-2], rows[-1]
    exponent = None
    if math.isinf(last["sup_norm"]):
        label = "growing"
    elif last["sup_norm"] > prev["sup_norm"] * (1 + 1e-9):
        label = "growing"
    elif last["sup_norm"] == 0.0:
        label = "decaying"
    elif last["min_distance"] > prev["min_distance"] and prev["sup_norm"] > 0:
        exponent = -math.log(last["sup_norm"] / prev["sup_norm"]) / math.log(
            last["min_distance"] / prev["min_distance"])
        label = "decaying" if exponent > threshold else "marginal"
    else:
        label = "decaying" if last["sup_norm"] < prev["sup_norm"] * (1 - 1e-9) else "marginal"
    return NormReport(rows, label, exponent, False, weight, derivative)
