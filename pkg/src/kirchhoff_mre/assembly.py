"""Green function and cylinder kernels assembled from a density series.

A layer at the end of an edge, seen from a point at distance ``xi`` from
that end, turns every density term into a LOG term whose width grows by
``xi``:

    single layer   EVEN(c, d)  ->  LOG(-c/(4 pi), d + xi)
    dipole layer   LOG(c, d)   ->  LOG(c/2, d + xi)

so the whole assembly is exact and needs no numerical integration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import SingularEvaluationError
from .graph import EdgePoint, HalfEdge
from .mre import DensitySeries, DensitySystem
from .terms import (
    LOG,
    Coef,
    TermSum,
    as_fraction,
    differentiate,
    evaluate,
)

__all__ = [
    "LayerTerm",
    "GreenEvaluation",
    "CylinderValues",
    "layer_terms",
    "free_terms",
    "assemble_green",
    "assemble_gamma",
    "cylinder_values",
    "cylinder_tbar",
    "cylinder_t",
    "renormalized_diagonal",
    "vertex_conditions",
    "edge_images",
]

_MINUS_QUARTER_OVER_PI = Coef(Fraction(-1, 4), -1)


class LayerTerm(NamedTuple):
    """``c * ln[(t - s0)^2 + (b + sign*xi)^2]`` with ``xi`` measured from one edge end."""

    c: Coef
    b: Fraction
    sign: int

    def width_at(self, xi: Fraction) -> Fraction:
        return abs(self.b + self.sign * xi)


def layer_terms(ds: DensitySystem, edge: str, side: int = 0) -> list[LayerTerm]:
    """Contributions of one order's layers to the field on ``edge``.

    ``xi`` is the coordinate measured from end ``side`` of the edge.
    """
    g = ds.graph
    L = g.edge(edge).length
    out = []
    for end in (0, 1):
        h = HalfEdge(edge, end)
        v = g.vertex_of(h)
        own = end == side
        for term in ds.mu.get(v, ()):
            c = term.c * _MINUS_QUARTER_OVER_PI
            out.append(LayerTerm(c, term.d, 1) if own else LayerTerm(c, term.d + L, -1))
        if h in ds.nu:
            for term in ds.dipole_nu(h):
                c = term.c * Fraction(1, 2)
                out.append(LayerTerm(c, term.d, 1) if own else LayerTerm(c, term.d + L, -1))
    return out


def free_terms(series: DensitySeries, edge: str, side: int = 0) -> list[LayerTerm]:
    """The direct term G0 when ``edge`` carries the source, else nothing."""
    src = series.source
    if src.edge != edge:
        return []
    g = series.graph
    y = g.distance_from_end(HalfEdge(edge, side), src)
    return [LayerTerm(_MINUS_QUARTER_OVER_PI, -y, 1)]


def _as_termsum(layers: Iterable[LayerTerm], xi: Fraction, s0: Fraction) -> TermSum:
    return TermSum.of(*(LOG(l.c, l.width_at(xi), s0) for l in layers), s0=s0)


def _eval_logs(ts: TermSum, t: float) -> float:
    try:
        return evaluate(ts, t)
    except SingularEvaluationError:
        raise SingularEvaluationError("Green function evaluated at the source point") from None


@dataclass
class GreenEvaluation:
    t: float
    point: EdgePoint
    source: EdgePoint
    s0: Fraction
    free_term: TermSum
    order_terms: list[TermSum]
    free: float
    contributions: list[float]
    includes_free: bool
    cumulative_by_order: list[float] = field(default_factory=list)

    @property
    def gamma(self) -> float:
        return math.fsum(self.contributions)

    @property
    def cumulative(self) -> float:
        return self.free + self.gamma


def _check_field_point(series: DensitySeries, x: EdgePoint):
    series.graph.check_point(x)


def assemble_green(series: DensitySeries, t, x: EdgePoint) -> GreenEvaluation:
    """G = delta_{e e0} G0 + gamma_e at ``(t, x)``, broken down by order."""
    _check_field_point(series, x)
    s0 = series.s0
    xi = x.x
    free_ts = _as_termsum(free_terms(series, x.edge), xi, s0)
    t = float(t)
    free_val = _eval_logs(free_ts, t) if free_ts else 0.0
    order_terms = [_as_termsum(layer_terms(ds, x.edge), xi, s0) for ds in series.orders]
    contributions = [_eval_logs(ts, t) for ts in order_terms]
    running = free_val
    cumulative = []
    for value in contributions:
        running += value
        cumulative.append(running)
    return GreenEvaluation(t, x, series.source, s0, free_ts, order_terms, free_val,
                           contributions, bool(free_ts), cumulative)


def assemble_gamma(series: DensitySeries, t, x: EdgePoint) -> float:
    """Boundary part gamma = G - delta G0 alone; finite even at the source point."""
    _check_field_point(series, x)
    total = 0.0
    for ds in series.orders:
        ts = _as_termsum(layer_terms(ds, x.edge), x.x, series.s0)
        if ts:
            total += _eval_logs(ts, float(t))
    return total


@dataclass
class CylinderValues:
    tbar: float
    T: float
    tbar_by_order: list[float]
    T_by_order: list[float]
    green: GreenEvaluation


def _time_derivative(ts: TermSum) -> TermSum:
    out = TermSum((), ts.s0)
    for term in ts:
        out = out + differentiate(term)
    return out


def _require_zero_source_time(series: DensitySeries):
    if series.s0 != 0:
        raise ValueError("cylinder kernels are defined with the source at time 0")


def _check_source_point(series: DensitySeries, y):
    """``y`` is optional and only confirms the series' own source point."""
    if y is None:
        return
    src = series.source
    if isinstance(y, EdgePoint):
        same = y == src
    else:
        same = as_fraction(y) == src.x
    if not same:
        raise ValueError(f"series was built for source {src}, not {y}")


def cylinder_values(series: DensitySeries, t, x: EdgePoint, y=None) -> CylinderValues:
    """T-bar = -2G and T = -2 dG/dt, the latter by exact differentiation of every term."""
    _require_zero_source_time(series)
    _check_source_point(series, y)
    ge = assemble_green(series, t, x)
    tf = float(t)
    if ge.free_term and ge.free_term.terms[0].d == 0 and tf == 0.0:
        raise SingularEvaluationError("cylinder kernel T at t = 0 with x = y")
    t_free = 0.0
    if ge.free_term:
        # -2 d/dt of -(1/4pi) ln(u^2 + w^2), valid for zero width away from t = 0
        u, w = tf - float(ge.s0), float(ge.free_term.terms[0].d)
        t_free = (u / math.pi) / (u * u + w * w)
    t_orders = [-2.0 * evaluate(_time_derivative(ts), tf) if ts else 0.0
                for ts in ge.order_terms]
    tbar_by_order, T_by_order = [], []
    run_tbar, run_T = -2.0 * ge.free, t_free
    for g_val, T_val in zip(ge.contributions, t_orders):
        run_tbar += -2.0 * g_val
        run_T += T_val
        tbar_by_order.append(run_tbar)
        T_by_order.append(run_T)
    return CylinderValues(run_tbar, run_T, tbar_by_order, T_by_order, ge)


def cylinder_tbar(series: DensitySeries, t, x: EdgePoint, y=None) -> float:
    return cylinder_values(series, t, x, y).tbar


def cylinder_t(series: DensitySeries, t, x: EdgePoint, y=None) -> float:
    return cylinder_values(series, t, x, y).T


def renormalized_diagonal(series: DensitySeries, t, x=None) -> float:
    """T(t, y, y) - 1/(pi t) at the source point y of the series.

    The diagonal needs field point = source point, so ``x`` (if given) must
    be the series' source.
    """
    _require_zero_source_time(series)
    _check_source_point(series, x)
    t = float(t)
    if t <= 0:
        raise SingularEvaluationError("renormalized diagonal needs t > 0")
    src = series.source
    total = 0.0
    for ds in series.orders:
        ts = _as_termsum(layer_terms(ds, src.edge), src.x, series.s0)
        if ts:
            total += -2.0 * evaluate(_time_derivative(ts), t)
    return total


def vertex_conditions(series: DensitySeries, vertex: str, t, order: int | None = None):
    """Kirchhoff residuals at ``vertex``: (continuity spread, outward-derivative sum).

    Values are the one-sided limits from inside each edge, evaluated from the
    cumulative series through ``order``.
    """
    g = series.graph
    n = series.max_order if order is None else order
    u = float(t) - float(series.s0)
    values, flux = [], 0.0
    for h in g.half_edges(vertex):
        layers = list(free_terms(series, h.edge, h.side))
        for ds in series.orders[:n + 1]:
            layers.extend(layer_terms(ds, h.edge, h.side))
        value = 0.0
        for lt in layers:
            b, c = float(lt.b), float(lt.c)
            r2 = u * u + b * b
            if r2 == 0:
                raise SingularEvaluationError("vertex condition evaluated at the source")
            value += c * math.log(r2)
            flux += c * 2.0 * lt.sign * b / r2
        values.append(value)
    return max(values) - min(values), flux


def edge_images(ds: DensitySystem, edge: str) -> dict[Fraction, Coef]:
    """Image charges seen on ``edge``: position (edge coordinate) -> amplitude.

    An amplitude ``a`` at position ``p`` contributes ``-(a/4 pi) ln[(t-s0)^2 + (x-p)^2]``.
    """
    images: dict[Fraction, Coef] = {}
    for lt in layer_terms(ds, edge, 0):
        # b + sign*x = +-(x - p)
        p = -lt.b if lt.sign == 1 else lt.b
        images[p] = images.get(p, Coef(0)) + lt.c * Coef(-4, 1)
    return {p: a for p, a in sorted(images.items()) if a}
