"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run under pytest (lines are printed even with output capture) or directly:

    python tests/test_acceptance.py
"""
import math
import random
import sys
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

from kirchhoff_mre.assembly import assemble_green, cylinder_t, edge_images, vertex_conditions
from kirchhoff_mre.graph import EdgePoint, HalfEdge, interval_graph, load_graph, path_graph, star_graph
from kirchhoff_mre.mre import iterated_k0, k0_rowsum, neumann_sum, norm_report, series_from_closed_form, solve_star
from kirchhoff_mre.oracles import (
    QuadratureRequest,
    a1_rhs,
    a2_rhs,
    a3_rhs,
    balian_bloch_check,
    constant_vanishing_integral,
    convolution_quad,
    image_halfline,
    image_interval,
    image_star,
    quad,
)
from kirchhoff_mre.terms import EVEN, LOG, ODD, Coef, Kind, TermSum, compact, convolve, evaluate
from kirchhoff_mre.thermal import (
    ThermalParams,
    gt,
    harmonicity_residual,
    nystrom_solve,
    periodic_sum_check,
    ray_growth,
    short_distance_gap,
    thermal_neumann,
    zero_temperature_density,
)

GRAPHS = Path(__file__).resolve().parents[1] / "graphs"
MINUS_QUARTER_OVER_PI = Coef(F(-1, 4), -1)


class Criterion:
    """Collects named sub-checks and renders one summary line."""

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.failures, self.notes = [], []

    def check(self, ok, label):
        if not ok:
            self.failures.append(label)

    def note(self, text):
        self.notes.append(text)

    @property
    def passed(self):
        return not self.failures

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        detail = "; ".join(self.notes)
        if self.failures:
            detail = "failed: " + ", ".join(self.failures) + ("; " + detail if detail else "")
        return f"{status} criterion {self.number} ({self.title}): {detail}"


def _finish(crit, capsys=None):
    line = crit.line()
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert crit.passed, line


def _rel(a, b):
    return abs(a - b) / abs(b)


# --- 1: convolution identities against quadrature --------------------------

def criterion_1():
    crit = Criterion(1, "convolution identities vs quadrature")
    rng = random.Random(20240601)
    worst = {}
    for tag, rhs in (("A1", a1_rhs), ("A2", a2_rhs), ("A3", a3_rhs)):
        count, err = 0, 0.0
        while count < 20:
            t, s0 = F(rng.randint(-20, 20), 8), F(rng.randint(-20, 20), 8)
            x, y0 = F(rng.randint(1, 24), 8), F(rng.randint(1, 24), 8)
            exact = rhs(*map(float, (t, x, s0, y0)))
            # relative error is undefined at zeros of the closed form
            if abs(exact) < 1e-2:
                continue
            got = quad(QuadratureRequest(tag, dict(t=t, x=x, s0=s0, y0=y0), atol=1e-12))
            err = max(err, _rel(got, exact))
            count += 1
        worst[tag] = err
        crit.check(err <= 1e-8, tag)
    err = 0.0
    for _ in range(20):
        a, b = F(rng.randint(1, 24), 8), F(rng.randint(1, 24), 8)
        ca, cb = F(rng.randint(1, 9), rng.randint(1, 5)), F(rng.randint(-9, -1), rng.randint(1, 5))
        t = rng.randint(-20, 20) / 8
        kernel, density = ODD(ca, a), ODD(cb, b, s0=F(rng.randint(-8, 8), 8))
        closed = convolve(kernel, density)
        crit.check(closed.kind is Kind.EVEN and closed.d == a + b and closed.c == Coef(-ca * cb), "ODD*ODD rule")
        err = max(err, _rel(convolution_quad(kernel, density, t), evaluate(closed, t)))
    worst["ODD*ODD"] = err
    crit.check(err <= 1e-8, "ODD*ODD quadrature")
    const = abs(constant_vanishing_integral())
    crit.check(const <= 1e-8, "constant-vanishing integral")
    points = [(1, 1, 0, 1), (0, 2, 0, 1), (0.5, 0.3, -1, 1.5), (-2, 1.2, 1, 0.4), (3, 0.7, 0.2, 2.5)]
    bb = max(balian_bloch_check(*p) for p in points)
    crit.check(bb <= 1e-8, "Balian-Bloch")
    crit.note(", ".join(f"{k} max rel {v:.1e}" for k, v in worst.items()))
    crit.note(f"constant integral {const:.1e}; image identity residual {bb:.1e} at 5 points")
    return crit


# --- 2: half-line ------------------------------------------------------------

def halfline_series(y0):
    return series_from_closed_form(solve_star(star_graph(["100"]), EdgePoint("e1", F(y0))))


def criterion_2():
    crit = Criterion(2, "half-line: one reflection equals the image term")
    grid = [F(1, 4), F(1, 2), F(1), F(3, 2), F(3)]
    worst = 0.0
    for y0 in grid:
        series = halfline_series(y0)
        crit.check(len(series.orders) == 1, "single reflection")
        for x in grid:
            point = EdgePoint("e1", x)
            image = TermSum.of(LOG(MINUS_QUARTER_OVER_PI, x + y0))
            terms = assemble_green(series, 1, point).order_terms[0]
            crit.check(compact(terms) == image, f"term data x={x} y0={y0}")
            for t in grid:
                if x == y0:
                    continue
                ge = assemble_green(series, t, point)
                worst = max(worst, abs(ge.gamma - image_halfline(float(t), float(x), 0.0, float(y0))))
    crit.check(worst <= 1e-12, "5x5 numeric grid")
    crit.note(f"term data identical on 25 placements; max |gamma - image| {worst:.1e}")
    return crit


# --- 3: star graphs ----------------------------------------------------------

def criterion_3():
    crit = Criterion(3, "star closed form and kernel")
    half_over_pi = Coef(F(1, 2), -1)
    for d in (1, 2, 3, 5):
        g = star_graph(["10"] * d)
        for y0 in (F(1, 2), F(1), F(7, 3)):
            ds = solve_star(g, EdgePoint("e1", y0))
            ok = ds.charge("c") == TermSum.of(EVEN(F(1, d), y0))
            if d > 1:
                ok &= ds.dipole(HalfEdge("e1", 0)) == TermSum.of(LOG(half_over_pi * (1 - F(1, d)), y0))
                for k in range(2, d + 1):
                    ok &= ds.dipole(HalfEdge(f"e{k}", 0)) == TermSum.of(LOG(half_over_pi * F(-1, d), y0))
            else:
                ok &= ds.nu == {}
            ok &= ds.constraint_violations() == []
            crit.check(ok, f"exact densities d={d} y0={y0}")
    grid = [F(1, 4), F(1, 2), F(1), F(3, 2), F(3)]
    worst = 0.0
    for d in (1, 2, 3, 5):
        for y in grid:
            series = series_from_closed_form(solve_star(star_graph(["10"] * d), EdgePoint("e1", y)))
            for j in sorted({"e1", f"e{d}"}):
                for x in grid:
                    for t in grid:
                        got = cylinder_t(series, t, EdgePoint(j, x))
                        worst = max(worst, abs(got - image_star(d, j, "e1", float(t), float(x), float(y))))
    crit.check(worst <= 1e-12, "5x5x5 grid")
    series = series_from_closed_form(solve_star(star_graph(["10", "10"]), EdgePoint("e1", F(1, 2))))
    for x in grid:
        own = assemble_green(series, 1, EdgePoint("e1", x))
        across = assemble_green(series, 1, EdgePoint("e2", x))
        crit.check(not compact(own.order_terms[0]), "no reflection on the source edge at d=2")
        crit.check(compact(across.order_terms[0]) == TermSum.of(LOG(MINUS_QUARTER_OVER_PI, x + F(1, 2))),
                   "free continuation across the d=2 vertex")
    crit.note(f"exact densities for d in 1,2,3,5; max |T - image| {worst:.1e} over 5x5x5 per d; "
              "d=2 reflection cancels exactly")
    return crit


# --- 4: interval image ladder ------------------------------------------------

def ladder(L, y0, n):
    """Positions of the order-n reflections: two per order, alternately -y0 and +y0 based."""
    m = n // 2
    if n % 2 == 0:
        return {-y0 - 2 * m * L: 1, (2 * m + 2) * L - y0: 1}
    return {y0 - (2 * m + 2) * L: 1, y0 + (2 * m + 2) * L: 1}


def criterion_4():
    crit = Criterion(4, "interval image ladder")
    worst = 0.0
    for L, y0 in ((F(1), F(3, 10)), (F(3, 2), F(2, 5)), (F(2), F(7, 4))):
        series = neumann_sum(interval_graph(L), EdgePoint("e1", y0), 5)
        images = image_interval(L, y0, 5)
        for ds in series.orders:
            got = {p: a.rational() if a.is_rational() else None for p, a in edge_images(ds, "e1").items()}
            crit.check(got == images.at_order(ds.order), f"MRE vs reflections L={L} y0={y0} order {ds.order}")
            crit.check(got == ladder(L, y0, ds.order), f"+-y0+2kL pattern L={L} y0={y0} order {ds.order}")
        for N in range(6):
            partial = neumann_sum(interval_graph(L), EdgePoint("e1", y0), N)
            nxt = sorted(image_interval(L, y0, N + 1).at_order(N + 1))
            p_left, q = float(nxt[0]), float(nxt[-1] - L)
            for t in (F(0), F(1, 2), F(-3, 2)):
                u = float(t)
                _, flux0 = vertex_conditions(partial, "v0", t)
                _, fluxL = vertex_conditions(partial, "vL", t)
                worst = max(worst, abs(flux0 + p_left / (2 * math.pi * (u * u + p_left ** 2))),
                            abs(fluxL - q / (2 * math.pi * (u * u + q * q))))
    crit.check(worst <= 1e-10, "truncation residual")
    crit.note(f"orders 0-5 exact for 3 (L, y0); max |residual - next image trace| {worst:.1e}")
    return crit


# --- 5: path and triangle ----------------------------------------------------

def cumulative_images(series, edge, upto, shift=F(0)):
    out = {}
    for ds in series.orders[:upto + 1]:
        for p, a in edge_images(ds, edge).items():
            out[p + shift] = out.get(p + shift, Coef(0)) + a
    return {p: a for p, a in out.items() if a}


def path_order(n, same_edge):
    """Path order holding interval order n: each far-side bounce crosses the middle vertex twice."""
    bump = (n % 2 == 0) if same_edge else (n % 2 == 1)
    return 2 * n + 2 if bump else 2 * n + 1


def criterion_5():
    crit = Criterion(5, "constraints, width growth and transparency")
    for name, src in (("path3", EdgePoint("e1", F(1, 3))), ("triangle", EdgePoint("e2", F(1, 2)))):
        g = load_graph(GRAPHS / f"{name}.json")
        lengths = {e.length for e in g.edges}
        series = neumann_sum(g, src, 6)
        for ds in series.orders:
            crit.check(ds.constraint_violations() == [], f"{name} constraints order {ds.order}")
        for prev, ds in zip(series.orders, series.orders[1:]):
            parents = {t.d for t in prev.all_terms()}
            grown = all(any(t.d - L in parents for L in lengths) for t in ds.all_terms())
            crit.check(grown, f"{name} width growth order {ds.order}")
    for lengths, y0 in ((["1", "1"], F(1, 3)), (["1", "3/2"], F(3, 10))):
        p = path_graph(lengths)
        L1 = p.edge("e1").length
        whole = interval_graph(sum(e.length for e in p.edges))
        path_series = neumann_sum(p, EdgePoint("e1", y0), 10)
        line_series = neumann_sum(whole, EdgePoint("e1", y0), 4)
        for n in range(5):
            cp, cl = path_series.cumulative(2 * n + 1), line_series.cumulative(n)
            crit.check(cp.charge("v0") == cl.charge("v0") and cp.charge("v2") == cl.charge("vL"),
                       f"densities {lengths} order {n}")
            line_img = cumulative_images(line_series, "e1", n)
            crit.check(cumulative_images(path_series, "e1", path_order(n, True)) == line_img,
                       f"images on source edge {lengths} order {n}")
            # off the source edge the direct term is carried by the layers as an image at y0
            across = cumulative_images(path_series, "e2", path_order(n, False), shift=L1)
            crit.check(across == {**line_img, y0: Coef(1)}, f"images across {lengths} order {n}")
    crit.note("path3 and triangle exact through order 6; two-edge paths reproduce the interval exactly")
    return crit


# --- 6: single-edge kernel operator -----------------------------------------

def criterion_6():
    crit = Criterion(6, "kernel operator and norm diagnostics")
    for L in (F(1), F(1, 2), F(7, 3)):
        crit.check(k0_rowsum(L) == 1, f"row sum L={L}")
    worst = 0.0
    for L in (F(1), F(3, 4)):
        for N in range(1, 7):
            term = iterated_k0(L, N)
            crit.check(term == EVEN(1, N * L), f"width N*L for L={L} N={N}")
            if N >= 2:
                for t in (0.0, 0.3, -1.7):
                    got = convolution_quad(EVEN(1, L), iterated_k0(L, N - 1), t)
                    worst = max(worst, _rel(got, evaluate(term, t)))
    crit.check(worst <= 1e-8, "quadrature cross-check")
    series = neumann_sum(interval_graph("1"), EdgePoint("e1", F(3, 10)), 6)
    plain, diff = norm_report(series), norm_report(series, derivative=1)
    crit.check(plain.classification == "marginal", "undifferentiated series marginal")
    crit.check(diff.classification == "decaying", "time-differentiated series decaying")
    crit.note(f"row sum exactly 1; widths exact for N<=6; quadrature max rel {worst:.1e}; "
              f"classifications {plain.classification}/{diff.classification}")
    return crit


# --- 7: periodic Green function --------------------------------------------

def criterion_7():
    crit = Criterion(7, "periodic Green function checks")
    rng = np.random.default_rng(7)
    p = ThermalParams(0.8)
    beta = F(p.beta)
    periodic = True
    for _ in range(20):
        t, x, s, y = (F(int(v), 64) for v in rng.integers(-64, 64, 4))
        if x == y:
            continue
        periodic &= all(gt(t + k * beta, x, s, y, p) == gt(t, x, s, y, p) for k in (1, -1, 3))
    crit.check(periodic, "periodicity")
    short = short_distance_gap(1e-4, ThermalParams(1.0))
    crit.check(short <= 1e-6, "short-distance match")
    harm = max(harmonicity_residual(*rng.uniform(-1, 1, 4), p) for _ in range(10))
    crit.check(harm <= 1e-6, "harmonicity")
    ray = ray_growth(ThermalParams(1.0))
    crit.check(ray <= 1e-10, "growth along a ray")
    gaps = [periodic_sum_check(a, b, 10**6).gap for a, b in ((1, 0), (1, 0.5), (0.5, 1 / 3))]
    crit.check(max(gaps) <= 3e-6, "periodic sums")
    crit.note(f"periodic to the bit on rational times; short-distance gap {short:.1e}; "
              f"max relative Laplacian {harm:.1e}; ray asymptote gap {ray:.1e}; "
              f"sum gaps {', '.join(f'{g:.1e}' for g in gaps)}")
    return crit


# --- 8: thermal solver -------------------------------------------------------

def criterion_8():
    crit = Criterion(8, "thermal solver")
    T1 = ThermalParams(1.0)
    coarse = nystrom_solve(1, F(3, 10), F(1, 5), T1, M=64)
    fine = nystrom_solve(1, F(3, 10), F(1, 5), T1, M=128)
    crit.check(fine.residual <= 1e-12, "residual")
    refine = max(np.max(np.abs(coarse.mu0.values - fine.mu0.values[::2])),
                 np.max(np.abs(coarse.muL.values - fine.muL.values[::2])))
    crit.check(refine <= 1e-10, "M-refinement")
    series = thermal_neumann(1, F(3, 10), F(1, 5), T1, M=128, N_max=500, tol=1e-12)
    agree = max(np.max(np.abs(series.mu0.values - fine.mu0.values)),
                np.max(np.abs(series.muL.values - fine.muL.values)))
    crit.check(series.converged and agree <= 1e-8, "Neumann vs direct")
    # low temperature: beta = 20, L = 1, compare at nodes within 1/2 of the source time
    cold = ThermalParams.from_beta(20.0)
    s0 = F(0)
    direct = nystrom_solve(1, F(3, 10), s0, cold, M=512)
    nodes = direct.mu0.nodes
    near = np.abs((nodes + 10.0) % 20.0 - 10.0) <= 0.5
    tau = (nodes[near] + 10.0) % 20.0 - 10.0
    mu0_line, muL_line = zero_temperature_density(1, F(3, 10), s0, tau, order=6)
    background = direct.removed_background
    mu0_full = direct.mu0.values[near] + background[:direct.mu0.M][near]
    muL_full = direct.muL.values[near] + background[direct.mu0.M:][near]
    cold_gap = max(np.max(np.abs(mu0_full - mu0_line)), np.max(np.abs(muL_full - muL_line)))
    crit.check(cold_gap <= 1e-4, "low-temperature limit")
    crit.note(f"residual {fine.residual:.1e}; M 64 vs 128 {refine:.1e}; Neumann vs direct {agree:.1e} "
              f"after {len(series.increments) - 1} orders; beta=20 gap to order-6 line density {cold_gap:.3e}")
    return crit


# --- 9: symmetry of partial sums -------------------------------------------

SYMMETRY_CASES = {
    "interval": ("e1", F(3, 10), "e1", F(4, 5)),
    "path3": ("e1", F(1, 3), "e2", F(1, 2)),
    "triangle": ("e1", F(1, 4), "e3", F(1, 5)),
    "tripod": ("e1", F(1, 2), "e3", F(1, 4)),
    "lollipop": ("e1", F(1, 2), "loop", F(3, 4)),
}


def criterion_9():
    crit = Criterion(9, "symmetry of assembled partial sums")
    worst, count = 0.0, 0
    for name, (ea, xa, eb, xb) in SYMMETRY_CASES.items():
        g = load_graph(GRAPHS / f"{name}.json")
        for a, b in ((EdgePoint(ea, xa), EdgePoint(eb, xb)), (EdgePoint(ea, xa), EdgePoint(ea, xa / 2 + F(1, 7)))):
            for ta, tb in ((F(1, 4), F(-1, 2)), (F(0), F(3, 2))):
                forward = assemble_green(neumann_sum(g, a, 6, s0=ta), tb, b).cumulative_by_order
                backward = assemble_green(neumann_sum(g, b, 6, s0=tb), ta, a).cumulative_by_order
                for u, v in zip(forward, backward):
                    worst = max(worst, abs(u - v))
                    count += 1
    crit.check(worst <= 1e-12, "symmetry")
    crit.note(f"{count} partial sums (orders 0-6) on {len(SYMMETRY_CASES)} graphs; max asymmetry {worst:.1e}")
    return crit


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance(criterion, capsys):
    _finish(criterion(), capsys)


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for crit in results:
        print(crit.line())
    sys.exit(0 if all(c.passed for c in results) else 1)
