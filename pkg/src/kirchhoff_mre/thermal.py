"""Finite-temperature kernels and the interval boundary system on the time circle.

With time periodic of period beta = 1/T the free Green function is

    G_T = -(1/4 pi) ln[cosh(2 pi T (x - y)) - cos(2 pi T (t - s))]

and the charge densities of the interval solve a second-kind Fredholm
system on the circle, discretized here with the trapezoidal rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NearResonanceError, SingularEvaluationError
from .graph import EdgePoint, interval_graph
from .mre import neumann_sum
from .terms import as_fraction, evaluate, g0

__all__ = [
    "ThermalParams",
    "PeriodicDensity",
    "PeriodicSumCheck",
    "NystromResult",
    "ThermalNeumannResult",
    "gt",
    "gt_grad",
    "periodic_sum_check",
    "periodized_poisson",
    "nystrom_solve",
    "thermal_neumann",
    "short_distance_gap",
    "harmonicity_residual",
    "ray_growth",
    "direct_periodization_check",
    "mixed_derivative_gap",
    "zero_temperature_density",
]

RESONANCE_TOL = 1e-10


@dataclass(frozen=True)
class ThermalParams:
    """Temperature ``T`` > 0; the additive constant of G_T is fixed to zero."""

    T: float

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError("temperature must be positive and finite")

    @property
    def beta(self) -> float:
        return 1.0 / self.T

    @classmethod
    def from_beta(cls, beta: float) -> "ThermalParams":
        return cls(1.0 / beta)


def _log_denominator(a, b):
    """ln[cosh a - cos b], accurate near the origin and for large |a|."""
    a = np.abs(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    small = 2.0 * np.sinh(0.5 * np.minimum(a, 40.0)) ** 2 + 2.0 * np.sin(0.5 * b) ** 2
    with np.errstate(divide="ignore"):
        near = np.log(small)
    e = np.exp(-a)
    with np.errstate(divide="ignore"):
        far = a - math.log(2.0) + np.log1p(e * e - 2.0 * np.cos(b) * e)
    return np.where(a > 20.0, far, near)


def _denominator(a, b):
    return 2.0 * np.sinh(0.5 * np.asarray(a, dtype=float)) ** 2 + 2.0 * np.sin(0.5 * np.asarray(b)) ** 2


def _time_offset(t, s, params):
    """t - s reduced to [-beta/2, beta/2]; exact when both times are rational."""
    if all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in (t, s)):
        beta = Fraction(params.beta)
        tau = Fraction(t) - Fraction(s)
        return float(tau - beta * math.floor(tau / beta + Fraction(1, 2)))
    tau = np.asarray(t, dtype=float) - float(s)
    return tau - params.beta * np.round(tau / params.beta)


def _phases(t, x, s, y, params):
    w = 2.0 * math.pi * params.T
    return w * (np.asarray(x, dtype=float) - float(y)), w * _time_offset(t, s, params)


def _at_image(a, b):
    return bool(np.any((a == 0.0) & (b == 0.0)))


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def gt(t, x, s, y, params: ThermalParams):
    """Periodic free Green function; raises at a periodic image of the source."""
    a, b = _phases(t, x, s, y, params)
    if _at_image(a, b):
        raise SingularEvaluationError("G_T evaluated at a periodic image of the source")
    return _scalar(-_log_denominator(a, b) / (4.0 * math.pi))


def gt_grad(t, x, s, y, params: ThermalParams):
    """(dG_T/dt, dG_T/dx)."""
    a, b = _phases(t, x, s, y, params)
    if _at_image(a, b):
        raise SingularEvaluationError("G_T gradient at a periodic image of the source")
    half_T = 0.5 * params.T
    big = np.abs(a) > 20.0
    e = np.exp(-np.abs(a))
    # sinh(a)/(cosh a - cos b) without overflow for large |a|
    ratio_far = np.sign(a) * (1.0 - e * e) / (1.0 + e * e - 2.0 * np.cos(b) * e)
    with np.errstate(over="ignore", invalid="ignore"):
        den = _denominator(a, b)
        ratio_near = np.sinh(a) / den
    dx = -half_T * np.where(big, ratio_far, ratio_near)
    with np.errstate(over="ignore"):
        dt = np.where(big, -half_T * np.sin(b) * 2.0 * e / (1.0 + e * e - 2.0 * np.cos(b) * e),
                      -half_T * np.sin(b) / den)
    return _scalar(dt), _scalar(dx)


@dataclass
class PeriodicSumCheck:
    lhs: float
    rhs: float
    gap: float
    tail_bound: float


def periodic_sum_check(a, b, N_max: int) -> PeriodicSumCheck:
    """Partial sum of 1/(a^2 + (b+N)^2) over |N| <= N_max against its closed form."""
    a, b = float(a), float(b)
    if a <= 0:
        raise ValueError("a must be positive")
    if N_max < 1:
        raise ValueError("N_max must be positive")
    n = np.arange(-N_max, N_max + 1, dtype=float)
    terms = 1.0 / (a * a + (b + n) ** 2)
    lhs = math.fsum(np.sort(terms))
    two_pi_a = 2.0 * math.pi * a
    rhs = math.pi / a * math.sinh(two_pi_a) / float(_denominator(two_pi_a, 2.0 * math.pi * b))
    tail = 2.0 / (N_max - abs(b)) if N_max > abs(b) else math.inf
    return PeriodicSumCheck(lhs, rhs, abs(rhs - lhs), tail)


def periodized_poisson(u, d, params: ThermalParams):
    """Sum over periods of the Poisson kernel EVEN(1, d): T sinh(2 pi T d)/(cosh - cos)."""
    w = 2.0 * math.pi * params.T
    wd = w * float(d)
    return params.T * math.sinh(wd) / _denominator(wd, w * np.asarray(u, dtype=float))


# --- Nystrom solver --------------------------------------------------------

@dataclass
class PeriodicDensity:
    M: int
    beta: float
    values: np.ndarray
    vertex: str

    def __post_init__(self):
        if self.M < 8 or self.M % 2:
            raise ValueError("M must be even and at least 8")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.M,) or not np.all(np.isfinite(self.values)):
            raise ValueError("values must be M finite numbers")

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.M) * (self.beta / self.M)


@dataclass
class _Discrete:
    M: int
    beta: float
    K: np.ndarray            # M x M block, coupling one end to the other
    g: np.ndarray            # 2M source vector
    eigvals: np.ndarray
    eigvecs: np.ndarray
    resonant: np.ndarray     # indices of eigenvalues within RESONANCE_TOL of 1

    @property
    def W(self) -> np.ndarray:
        Z = np.zeros_like(self.K)
        return np.block([[Z, self.K], [self.K, Z]])

    def apply(self, v: np.ndarray) -> np.ndarray:
        M = self.M
        return np.concatenate([self.K @ v[M:], self.K @ v[:M]])

    def project_out(self, v: np.ndarray) -> np.ndarray:
        if not len(self.resonant):
            return v
        V = self.eigvecs[:, self.resonant]
        return v - V @ (V.T @ v)


def _check_inputs(L, y0, M):
    L, y0 = float(L), float(y0)
    if not 0 < y0 < L:
        raise ValueError("need 0 < y0 < L")
    if M < 8 or M % 2:
        raise ValueError("M must be even and at least 8")
    return L, y0


def _discretize(L, y0, s0, params: ThermalParams, M: int) -> _Discrete:
    L, y0 = _check_inputs(L, y0, M)
    beta = params.beta
    h = beta / M
    nodes = np.arange(M) * h
    diff = nodes[:, None] - nodes[None, :]
    K = h * periodized_poisson(diff, L, params)
    u = nodes - float(s0)
    g = np.concatenate([periodized_poisson(u, y0, params), periodized_poisson(u, L - y0, params)])
    Z = np.zeros_like(K)
    lam, vecs = np.linalg.eigh(np.block([[Z, K], [K, Z]]))
    resonant = np.flatnonzero(np.abs(1.0 - lam) < RESONANCE_TOL)
    return _Discrete(M, beta, K, g, lam, vecs, resonant)


@dataclass
class NystromResult:
    mu0: PeriodicDensity
    muL: PeriodicDensity
    residual: float
    condition: float
    resonant_eigenvalues: list[float]
    removed_background: np.ndarray
    spectral_radius: float
    contraction_rate: float
    params: ThermalParams = field(repr=False)

    def summary(self) -> dict:
        return {
            "M": self.mu0.M,
            "beta": self.mu0.beta,
            "residual": self.residual,
            "spectral_radius_estimate": self.spectral_radius,
            "contraction_rate": self.contraction_rate,
            "condition": self.condition,
            "resonant_eigenvalues": self.resonant_eigenvalues,
            "removed_background_per_node": float(np.max(np.abs(self.removed_background)))
            if len(self.removed_background) else 0.0,
        }


def _rates(D: _Discrete) -> tuple[float, float]:
    keep = np.ones(len(D.eigvals), dtype=bool)
    keep[D.resonant] = False
    lam = np.abs(D.eigvals[keep])
    radius = float(lam.max()) if lam.size else 0.0
    inner = lam[lam < 1.0 - RESONANCE_TOL]
    return radius, float(inner.max()) if inner.size else 0.0


def nystrom_solve(L, y0, s0, params: ThermalParams, M: int = 128,
                  zero_mode: str = "deflate") -> NystromResult:
    """Direct dense solve of mu = g + K mu on the trapezoidal nodes.

    On the circle the constant mode mu_0 = mu_L is a Fredholm eigenvector
    with eigenvalue exactly 1.  ``zero_mode="raise"`` refuses to solve;
    ``"deflate"`` reports it, removes the source's component along it and
    solves on the complement (the removed part is returned).
    """
    if zero_mode not in ("deflate", "raise"):
        raise ValueError("zero_mode must be 'deflate' or 'raise'")
    D = _discretize(L, y0, s0, params, M)
    W = D.W
    A = np.eye(2 * M) - W
    gap = float(np.min(np.abs(1.0 - D.eigvals)))
    resonant = [float(D.eigvals[i]) for i in D.resonant]
    if resonant and zero_mode == "raise":
        raise NearResonanceError(
            f"Fredholm eigenvalue {resonant[0]!r} within {RESONANCE_TOL:g} of 1 "
            f"(L={L}, y0={y0}, T={params.T}, M={M})",
            condition=math.inf if gap == 0 else 1.0 / gap,
            eigenvalue=resonant[0],
        )
    rhs = D.project_out(D.g)
    background = D.g - rhs
    if resonant:
        V = D.eigvecs[:, D.resonant]
        A = A + V @ V.T
    mu = np.linalg.solve(A, rhs)
    residual = float(np.max(np.abs(mu - W @ mu - rhs)))
    radius, rate = _rates(D)
    beta = params.beta
    return NystromResult(
        PeriodicDensity(M, beta, mu[:M], "v0"),
        PeriodicDensity(M, beta, mu[M:], "vL"),
        residual, float(np.linalg.cond(A)), resonant, background, radius, rate, params,
    )


@dataclass
class ThermalNeumannResult:
    mu0: PeriodicDensity
    muL: PeriodicDensity
    increments: list[float]
    ratio_estimate: float | None
    spectral_radius: float
    contraction_rate: float
    converged: bool


def thermal_neumann(L, y0, s0, params: ThermalParams, M: int = 128, N_max: int = 200,
                    tol: float | None = None, zero_mode: str = "deflate") -> ThermalNeumannResult:
    """Truncated Neumann iteration of the discrete system used by :func:`nystrom_solve`.

    Order 0 is the discretized source (with the resonant component removed
    under ``zero_mode="deflate"``); iteration stops after ``N_max`` orders
    or once an increment drops below ``tol``.
    """
    if zero_mode not in ("deflate", "none"):
        raise ValueError("zero_mode must be 'deflate' or 'none'")
    D = _discretize(L, y0, s0, params, M)
    deflate = zero_mode == "deflate"
    current = D.project_out(D.g) if deflate else D.g.copy()
    total = current.copy()
    increments = [float(np.max(np.abs(current)))]
    converged = False
    for _ in range(N_max):
        current = D.apply(current)
        if deflate:
            current = D.project_out(current)
        total += current
        increments.append(float(np.max(np.abs(current))))
        if tol is not None and increments[-1] < tol:
            converged = True
            break
    # ratio of successive increments, ignoring those at the roundoff floor
    floor = 1e-11 * increments[0]
    ratios = [b / a for a, b in zip(increments[1:], increments[2:]) if a > floor and b > floor]
    ratio = ratios[-1] if ratios else None
    radius, rate = _rates(D)
    beta = params.beta
    return ThermalNeumannResult(
        PeriodicDensity(M, beta, total[:M], "v0"),
        PeriodicDensity(M, beta, total[M:], "vL"),
        increments, ratio, radius, rate, converged,
    )


def zero_temperature_density(L, y0, s0, t, order: int = 6):
    """Charge densities (mu_0, mu_L) of the infinite-time interval series at times ``t``."""
    L, y0 = as_fraction(L), as_fraction(y0)
    g = interval_graph(L)
    series = neumann_sum(g, EdgePoint("e1", y0), order, s0=as_fraction(s0))
    total = series.cumulative()
    return evaluate(total.charge("v0"), t), evaluate(total.charge("vL"), t)


# --- checks on G_T ----------------------------------------------------------

def short_distance_gap(separation: float, params: ThermalParams, angle: float = 0.7) -> float:
    """|(G_T - G_0) - (-(1/4 pi) ln(2 pi^2 T^2))| at a small separation."""
    dt, dx = separation * math.cos(angle), separation * math.sin(angle)
    diff = gt(dt, dx, 0.0, 0.0, params) - g0(dt, dx, 0.0, 0.0)
    limit = -math.log(2.0 * math.pi ** 2 * params.T ** 2) / (4.0 * math.pi)
    return abs(diff - limit)


def harmonicity_residual(t, x, s, y, params: ThermalParams, rel_step: float = 1e-2) -> float:
    """Laplacian of G_T relative to the size of its two second derivatives.

    Fourth-order central differences with a step proportional to the
    distance from the nearest periodic image of the source.
    """
    beta = params.beta
    tau = (float(t) - float(s) + 0.5 * beta) % beta - 0.5 * beta
    r = math.hypot(tau, float(x) - float(y))
    if r == 0:
        raise SingularEvaluationError("harmonicity check at the source")
    h = rel_step * r
    f = lambda tt, xx: gt(tt, xx, s, y, params)
    c = f(t, x)

    def second(step):
        return (-step(2) + 16.0 * step(1) - 30.0 * c + 16.0 * step(-1) - step(-2)) / (12.0 * h * h)

    d_tt = second(lambda k: f(t + k * h, x))
    d_xx = second(lambda k: f(t, x + k * h))
    scale = abs(d_tt) + abs(d_xx)
    return abs(d_tt + d_xx) / scale if scale else 0.0


def ray_growth(params: ThermalParams, t=0.3, distances=(5.0, 10.0, 20.0, 40.0)):
    """Compare G_T along the ray x - y = u with its large-u asymptote.

    Returns the largest |G_T - (-(T/2)|u| + ln 2/(4 pi))| over ``distances``.
    The gap is O(e^{-2 pi T u}), so the growth rate matches the free
    one-dimensional kernel in |x - y|.
    """
    worst = 0.0
    for u in distances:
        asym = -0.5 * params.T * abs(u) + math.log(2.0) / (4.0 * math.pi)
        worst = max(worst, abs(gt(t, u, 0.0, 0.0, params) - asym))
    return worst


def direct_periodization_check(t, x, s, y, params: ThermalParams, N_max: int = 10**4):
    """Image sum of dG_0/dx over |N| <= N_max against dG_T/dx; returns (sum, exact, tail bound)."""
    beta = params.beta
    n = np.arange(-N_max, N_max + 1, dtype=float)
    u = float(t) - float(s) + n * beta
    v = float(x) - float(y)
    terms = -v / (2.0 * math.pi * (u * u + v * v))
    partial = math.fsum(np.sort(terms))
    exact = gt_grad(t, x, s, y, params)[1]
    lead = N_max - abs(float(t) - float(s)) * params.T
    tail = abs(v) / (2.0 * math.pi) * 2.0 * params.T ** 2 / lead if lead > 0 else math.inf
    return partial, exact, tail


def mixed_derivative_gap(t, x, s, y, params: ThermalParams, h: float = 1e-4) -> float:
    """|d2G/dxdy + d2G/dsdt| by central differences of the analytic gradient."""
    dxdy = (gt_grad(t, x, s, y + h, params)[1] - gt_grad(t, x, s, y - h, params)[1]) / (2 * h)
    dtds = (gt_grad(t, x, s + h, y, params)[0] - gt_grad(t, x, s - h, y, params)[0]) / (2 * h)
    return abs(dxdy + dtds)
