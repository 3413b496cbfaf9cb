import math
from fractions import Fraction as F

import numpy as np
import pytest

from kirchhoff_mre.errors import NearResonanceError, SingularEvaluationError
from kirchhoff_mre.thermal import (
    PeriodicDensity,
    ThermalParams,
    direct_periodization_check,
    gt,
    gt_grad,
    harmonicity_residual,
    mixed_derivative_gap,
    nystrom_solve,
    periodic_sum_check,
    periodized_poisson,
    ray_growth,
    short_distance_gap,
    thermal_neumann,
)

T1 = ThermalParams(1.0)


def test_params():
    assert ThermalParams.from_beta(4).T == 0.25
    assert ThermalParams(0.5).beta == 2.0
    with pytest.raises(ValueError):
        ThermalParams(0)


def test_gt_half_period():
    p = ThermalParams(0.7)
    assert gt(p.beta / 2, 0.3, 0, 0.3, p) == pytest.approx(-math.log(2) / (4 * math.pi), rel=1e-14)


def test_gt_periodicity_and_singularity():
    p = ThermalParams(0.3)
    beta = F(p.beta)
    for t in (F(1, 10), F(9, 10), F(-13, 10)):
        assert gt(t + beta, F(2, 5), 0, F(1, 10), p) == gt(t, F(2, 5), 0, F(1, 10), p)
        assert gt(t - 3 * beta, F(2, 5), 0, F(1, 10), p) == gt(t, F(2, 5), 0, F(1, 10), p)
    # float times agree to rounding of t + beta
    assert gt(0.1 + p.beta, 0.4, 0.0, 0.1, p) == pytest.approx(gt(0.1, 0.4, 0.0, 0.1, p), rel=1e-13)
    with pytest.raises(SingularEvaluationError):
        gt(beta, F(1, 5), 0, F(1, 5), p)
    with pytest.raises(SingularEvaluationError):
        gt(ThermalParams(0.5).beta, 0.2, 0, 0.2, ThermalParams(0.5))


def test_gt_large_separation_is_finite():
    assert np.isfinite(gt(0.1, 500.0, 0, 0, T1))
    assert gt(0.1, 500.0, 0, 0, T1) == pytest.approx(-250 + math.log(2) / (4 * math.pi), rel=1e-14)


def test_short_distance():
    assert short_distance_gap(1e-4, T1) <= 1e-6


def test_harmonicity_at_ten_points():
    rng = np.random.default_rng(2)
    p = ThermalParams(0.8)
    for _ in range(10):
        t, x, s, y = rng.uniform(-1, 1, 4)
        assert harmonicity_residual(t, x, s, y, p) <= 1e-6


def test_ray_growth_matches_linear_asymptote():
    assert ray_growth(T1) <= 1e-10


def test_gt_grad_zeros_and_differences():
    assert gt_grad(0.3, 0.5, 0.0, 0.5, T1)[1] == 0.0
    assert gt_grad(0.2, 0.5, 0.2, 0.1, T1)[0] == 0.0
    t, x, h = 0.3, 0.4, 1e-6
    dt, dx = gt_grad(t, x, 0, 0, T1)
    assert (gt(t + h, x, 0, 0, T1) - gt(t - h, x, 0, 0, T1)) / (2 * h) == pytest.approx(dt, abs=1e-8)
    assert (gt(t, x + h, 0, 0, T1) - gt(t, x - h, 0, 0, T1)) / (2 * h) == pytest.approx(dx, abs=1e-8)


def test_mixed_derivative_antisymmetry():
    assert mixed_derivative_gap(0.3, 0.9, 0.1, 0.2, T1) <= 1e-6


def test_direct_periodization():
    partial, exact, tail = direct_periodization_check(0.3, 0.9, 0.1, 0.2, T1)
    assert abs(partial - exact) <= 1e-4
    assert abs(partial - exact) <= tail


@pytest.mark.parametrize("a, b, closed", [(1, 0, 3.153348), (1, 0.5, 3.129880)])
def test_periodic_sum_closed_forms(a, b, closed):
    # reference values are quoted to six decimals
    assert periodic_sum_check(a, b, 10).rhs == pytest.approx(closed, abs=2e-6)


def test_periodic_sum_gap_at_one_million():
    for a, b in [(1, 0), (1, 0.5), (0.5, 1 / 3)]:
        res = periodic_sum_check(a, b, 10**6)
        assert res.gap <= 3e-6
        assert res.gap <= res.tail_bound


def test_periodized_poisson_has_unit_mass():
    p = ThermalParams(0.5)
    u = np.arange(400) * (p.beta / 400)
    assert float(np.sum(periodized_poisson(u, 0.7, p))) * p.beta / 400 == pytest.approx(1.0, abs=1e-12)


def test_nystrom_residual_and_refinement():
    a = nystrom_solve(1, 0.3, 0.2, T1, M=64)
    b = nystrom_solve(1, 0.3, 0.2, T1, M=128)
    assert a.residual <= 1e-12
    assert a.resonant_eigenvalues and a.resonant_eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(a.mu0.values - b.mu0.values[::2])) <= 1e-10
    assert np.max(np.abs(a.muL.values - b.muL.values[::2])) <= 1e-10
    assert set(a.summary()) >= {"M", "beta", "residual", "spectral_radius_estimate"}


def test_nystrom_raises_on_zero_mode():
    with pytest.raises(NearResonanceError) as info:
        nystrom_solve(1, 0.3, 0.0, T1, M=32, zero_mode="raise")
    assert info.value.eigenvalue == pytest.approx(1.0, abs=1e-10)


def test_neumann_agrees_with_nystrom():
    direct = nystrom_solve(1, 0.3, 0.2, T1, M=64)
    series = thermal_neumann(1, 0.3, 0.2, T1, M=64, N_max=400, tol=1e-12)
    assert series.converged
    assert np.max(np.abs(series.mu0.values - direct.mu0.values)) <= 1e-8
    assert np.max(np.abs(series.muL.values - direct.muL.values)) <= 1e-8
    assert series.ratio_estimate == pytest.approx(series.contraction_rate, rel=0.05)


def test_neumann_order_zero_is_source():
    p = ThermalParams(0.5)
    res = thermal_neumann(1, 0.3, 0.0, p, M=16, N_max=0, zero_mode="none")
    nodes = res.mu0.nodes
    # the source seen from each vertex is the periodized Poisson kernel at that distance
    assert np.allclose(res.mu0.values, periodized_poisson(nodes, 0.3, p), rtol=1e-14)
    assert np.allclose(res.muL.values, periodized_poisson(nodes, 0.7, p), rtol=1e-14)


def test_periodic_density_validation():
    with pytest.raises(ValueError):
        PeriodicDensity(7, 1.0, np.zeros(7), "v0")
    with pytest.raises(ValueError):
        PeriodicDensity(8, 1.0, np.full(8, np.nan), "v0")
    assert PeriodicDensity(8, 2.0, np.zeros(8), "v0").nodes[1] == 0.25


def test_solver_input_validation():
    with pytest.raises(ValueError):
        nystrom_solve(1, 1.2, 0, T1)
    with pytest.raises(ValueError):
        thermal_neumann(1, 0.5, 0, T1, M=9)
