import math

import numpy as np
import pytest

from qcurv import (BolVerdict, Constant, Decay, DomainError, FixedOrigin, OnePlusL1, RadialField,
                   Tent, farfield_slope, pohozaev_residual, pohozaev_singular, solve_normal,
                   total_curvature, total_volume)
from qcurv.diagnostics import (beta_gap_check, beta_of, bol_verdict, integral_parts,
                               pointwise_bound_check, pointwise_bound_constant)

from conftest import setup, singular_bubble


def bubble_field(grid, alpha):
    return RadialField(singular_bubble(grid.nodes, alpha), math.log(2 * (1 + alpha)),
                       2 * (1 + alpha))


@pytest.mark.parametrize("alpha, expected", [(0.0, 4 * math.pi), (-0.5, 2 * math.pi),
                                             (1.0, 8 * math.pi)])
def test_volume_of_exact_bubble(alpha, expected):
    params, grid, _ = setup(2, alpha)
    assert total_volume(bubble_field(grid, alpha), grid, params) == pytest.approx(expected, rel=1e-3)
    assert total_volume(bubble_field(grid, alpha), grid, params) == pytest.approx(expected, rel=1e-7)


def test_volume_of_vanishing_density(flat2):
    params, grid, _ = flat2
    u = RadialField(np.full(grid.m, -700.0), -700.0, 0.0)
    core, tail, flags = integral_parts(u, None, grid, params)
    assert core + tail < 1e-300
    assert "tail_large" not in flags


def test_curvature_equals_volume_for_unit_q(flat2):
    params, grid, _ = flat2
    u = bubble_field(grid, 0.0)
    assert total_curvature(u, Constant(1.0), grid, params) == total_volume(u, grid, params)


def test_curvature_at_least_volume_for_bump(flat2):
    params, grid, kernel = flat2
    u, rep = solve_normal(OnePlusL1(Decay(1.0)), params, grid, FixedOrigin(0.0), kernel=kernel)
    assert rep.converged
    assert total_curvature(u, OnePlusL1(Decay(1.0)), grid, params) >= total_volume(u, grid, params)


@pytest.mark.parametrize("k", [-1.0, 0.0, 2.0])
def test_tent_curvature_closed_form(flat2, k):
    params, grid, _ = flat2
    u = RadialField(np.full(grid.m, k), k, 0.0)
    # 2 pi int_1^2 (r - 1)(2 - r) r dr = pi / 2; the kinks at r = 1, 2 fall between
    # nodes, so the rule is O(h^2) there (h ~ 0.012)
    expected = math.exp(2 * k) * math.pi / 2
    assert total_curvature(u, Tent(), grid, params) == pytest.approx(expected, rel=1e-3)


def test_beta_values():
    for alpha, beta in ((0.0, 2.0), (-0.5, 1.0)):
        params, grid, _ = setup(2, alpha)
        assert beta_of(bubble_field(grid, alpha), Constant(1.0), grid, params) == pytest.approx(beta, rel=1e-8)
    params, grid, _ = setup(2, 0.0)
    assert beta_of(bubble_field(grid, 0.0), Constant(0.0), grid, params) == 0.0


def test_farfield_slope():
    for alpha, beta in ((0.0, 2.0), (-0.5, 1.0)):
        params, grid, _ = setup(2, alpha)
        assert farfield_slope(bubble_field(grid, alpha), grid) == pytest.approx(beta, rel=2e-2)
    params, grid, _ = setup(2, 0.0)
    assert farfield_slope(RadialField(np.full(grid.m, 3.0), 3.0), grid) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        farfield_slope(bubble_field(grid, 0.0), grid, fit_window=1e-6)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0])
def test_pohozaev_unit_q(alpha):
    params, grid, kernel = setup(2, alpha)
    u, rep = solve_normal(Constant(1.0), params, grid, FixedOrigin(0.0), kernel=kernel)
    pz = pohozaev_residual(u, Constant(1.0), kernel, grid, params)
    lam = rep.lambda_vol
    assert abs(pz.residual) < 1e-3 * lam * lam / params.lambda_1
    # h = u - v is constant, so its flux vanishes
    assert abs(pz.flux) < 1e-6


def test_pohozaev_zero_density(flat2):
    params, grid, kernel = flat2
    u = RadialField(np.full(grid.m, -800.0), -800.0, 0.0)
    pz = pohozaev_residual(u, Constant(0.0), kernel, grid, params)
    assert pz.lhs == 0.0 and pz.rhs == 0.0


@pytest.mark.parametrize("alpha", [-0.5, 0.5])
def test_pohozaev_sign_for_q_at_least_one(alpha):
    params, grid, kernel = setup(2, alpha)
    q = OnePlusL1(Decay(2.0))
    u, rep = solve_normal(q, params, grid, FixedOrigin(0.0), kernel=kernel)
    pz = pohozaev_residual(u, q, kernel, grid, params)
    lam = rep.lambda_vol
    assert pz.rhs <= alpha * lam + 1e-3
    assert lam < params.quantized_volume


def test_pohozaev_singular_on_bubble():
    params, grid, _ = setup(2, 0.0)
    u = bubble_field(grid, 0.0)
    assert abs(pohozaev_singular(u, grid, params, params.lambda_1)) < 1e-12
    paramsn, gridn, _ = setup(2, -0.5)
    un = bubble_field(gridn, -0.5).shifted(0.1)
    assert abs(pohozaev_singular(un, gridn, paramsn, paramsn.lambda_1 * 0.5)) > 0.1


def test_verdicts(flat2):
    params, grid, kernel = flat2
    cases = [(Constant(1.0), BolVerdict.EQUALITY_HOLDS, 0),
             (OnePlusL1(Decay(1.0)), BolVerdict.UPPER_BOUND_HOLDS, -1),
             (OnePlusL1(Decay(-0.5)), BolVerdict.LOWER_BOUND_HOLDS, 1)]
    for q, verdict, side in cases:
        u, rep = solve_normal(q, params, grid, FixedOrigin(0.0), kernel=kernel)
        assert rep.converged
        assert bol_verdict(u, q, grid, params) == verdict == rep.verdict
        gap = rep.lambda_vol - params.quantized_volume
        if side:
            assert side * gap > 1e-3 * params.quantized_volume


def test_verdict_not_applicable(flat2):
    params, grid, _ = flat2
    from qcurv import Tabulated
    q = Tabulated((0.0, 1.0, 2.0), (0.5, 1.5, 1.0))
    assert bol_verdict(bubble_field(grid, 0.0), q, grid, params) == BolVerdict.NOT_APPLICABLE


def test_pointwise_bound_needs_positive_alpha(flat2):
    params, grid, _ = flat2
    with pytest.raises(DomainError):
        pointwise_bound_check(bubble_field(grid, 0.0), grid, params)


def test_pointwise_bound_below_constant():
    params, grid, kernel = setup(2, 0.5)
    q = OnePlusL1(Decay(1.0))
    for rho in (-5.0, 0.0, 5.0):
        u, rep = solve_normal(q, params, grid, FixedOrigin(rho), kernel=kernel)
        value = pointwise_bound_check(u, grid, params)
        assert rep.converged and math.isfinite(value)
        assert value <= pointwise_bound_constant(params)


def test_pointwise_bound_stable_across_rho():
    params, grid, kernel = setup(2, 0.5)
    q = OnePlusL1(Decay(1.0))
    values = []
    for rho in (-5.0, 0.0, 5.0):
        u, rep = solve_normal(q, params, grid, FixedOrigin(rho), kernel=kernel)
        values.append(pointwise_bound_check(u, grid, params))
    assert max(values) / min(values) < 10


def test_pointwise_bound_on_constant_field(flat2):
    params, grid, _ = setup(2, 0.5)
    u = RadialField(np.zeros(grid.m), 0.0)
    assert pointwise_bound_check(u, grid, params) == pytest.approx(grid.r_max ** 1.0, rel=1e-12)


def test_beta_gap():
    for alpha in (0.0, -0.5):
        params, grid, _ = setup(2, alpha)
        assert beta_gap_check(bubble_field(grid, alpha), Constant(1.0), grid, params)
    params, grid, _ = setup(2, 0.0)
    assert beta_gap_check(bubble_field(grid, 0.0), OnePlusL1(Decay(-0.5)), grid, params)
