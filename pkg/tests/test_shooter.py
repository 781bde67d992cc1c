import math

import numpy as np
import pytest

from qcurv import (Constant, Decay, DomainError, OnePlusL1, PiecewiseLinearFamily, Tent,
                   cross_validate, remark62_scan, shoot)

from conftest import setup


def test_bubble():
    res = shoot(Constant(1.0), 0.0, math.log(2.0), 100.0)
    exact = np.log(2.0 / (1.0 + res.radii ** 2))
    assert np.max(np.abs(res.field.values - exact)) < 1e-6
    assert res.total_curvature == pytest.approx(4 * math.pi, rel=1e-3)
    assert not res.blowup_flag


def test_singular_bubble():
    alpha = -0.5
    res = shoot(Constant(1.0), alpha, math.log(2 * (1 + alpha)), 100.0)
    exact = math.log(2 * (1 + alpha)) - np.log1p(res.radii ** (2 * (1 + alpha)))
    assert np.max(np.abs(res.field.values - exact)) < 1e-6


@pytest.mark.parametrize("k", [-3.0, 0.0, 4.0])
def test_tent_harmonic_in_unit_ball(k):
    res = shoot(Tent(), 0.0, k, 0.99)
    assert np.all(res.field.values == k)
    assert res.total_curvature == 0.0


def test_zero_curvature():
    res = shoot(Constant(0.0), 0.0, 1.7, 1e3)
    assert np.all(res.field.values == 1.7)
    assert res.total_curvature == 0.0


def test_case1_scan():
    rows = remark62_scan(1, range(0, 9))
    lam = [r.total_curvature for r in rows]
    assert all(b > a for a, b in zip(lam[2:], lam[3:]))
    assert lam[8] > 10 * lam[0]
    assert not any(r.blowup or r.error for r in rows)


def test_case1_very_negative_k():
    (row,) = remark62_scan(1, [-20.0])
    assert 0.0 <= row.total_curvature < 1e-10


def test_case2_k0_is_bubble():
    (row,) = remark62_scan(2, [0.0])
    bubble = shoot(Constant(1.0), 0.0, math.log(2.0), 1e4)
    assert row.total_curvature == pytest.approx(bubble.total_curvature, rel=1e-9)


def test_case2_increasing():
    rows = remark62_scan(2, [64.0, 1.0, 16.0, 4.0])
    assert [r.k for r in rows] == [1.0, 4.0, 16.0, 64.0]
    lam = [r.total_curvature for r in rows]
    assert all(b > a for a, b in zip(lam, lam[1:]))


def test_scan_records_failures():
    with pytest.raises(DomainError):
        remark62_scan(3, [0.0])


def test_blowup_flag():
    res = shoot(Constant(-1.0), 0.0, 0.0, 1e4)
    assert res.blowup_flag
    assert res.radii.size < 2001


def test_domain():
    with pytest.raises(DomainError):
        shoot(Constant(1.0), -1.0, 0.0, 10.0)
    with pytest.raises(DomainError):
        shoot(Constant(1.0), 0.0, 0.0, -1.0)


@pytest.mark.parametrize("alpha", [0.0, -0.5])
@pytest.mark.parametrize("q", [Constant(1.0), OnePlusL1(Decay(1.0))])
def test_cross_validate_normal(alpha, q):
    params, grid, kernel = setup(2, alpha)
    res = shoot(q, alpha, 0.0, grid.r_max, tol=1e-11, radii=grid.nodes)
    assert cross_validate(res, kernel) < 1e-3


def test_cross_validate_zero_density(flat2):
    params, grid, kernel = flat2
    res = shoot(Constant(0.0), 0.0, 0.5, grid.r_max, radii=grid.nodes)
    assert cross_validate(res, kernel) == 0.0


def test_cross_validate_truncation_flagged(flat2):
    # a very wide bubble has not started to decay at r_max: beta_ff <= 1 + alpha
    params, grid, kernel = flat2
    res = shoot(Constant(1.0), 0.0, -12.0, grid.r_max, radii=grid.nodes)
    assert res.field.tail_slope <= 1.0
    assert cross_validate(res, kernel) == math.inf


def test_cross_validate_needs_grid_nodes(flat2):
    params, grid, kernel = flat2
    res = shoot(Constant(1.0), 0.0, 0.0, grid.r_max)
    with pytest.raises(DomainError):
        cross_validate(res, kernel)
