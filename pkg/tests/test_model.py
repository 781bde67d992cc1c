import math

import numpy as np
import pytest

from qcurv import (Constant, CutoffConfig, Decay, DomainError, InversePower, OnePlusL1,
                   PiecewiseLinearFamily, PowerSum, SelfScaled, Tabulated, Tent, eval_q,
                   make_grid, make_params)
from qcurv.model import RadialField, ramp, sphere_area


def test_params_n2():
    p = make_params(2, 0.0)
    assert p.gamma_n == pytest.approx(2 * math.pi, rel=1e-15)
    assert p.lambda_1 == pytest.approx(4 * math.pi, rel=1e-15)
    assert p.omega == pytest.approx(2 * math.pi, rel=1e-15)


def test_params_n4():
    p = make_params(4, 0.0)
    assert sphere_area(4) == pytest.approx(8 * math.pi ** 2 / 3, rel=1e-15)
    assert p.lambda_1 == pytest.approx(16 * math.pi ** 2, rel=1e-15)
    assert p.lambda_1 == pytest.approx(157.9137, abs=1e-4)


def test_params_odd_dimension_constants():
    p = make_params(3, 0.0)
    assert p.gamma_n == pytest.approx(0.5 * 2 * 2 * math.pi ** 2, rel=1e-15)
    assert p.omega == pytest.approx(4 * math.pi, rel=1e-15)


@pytest.mark.parametrize("n, alpha", [(2, -1.0), (2, -2.0), (1, 0.0), (2.5, 0.0)])
def test_params_domain(n, alpha):
    with pytest.raises(DomainError):
        make_params(n, alpha)


def test_quantized_volume():
    assert make_params(2, -0.3).quantized_volume == pytest.approx(4 * math.pi * 0.7)


def test_grid_constant_density_exact():
    g = make_grid(512, 1e-6, 1e4, 0.0, 2)
    assert g.weights.sum() == pytest.approx(1e8 / 2, rel=1e-10)


def test_grid_singular_weight_exact():
    g = make_grid(512, 1e-6, 10.0, -0.5, 2)
    assert g.weights @ g.nodes ** (2 * -0.5) == pytest.approx(10.0, rel=1e-8)


def test_grid_too_coarse():
    with pytest.raises(DomainError, match="grid too coarse"):
        make_grid(8, 1e-6, 1e4)


@pytest.mark.parametrize("kw", [dict(r_min=0.0), dict(r_min=10.0, r_max=1.0), dict(alpha=-1.0)])
def test_grid_domain(kw):
    args = dict(m=512, r_min=1e-6, r_max=1e4, alpha=0.0, n=2)
    args.update(kw)
    with pytest.raises(DomainError):
        make_grid(**args)


def test_split_weights_match_plain_rule_on_smooth_integrand():
    g = make_grid(600, 1e-5, 1e3, 0.0, 3)
    f = 1.0 / (1.0 + g.nodes ** 5)
    plain = g.weights @ f
    for i in (0, 17, 300, 599):
        assert g.split_weights(i) @ f == pytest.approx(plain, rel=1e-9)


def test_split_weights_resolve_kink():
    # f = min(r, r_i)/max(r, r_i) has a kink at r_i; split weights integrate it exactly in x
    g = make_grid(400, 1e-4, 1e4, 0.0, 2)
    i = 200
    ri = g.nodes[i]
    f = np.minimum(g.nodes, ri) / np.maximum(g.nodes, ri) / g.nodes ** 2
    # int_0^R f r dr over log r: int min/max dx = int_{-inf}^{x_i} e^{x-x_i} + int_{x_i}^{X} e^{x_i-x}
    r1 = g.nodes[0]
    # the origin panel assumes a constant density; here it is 1/(r r_i), so that
    # panel contributes r_1/(2 r_i) instead of r_1/r_i
    exact = 1.0 + (1.0 - ri / g.r_max) - 0.5 * r1 / ri
    got = g.split_weights(i) @ f
    assert got == pytest.approx(exact, rel=1e-10)


def test_scaled_grid_preserves_integrals_of_scaled_functions():
    g = make_grid(512, 1e-6, 1e4, 0.0, 2)
    lam = 3.7
    h = g.scaled(lam)
    f = lambda r: np.exp(-r * r)
    assert h.weights @ f(h.nodes * lam) * lam ** 2 == pytest.approx(g.weights @ f(g.nodes), rel=1e-13)


def test_grid_arrays_are_readonly():
    g = make_grid(128, 1e-3, 1e3)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0
    u = RadialField(np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        u.values[0] = 1.0


def test_tent_values():
    assert eval_q(Tent(), 1.5, 0.0, CutoffConfig()) == 0.25
    assert eval_q(Tent(), 0.5, 0.0, CutoffConfig()) == 0.0
    assert eval_q(Tent(), 2.5) == 0.0


def test_self_scaled_inside_delta():
    cut = CutoffConfig(eps=0.0, delta=0.5, p=0.5)
    assert eval_q(SelfScaled(-0.3, 2), 0.4, 3.0, cut) == 1.0


def test_self_scaled_outside_delta():
    cut = CutoffConfig(delta=0.5, p=0.5)
    r, u0 = 3.0, 0.7
    expected = 1.0 + math.exp(-2 * 0.5 * u0) * r ** (2 * -0.3)
    assert eval_q(SelfScaled(-0.3, 2), r, u0, cut) == pytest.approx(expected, rel=1e-15)


def test_eps_cutoff_support():
    cut = CutoffConfig(eps=0.1)
    assert eval_q(Constant(1.0), 5.0, 0.0, cut) == 1.0
    assert eval_q(Constant(1.0), 15.0, 0.0, cut) == pytest.approx(0.5)
    assert eval_q(Constant(1.0), 25.0, 0.0, cut) == 0.0


def test_eval_q_domain():
    with pytest.raises(DomainError):
        eval_q(Constant(), 0.0)


def test_ramp():
    assert list(ramp(np.array([0.0, 0.99, 1.5, 2.0, 7.0]))) == [0.0, 0.0, 0.5, 1.0, 1.0]


def test_profile_sign_certificates():
    assert Constant(1.0).ge_one and Constant(1.0).le_one
    assert OnePlusL1(Decay(0.5)).ge_one and not OnePlusL1(Decay(0.5)).le_one
    assert OnePlusL1(Decay(-0.5)).le_one and not OnePlusL1(Decay(-0.5)).ge_one
    assert Tabulated((0.0, 1.0, 1e12), (1.0, 2.0, 2.0)).ge_one
    assert Tent().le_one
    assert PowerSum(1, 1, 2, Decay(3, "exponential")).ge_one
    assert InversePower(-0.3, 2).ge_one
    assert PiecewiseLinearFamily(4).ge_one and PiecewiseLinearFamily(0).le_one


def test_piecewise_family_shape():
    q = PiecewiseLinearFamily(4.0)
    r = np.array([0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0])
    assert list(q(r)) == [1.0, 1.0, 3.0, 5.0, 3.0, 1.0, 1.0]


def test_tabulated_ramp_profile():
    q = Tabulated((0.0, 1.0, 1e12), (1.0, 2.0, 2.0))
    assert list(q(np.array([0.25, 1.0, 5.0]))) == [1.25, 2.0, 2.0]


def test_power_sum_far_power():
    assert PowerSum(1, 1, 2).far_power == 2.0
    assert PowerSum(1, 0, 2).far_power == 0.0
    assert InversePower(-0.3, 2).far_power == pytest.approx(0.6)


def test_decay_shapes():
    r = np.array([2.0])
    assert Decay(1.0, "gaussian")(r)[0] == pytest.approx(math.exp(-4))
    assert Decay(1.0, "exponential")(r)[0] == pytest.approx(math.exp(-2))
    assert Decay(1.0, "algebraic", power=4)(r)[0] == pytest.approx(1 / 17)
    with pytest.raises(DomainError):
        Decay(1.0, "boxcar")
