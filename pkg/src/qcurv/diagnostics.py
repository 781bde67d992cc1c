"""Volume, curvature, decay and Pohozaev diagnostics of radial fields."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import apply_kernel
from .model import BolVerdict, DomainError

#: e^(n u) is clipped here to keep densities finite
DENSITY_CLIP = 1e300
TAIL_FLAG_FRACTION = 1e-2


def curvature_density(u, profile, grid, params, cutoffs=None, gaussian_eps=0.0):
    """Q_eff r^(n alpha) e^(n u) e^(-eps r^2) at the nodes, plus a clip flag."""
    r = grid.nodes
    n = params.n
    with np.errstate(over="ignore"):
        enu = np.exp(n * np.asarray(u.values))
    clipped = bool(np.any(enu > DENSITY_CLIP))
    enu = np.minimum(enu, DENSITY_CLIP)
    with np.errstate(over="ignore", invalid="ignore"):
        d = enu * r ** (n * params.alpha)
    if profile is not None:
        d = d * profile(r, u.u0, cutoffs)
    if gaussian_eps > 0:
        d = d * np.exp(-gaussian_eps * r * r)
    return d, clipped


def tail_exponent(u, params, far_power=0.0):
    """tau in the tail model density ~ (s / r_max)^-(tau + n)."""
    return params.n * (u.tail_slope - 1.0 - params.alpha) - far_power


def integral_parts(u, profile, grid, params, cutoffs=None, gaussian_eps=0.0):
    """(grid part, tail part, flags) of the integral of the curvature density.

    ``profile=None`` integrates the volume density r^(n alpha) e^(n u).
    The tail beyond r_max is added only when the decay exponent is
    positive; otherwise the result is flagged as truncation-dominated.
    """
    d, clipped = curvature_density(u, profile, grid, params, cutoffs, gaussian_eps)
    flags = ["density_clipped"] if clipped else []
    core = params.omega * float(grid.weights @ d)
    tail = 0.0
    compact = gaussian_eps > 0 or (cutoffs is not None and cutoffs.eps > 0)
    if d[-1] != 0 and not compact:
        tau = tail_exponent(u, params, 0.0 if profile is None else profile.far_power)
        if tau > 0:
            tail = params.omega * float(d[-1]) * grid.r_max ** params.n / tau
            if abs(tail) > TAIL_FLAG_FRACTION * abs(core):
                flags.append("tail_large")
        else:
            flags.append("truncation_dominated")
    return core, tail, flags


def total_volume(u, grid, params, gaussian_eps=0.0):
    """Lambda: integral of |x|^(n alpha) e^(n u) over R^n."""
    core, tail, _ = integral_parts(u, None, grid, params, gaussian_eps=gaussian_eps)
    return core + tail


def total_curvature(u, profile, grid, params, cutoffs=None, gaussian_eps=0.0):
    """Lambda*: integral of Q |x|^(n alpha) e^(n u) over R^n."""
    core, tail, _ = integral_parts(u, profile, grid, params, cutoffs, gaussian_eps)
    return core + tail


def beta_of(u, profile, grid, params, cutoffs=None):
    return total_curvature(u, profile, grid, params, cutoffs) / params.gamma_n


def farfield_slope(u, grid, fit_window=2.0):
    """beta_fit: minus the least-squares slope of u against log r.

    The fit uses nodes within ``fit_window`` decades of r_max.
    """
    x = np.log(grid.nodes)
    sel = x >= x[-1] - fit_window * math.log(10.0)
    if sel.sum() < 2:
        raise DomainError("fit window contains fewer than two nodes")
    slope = np.polyfit(x[sel], np.asarray(u.values)[sel], 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class PohozaevReport:
    lhs: float
    rhs: float
    residual: float
    truncation_estimate: float
    flux: float
    flagged: bool


def pohozaev_residual(u, profile, kernel, grid, params):
    """Scaling identity Lambda (Lambda - 2 gamma) / (2 gamma) = alpha Lambda + flux.

    v is the potential of the volume density, h = u - v and the flux is
    the integral of r h'(r) against the volume density.  ``profile`` is
    accepted for symmetry with the other diagnostics; the identity only
    involves the volume density.
    """
    del profile
    n, alpha, gamma = params.n, params.alpha, params.gamma_n
    dens, _ = curvature_density(u, None, grid, params)
    core, tail, flags = integral_parts(u, None, grid, params)
    lam = core + tail
    tail_arg = None
    if tail > 0:
        tau = tail_exponent(u, params)
        tail_arg = (float(dens[-1]), tau)
    with np.errstate(over="ignore", invalid="ignore"):
        v = apply_kernel(kernel, dens, tail_arg)
        h = np.asarray(u.values) - v.values
        dh = np.gradient(h, np.log(grid.nodes), edge_order=2)
        flux = params.omega * float(grid.weights @ (dh * dens)) + float(dh[-1]) * tail
    lhs = lam * (lam - 2.0 * gamma) / (2.0 * gamma)
    rhs = alpha * lam + flux
    residual = lhs - rhs
    big = grid.r_max
    boundary = params.omega * big ** n * float(dens[-1]) / n
    estimate = boundary * (1.0 + lam / gamma) + abs(float(dh[-1]) * tail)
    floor = 1e-9 * max(1.0, abs(lhs))
    flagged = estimate > 10.0 * max(abs(residual), floor) or "truncation_dominated" in flags
    return PohozaevReport(lhs=lhs, rhs=rhs, residual=residual,
                          truncation_estimate=estimate, flux=flux, flagged=flagged)


def pohozaev_singular(u, grid, params, lambda_star):
    """Lambda*(Lambda* - 2 gamma)/(2 gamma) - alpha * volume; zero for solutions
    of the equation with curvature 1 + |x|^(n alpha)."""
    gamma = params.gamma_n
    lhs = lambda_star * (lambda_star - 2.0 * gamma) / (2.0 * gamma)
    return lhs - params.alpha * total_volume(u, grid, params)


def bol_verdict(u, profile, grid, params, tol_rel=1e-2, lambda_vol=None):
    """Check the volume bound implied by the sign of Q - 1.

    Q <= 1 predicts Lambda >= Lambda_1 (1 + alpha); Q >= 1 predicts
    Lambda <= Lambda_1 (1 + alpha).  Q == 1 satisfies both.
    """
    lam = total_volume(u, grid, params) if lambda_vol is None else lambda_vol
    target = params.quantized_volume
    lower_ok = lam >= target * (1.0 - tol_rel)
    upper_ok = lam <= target * (1.0 + tol_rel)
    le, ge = profile.le_one, profile.ge_one
    if le and ge:
        return BolVerdict.EQUALITY_HOLDS if lower_ok and upper_ok else BolVerdict.VIOLATED
    if le:
        return BolVerdict.LOWER_BOUND_HOLDS if lower_ok else BolVerdict.VIOLATED
    if ge:
        return BolVerdict.UPPER_BOUND_HOLDS if upper_ok else BolVerdict.VIOLATED
    return BolVerdict.NOT_APPLICABLE


def pointwise_bound_check(u, grid, params):
    """sup over nodes with r >= 1 of r^(n alpha) e^(n u(r)); needs alpha > 0."""
    if not params.alpha > 0:
        raise DomainError(f"pointwise bound needs alpha > 0, got alpha={params.alpha}")
    sel = grid.nodes >= 1.0
    if not sel.any():
        raise DomainError("grid has no nodes with r >= 1")
    d, _ = curvature_density(u, None, grid, params)
    return float(d[sel].max())


def pointwise_bound_constant(params):
    """Explicit bound shape Lambda_1 (1 + alpha) e^(4 n alpha) / |B_1.5 minus B_0.5|."""
    annulus = params.omega / params.n * (1.5 ** params.n - 0.5 ** params.n)
    return params.quantized_volume * math.exp(4.0 * params.n * params.alpha) / annulus


def beta_gap_check(u, profile, grid, params):
    """beta > 1 + alpha whenever Q >= 1 is certified; vacuous otherwise."""
    if not profile.ge_one:
        return True
    return beta_of(u, profile, grid, params) > 1.0 + params.alpha
