"""Radial initial-value integration for the two-dimensional equation.

-Delta u = Q(r) r^(2 alpha) e^(2u) is integrated in t = log r with state
(u, w), w = r u'(r):

    u_t = w,    w_t = -Q(r) r^(2 alpha + 2) e^(2u).

The total curvature up to r equals -2 pi w(r), so it comes for free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .kernel import apply_kernel
from .model import DomainError, RadialField
from .profiles import PiecewiseLinearFamily, Tent

BLOWUP_GUARD = 500.0


@dataclass(frozen=True, eq=False)
class ShootResult:
    radii: np.ndarray
    field: RadialField
    u_prime: np.ndarray
    total_curvature: float
    blowup_flag: bool
    density: np.ndarray
    far_power: float = 0.0


def _start_radius(q0, alpha, rho, r_max):
    """Series start radius with a first correction below 1e-12."""
    r0 = 1e-8 * r_max
    a2 = 2.0 + 2.0 * alpha
    amp = abs(q0) * math.exp(2.0 * rho) / a2 ** 2
    if amp > 0:
        r0 = min(r0, (1e-12 / amp) ** (1.0 / a2))
    return r0


def shoot(profile, alpha, rho, r_max, tol=1e-10, radii=None):
    """Integrate from the origin with u(0) = rho, u'(0) = 0 up to ``r_max``.

    Integration stops with ``blowup_flag`` set if u exceeds
    ``BLOWUP_GUARD`` or the step size collapses while u increases; large
    negative u is ordinary decay and is kept.

    ``radii`` are the output radii (default: 2001 log-spaced points from
    1e-6 r_max).  Output beyond a blow-up point is not produced.
    """
    if not alpha > -1.0:
        raise DomainError(f"singular exponent must satisfy alpha > -1, got alpha={alpha}")
    if not r_max > 0:
        raise DomainError("r_max must be positive")
    if radii is None:
        radii = np.geomspace(1e-6 * r_max, r_max, 2001)
    radii = np.asarray(radii, dtype=float)
    a2 = 2.0 + 2.0 * alpha
    q0 = float(profile(np.array([1e-12 * r_max]))[0])
    r0 = min(_start_radius(q0, alpha, rho, r_max), 0.5 * radii[0])
    k0 = q0 * math.exp(2.0 * rho) * r0 ** a2
    y = [rho - k0 / a2 ** 2, -k0 / a2]

    def rhs(t, y):
        r = math.exp(t)
        q = float(profile(np.array([r]))[0])
        return [y[1], -q * r ** a2 * math.exp(2.0 * min(y[0], BLOWUP_GUARD + 1.0))]

    def blowup(t, y):
        return BLOWUP_GUARD - y[0]

    blowup.terminal = True
    marks = [b for b in profile.breakpoints if r0 < b < r_max]
    knots = [math.log(r0)] + [math.log(b) for b in sorted(set(marks))] + [math.log(r_max)]
    ts = np.log(radii)
    u_out, w_out = [], []
    blew = False
    for a, b in zip(knots[:-1], knots[1:]):
        lower = ts >= a if a == knots[0] else ts > a
        wanted = ts[lower & (ts <= b)]
        t_eval = wanted if wanted.size and wanted[-1] == b else np.append(wanted, b)
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol, atol=tol * 1e-2,
                        t_eval=t_eval, events=blowup)
        got = min(wanted.size, sol.t.size)
        u_out.append(sol.y[0, :got])
        w_out.append(sol.y[1, :got])
        if sol.status == 1:
            blew = True
            break
        if sol.status < 0:
            # step-size collapse while u climbs is the approach to a finite-radius singularity
            if sol.y[1, -1] > 0:
                blew = True
                break
            raise RuntimeError(f"radial integration failed at r={math.exp(sol.t[-1]):.6g}: "
                               f"{sol.message}")
        y = sol.y[:, -1]
    u = np.concatenate(u_out)
    w = np.concatenate(w_out)
    kept = radii[:u.size]
    q = profile(kept)
    density = q * kept ** (2.0 * alpha) * np.exp(2.0 * u)
    total = -2.0 * math.pi * float(w[-1]) if w.size else 0.0
    field = RadialField(values=u, u0=rho, tail_slope=-float(w[-1]) if w.size else 0.0)
    return ShootResult(radii=kept, field=field, u_prime=w / kept, total_curvature=total,
                       blowup_flag=blew, density=density, far_power=profile.far_power)


@dataclass(frozen=True)
class ScanRow:
    k: float
    total_curvature: float
    blowup: bool
    error: str = ""


def remark62_scan(case, k_values, r_max=1e4, tol=1e-10):
    """Total curvature of the two counterexample families, one row per k.

    Case 1 uses the tent profile with u(0) = k; case 2 uses the
    piecewise-linear family with u(0) = log 2.  Rows are sorted by k and a
    failing shot is recorded in its row.
    """
    if case not in (1, 2):
        raise DomainError(f"case must be 1 or 2, got {case}")
    rows = []
    for k in sorted(k_values):
        try:
            if case == 1:
                res = shoot(Tent(), 0.0, float(k), r_max, tol)
            else:
                res = shoot(PiecewiseLinearFamily(float(k)), 0.0, math.log(2.0), r_max, tol)
            rows.append(ScanRow(float(k), res.total_curvature, res.blowup_flag))
        except Exception as exc:  # recorded per row, scan continues
            rows.append(ScanRow(float(k), math.nan, False, f"{type(exc).__name__}: {exc}"))
    return rows


def cross_validate(shoot_result, kernel, tol=1e-3):
    """Normality deviation of a shot: sup |w - mean(w)| with w = u - K[density].

    The shot must be sampled on the kernel's grid nodes.  A power-law tail
    is attached when the far slope makes it integrable; without one, a
    density above ``tol`` (relative) at r_max makes the deviation infinite.
    """
    grid = kernel.grid
    if shoot_result.radii.size != grid.m or not np.allclose(shoot_result.radii, grid.nodes,
                                                           rtol=1e-12, atol=0):
        raise DomainError("shot must be sampled on the kernel grid nodes")
    if shoot_result.blowup_flag:
        raise DomainError("shot blew up; normality is undefined")
    d = shoot_result.density
    field = shoot_result.field
    if not np.any(d):
        return 0.0
    params = kernel.params
    tau = params.n * (field.tail_slope - 1.0 - params.alpha) - shoot_result.far_power
    tail = (float(d[-1]), tau) if tau > 0 and d[-1] != 0 else None
    if tail is None and d[-1] > tol * d.max():
        return math.inf
    v = apply_kernel(kernel, d, tail)
    w = np.asarray(field.values) - v.values
    return float(np.max(np.abs(w - w.mean())))
