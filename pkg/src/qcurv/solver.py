"""Damped Picard iteration for radial normal solutions.

A normal solution is a fixed point of u -> K[Q r^(n alpha) e^(n u)] + c,
where K is the Nystrom kernel and the constant c is fixed by one of three
normalisations.  The far field beyond r_max is represented by a power-law
tail whose exponent follows from the current log slope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import diagnostics as dg
from .kernel import apply_kernel, build_kernel
from .model import CutoffConfig, DomainError, RadialField, SolveReport, make_params
from .profiles import InversePower, SelfScaled


@dataclass(frozen=True)
class FixedConstant:
    c: float


@dataclass(frozen=True)
class FixedOrigin:
    rho: float


@dataclass(frozen=True)
class FixedVolume:
    """Prescribed total curvature Lambda*."""

    lambda_star: float

    def __post_init__(self):
        if not self.lambda_star > 0:
            raise DomainError(f"prescribed total curvature must be positive, got {self.lambda_star}")


@dataclass(frozen=True)
class SolverOptions:
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 3000
    cutoffs: CutoffConfig = field(default_factory=CutoffConfig)
    gaussian_eps: float = 0.0
    min_damping: float = 1.0 / 1024
    #: cap on stabilised modes; 0 gives plain damped Picard
    max_modes: int = 6

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise DomainError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")
        if self.gaussian_eps < 0:
            raise DomainError("Gaussian regulariser must be nonnegative")


class RootFindError(RuntimeError):
    pass


def bubble(grid, params, rho=None):
    """Radial bubble for (n, alpha), rescaled so that u(0) = rho if given.

    Exact for n = 2 and for alpha = 0; a good starting point otherwise.
    """
    n, alpha = params.n, params.alpha
    a1 = 1.0 + alpha
    shift = math.log(a1) + math.log(math.factorial(n - 1)) / n
    u0 = math.log(2.0) + shift
    lam = 1.0 if rho is None else math.exp((rho - u0) / a1)
    x = lam * grid.nodes
    values = math.log(2.0) - np.log1p(x ** (2.0 * a1)) + shift + a1 * math.log(lam)
    return RadialField(values=values, u0=u0 + a1 * math.log(lam), tail_slope=2.0 * a1)


def default_start(profile, params, grid, norm):
    """Bubble start; growing curvature r^p uses the exponent alpha + p / n so
    that the starting density is integrable."""
    rho = norm.rho if isinstance(norm, FixedOrigin) else None
    start = bubble(grid, params, rho)
    if profile.far_power > 0:
        grown = make_params(params.n, params.alpha + profile.far_power / params.n)
        start = bubble(grid, grown, rho)
    return start


def _tail(profile, field_, density, params, opts):
    """(height, tau) of the tail model, or None when absent or non-integrable."""
    if opts.gaussian_eps > 0 or opts.cutoffs.eps > 0 or density[-1] == 0:
        return None
    tau = dg.tail_exponent(field_, params, profile.far_power)
    return (float(density[-1]), tau) if tau > 0 else None


def _potential(u, kernel, profile, params, opts):
    grid = kernel.grid
    d, clipped = dg.curvature_density(u, profile, grid, params, opts.cutoffs, opts.gaussian_eps)
    return apply_kernel(kernel, d, _tail(profile, u, d, params, opts)), clipped


def _volume_constant(v, kernel, profile, params, norm, opts):
    """Constant c with total curvature of v + c equal to the target."""
    grid = kernel.grid
    target = norm.lambda_star

    def curvature(c):
        return dg.total_curvature(v.shifted(c), profile, grid, params,
                                  opts.cutoffs, opts.gaussian_eps)

    base = curvature(0.0)
    if not profile.depends_on_u0:
        if not base > 0 or not math.isfinite(base):
            raise RootFindError("curvature integral of the potential is not positive")
        return math.log(target / base) / params.n
    # closed-form estimate with the curvature factor frozen at v's origin value
    frozen = dg.total_curvature(v, profile, grid, params, opts.cutoffs, opts.gaussian_eps)
    c0 = math.log(target / frozen) / params.n if frozen > 0 else 0.0
    width = 40.0 / params.n
    lo, hi = c0 - width, c0 + width
    with np.errstate(over="ignore"):
        glo, ghi = curvature(lo) - target, curvature(hi) - target
    if not (glo < 0 < ghi):
        raise RootFindError(f"no sign change of G(c) - target on [{lo:.3g}, {hi:.3g}]")
    return brentq(lambda c: curvature(c) - target, lo, hi, xtol=1e-12)


def picard_step(u, kernel, profile, params, norm, opts, damping=None):
    """One damped step; returns (new field, sup-norm change, info dict)."""
    theta = opts.damping if damping is None else damping
    v, clipped = _potential(u, kernel, profile, params, opts)
    if isinstance(norm, FixedConstant):
        c = norm.c
    elif isinstance(norm, FixedOrigin):
        c = norm.rho - v.u0
    elif isinstance(norm, FixedVolume):
        c = _volume_constant(v, kernel, profile, params, norm, opts)
    else:
        raise TypeError(f"unknown normalisation {norm!r}")
    target = v.shifted(c)
    values = (1.0 - theta) * u.values + theta * target.values
    u0 = (1.0 - theta) * u.u0 + theta * target.u0
    slope = (1.0 - theta) * u.tail_slope + theta * target.tail_slope
    new = RadialField(values=values, u0=u0, tail_slope=slope)
    change = max(float(np.max(np.abs(values - u.values))), abs(u0 - u.u0))
    return new, change, {"c": c, "clipped": clipped, "target": target}


def _state(u):
    return np.concatenate([u.values, [u.u0, u.tail_slope]])


def _field(x):
    return RadialField(values=x[:-2].copy(), u0=float(x[-2]), tail_slope=float(x[-1]))


def _fixed_point_map(kernel, profile, params, norm, opts):
    def T(x):
        _, _, info = picard_step(_field(x), kernel, profile, params, norm, opts, 1.0)
        return _state(info["target"]), info
    return T


def _add_mode(basis, direction):
    """Append ``direction`` to the orthonormal ``basis`` (two Gram-Schmidt passes)."""
    v = direction.copy()
    for _ in range(2):
        if basis.shape[1]:
            v -= basis @ (basis.T @ v)
    norm = np.linalg.norm(v)
    if not norm > 1e-8 * np.linalg.norm(direction):
        return basis
    return np.column_stack([basis, v / norm])


#: a mode is captured after this many steps contracting slower than SLOW_RATIO
GROWTH_STEPS = 3
SLOW_RATIO = 1.0
#: capture only near the fixed point, where the linearisation is meaningful;
#: also the sup-norm cap on a subspace Newton correction
CAPTURE_BELOW = 1e-2
_FD_STEP = 1e-6


def iterate(u, kernel, profile, params, norm, opts):
    """Damped Picard with recursive projection onto growing modes.

    Plain damped Picard runs until, close to convergence, the step norm
    shrinks by less than ``SLOW_RATIO`` (or grows) for ``GROWTH_STEPS``
    consecutive iterations; the latest step direction then joins a small basis V (at most ``opts.max_modes``).  On span(V) the
    fixed-point equation is solved by a Newton step with a finite
    difference Jacobian; the complement keeps the damped Picard update.
    Returns (field, iterations, change, c, cause, clipped).
    """
    theta = opts.damping
    T = _fixed_point_map(kernel, profile, params, norm, opts)
    x = _state(u)
    basis = np.zeros((x.size, 0))
    prev_step = None
    prev_size = math.inf
    growth = 0
    c = math.nan
    change = math.inf
    clipped = False
    for it in range(1, opts.max_iter + 1):
        try:
            fx, info = T(x)
            if basis.shape[1]:
                z = basis.T @ x
                jac = np.column_stack([(T(x + _FD_STEP * v)[0] - fx) / _FD_STEP for v in basis.T])
                small = np.eye(basis.shape[1]) - basis.T @ jac
                dz = np.linalg.solve(small, basis.T @ fx - z)
                reach = float(np.max(np.abs(basis @ dz)))
                z_new = z + dz * min(1.0, CAPTURE_BELOW / reach) if reach > 0 else z
            else:
                z = z_new = np.zeros(0)
        except (RootFindError, np.linalg.LinAlgError):
            return _field(x), it, change, c, "root_find_failure", clipped
        c, clipped = info["c"], info["clipped"]
        if not np.all(np.isfinite(fx)):
            return _field(x), it, change, c, "divergence", clipped
        q = x - basis @ z
        q_step = fx - x
        q_step = theta * (q_step - basis @ (basis.T @ q_step))
        new = basis @ z_new + q + q_step
        change = float(np.max(np.abs(new[:-1] - x[:-1])))
        if prev_step is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                dot = float(q_step @ prev_step)
                span = float(np.linalg.norm(q_step) * np.linalg.norm(prev_step))
            if dot < -0.5 * span:
                theta *= 0.5
                if theta < opts.min_damping:
                    return _field(new), it, change, c, "oscillation", clipped
        size = float(np.linalg.norm(q_step))
        slow = size > SLOW_RATIO * prev_size and change < CAPTURE_BELOW
        growth = growth + 1 if slow else 0
        if growth >= GROWTH_STEPS and basis.shape[1] < opts.max_modes:
            basis = _add_mode(basis, q_step)
            growth = 0
        prev_step, prev_size = q_step, size
        x = new
        if change < opts.tol:
            return _field(x), it, change, c, "" if not clipped else "overflow", clipped
        if change > 1e6 or not np.all(np.isfinite(x)):
            return _field(x), it, change, c, "divergence", clipped
    return _field(x), opts.max_iter, change, c, "max_iter", clipped


def _report(u, kernel, profile, params, opts, iters, change, c, cause, clipped,
            pohozaev=True):
    grid = kernel.grid
    core_v, tail_v, flags_v = dg.integral_parts(u, None, grid, params,
                                                gaussian_eps=opts.gaussian_eps)
    core_q, tail_q, flags_q = dg.integral_parts(u, profile, grid, params, opts.cutoffs,
                                                opts.gaussian_eps)
    lam, lam_star = core_v + tail_v, core_q + tail_q
    flags = sorted(set(flags_v) | set(flags_q))
    if clipped:
        flags.append("density_clipped")
    rep = SolveReport(converged=not cause, iterations=iters, residual=change, c=c,
                      lambda_vol=lam, lambda_star=lam_star, beta=lam_star / params.gamma_n,
                      beta_fit=dg.farfield_slope(u, grid), cause=cause, flags=flags)
    rep.extra["tail_volume"] = tail_v
    if pohozaev:
        pz = dg.pohozaev_residual(u, profile, kernel, grid, params)
        rep.pohozaev_lhs, rep.pohozaev_rhs, rep.pohozaev_residual = pz.lhs, pz.rhs, pz.residual
        rep.extra["pohozaev_flux"] = pz.flux
        rep.extra["pohozaev_truncation"] = pz.truncation_estimate
        if pz.flagged:
            rep.flags.append("pohozaev_truncation")
    rep.verdict = dg.bol_verdict(u, profile, grid, params, lambda_vol=lam)
    return rep


def solve_normal(profile, params, grid, norm, opts=None, kernel=None, initial=None):
    """Iterate to a normal solution and report its diagnostics.

    Non-convergence returns the last iterate with ``converged`` false and
    a cause among oscillation, divergence, root_find_failure, max_iter
    and overflow.
    """
    opts = opts or SolverOptions()
    kernel = kernel or build_kernel(params, grid)
    if initial is None:
        initial = default_start(profile, params, grid, norm)
    u, iters, change, c, cause, clipped = iterate(initial, kernel, profile, params, norm, opts)
    rep = _report(u, kernel, profile, params, opts, iters, change, c, cause, clipped)
    if isinstance(norm, FixedVolume):
        gap = abs(rep.lambda_star - norm.lambda_star) / norm.lambda_star
        rep.extra["volume_mismatch"] = gap
        tol_rel = 1e-2
        with np.errstate(over="ignore"):
            scale = max(1.0, float(np.float64(rep.lambda_vol) ** 2 / params.lambda_1))
        pz_bad = abs(rep.pohozaev_residual) > 1e-3 * scale
        if not rep.converged or pz_bad or rep.verdict.value == "Violated" or gap > tol_rel:
            rep.flags.append("infeasible")
    return u, rep


#: default continuation schedule: eps first (delta frozen), then delta
DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 0.0)
DEFAULT_DELTA = (1e-1, 1e-2, 0.0)


def continuation_stages(eps_schedule=DEFAULT_EPS, delta_schedule=DEFAULT_DELTA):
    """(eps, delta) pairs: eps decreases at the first delta, then delta decreases."""
    stages = [(e, delta_schedule[0]) for e in eps_schedule]
    stages += [(eps_schedule[-1], d) for d in delta_schedule[1:]]
    return stages


def continuation_solve(lambda_star, alpha, p, params, grid, eps_schedule=DEFAULT_EPS,
                       delta_schedule=DEFAULT_DELTA, opts=None, initial=None, kernel=None):
    """Solve with the self-scaled curvature along the cut-off schedule, then rescale.

    ``params`` carries the dimension; the singular exponent enters only
    through the curvature factor (the solve uses alpha = 0 in the weight).
    The returned field lives on ``grid.scaled(lam)`` with
    lam = e^((p / alpha) u(0)) and solves the equation with curvature
    1 + |x|^(n alpha) when the run succeeds.  ``report.extra`` carries
    ``grid`` (the rescaled grid) and ``stage`` (index of a failed stage).
    """
    if not -1.0 < alpha < 0.0:
        raise DomainError(f"continuation needs alpha in (-1, 0), got alpha={alpha}")
    if not 0.0 < p < 1.0 or not p + alpha > 0:
        raise DomainError(f"continuation needs p in (0, 1) with p + alpha > 0, got p={p}")
    n = params.n
    flat = make_params(n, 0.0)
    sing = make_params(n, alpha)
    opts = opts or SolverOptions()
    kernel = kernel or build_kernel(flat, grid)
    profile = SelfScaled(alpha=alpha, n=n)
    norm = FixedVolume(lambda_star)
    u = initial if initial is not None else bubble(grid, flat)
    stages = continuation_stages(eps_schedule, delta_schedule)
    low, high = sing.lambda_1 * max(-alpha, 1.0 + alpha), sing.lambda_1
    window_ok = low < lambda_star < high
    total_iters = 0
    failed = None
    cause = ""
    stage_log = []
    for k, (eps, delta) in enumerate(stages):
        stage_opts = replace(opts, cutoffs=CutoffConfig(eps=eps, delta=delta, p=p))
        u, iters, change, c, cause, clipped = iterate(u, kernel, profile, flat, norm, stage_opts)
        total_iters += iters
        stage_log.append({"eps": eps, "delta": delta, "iterations": iters, "change": change,
                          "u0": u.u0, "cause": cause})
        if cause:
            failed = k
            break
    lam = math.exp((p / alpha) * u.u0)
    final_opts = replace(opts, cutoffs=CutoffConfig(eps=0.0, delta=0.0, p=p))
    rep = _report(u, kernel, profile, flat, final_opts, total_iters, change, c, cause, clipped,
                  pohozaev=False)
    rep.extra["stages"] = stage_log
    rep.extra["stage"] = failed
    rep.extra["window"] = [low, high]
    rep.extra["rescale"] = lam
    rescaled = None
    if math.isfinite(lam) and lam > 0:
        rgrid = grid.scaled(lam)
        rescaled = RadialField(values=u.values + math.log(lam), u0=u.u0 + math.log(lam),
                               tail_slope=u.tail_slope)
        q1 = InversePower(alpha=alpha, n=n)
        lam_q1 = dg.total_curvature(rescaled, q1, rgrid, sing)
        residual = dg.pohozaev_singular(rescaled, rgrid, sing, lam_q1)
        rep.extra["grid"] = rgrid
        rep.extra["lambda_star_rescaled"] = lam_q1
        rep.extra["volume_rescaled"] = dg.total_volume(rescaled, rgrid, sing)
        rep.extra["pohozaev_singular"] = residual
        rep.pohozaev_residual = residual
        rep.verdict = dg.bol_verdict(rescaled, q1, rgrid, sing)
        rescaled_ok = abs(residual) < 1e-3 * sing.lambda_1
    else:
        rescaled_ok = False
    rep.lambda_star = rep.extra.get("lambda_star_rescaled", rep.lambda_star)
    rep.beta = rep.lambda_star / sing.gamma_n
    if failed is not None:
        rep.flags.append(f"stage_{failed}_failed")
    if not window_ok:
        rep.flags.append("outside_window")
    if failed is not None or not window_ok or not rescaled_ok:
        rep.flags.append("infeasible")
    return (rescaled if rescaled is not None else u), rep
