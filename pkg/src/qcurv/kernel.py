"""Sphere-averaged log kernel and the Nystrom matrix built from it.

For radial densities the potential of the normal-solution formula reduces
to a one-dimensional integral against

    A_n(r, s) = mean over |w| = 1 of log(1 / |r e_1 - s w|)
              = -log max(r, s) + a_n(min(r, s) / max(r, s)),

with a_2 = 0, a closed form for n = 3 and a graded Gauss-Legendre rule in
the polar angle for n >= 4.  On a geometric grid A_n(r_i, r_j) only needs
a_n at the M ratios exp(-h |i - j|).
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .model import DomainError, QuadratureError, RadialField
from .quadrature import gauss_legendre
from . import _pykernels

if os.environ.get("QCURV_PURE_PYTHON"):
    _backend = _pykernels
else:
    try:
        from . import _ckernels as _backend
    except ImportError:  # extension not built
        _backend = _pykernels

#: name of the active angular-quadrature backend
BACKEND = "compiled" if _backend is not _pykernels else "python"

PANEL_POINTS = 16
_CHECK_POINTS = 24
_TAIL_POINTS = 24
_SPLINE_NODES = 4097


def _c_n(n):
    return math.gamma(n / 2.0) / (math.sqrt(math.pi) * math.gamma((n - 1) / 2.0))


@lru_cache(maxsize=None)
def panel_tables(n, npts=PANEL_POINTS):
    """Graded panel nodes/weights (dyadic panels, closing panels) for dimension n."""
    x, w = gauss_legendre(npts)
    scale = -0.5 * _c_n(n)
    levels = _pykernels.MAX_LEVEL

    def panel(a, b):
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        th = mid + half * x
        return th, half * w * np.sin(th) ** (n - 2) * scale

    dy = [panel(math.pi * 2.0 ** (-k - 1), math.pi * 2.0 ** (-k)) for k in range(levels)]
    fin = [panel(0.0, math.pi * 2.0 ** (-k)) for k in range(levels + 1)]
    tables = tuple(np.ascontiguousarray([p[i] for p in rows])
                   for rows in (dy, fin) for i in (0, 1))
    for a in tables:
        a.setflags(write=False)
    return tables


def _a3(t):
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = t < 0.1
    ts = t[small]
    acc = np.zeros_like(ts)
    for k in range(40, 0, -2):
        acc += ts ** k / (k * (k * k - 1.0))
    out[small] = -acc
    tb = t[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = 1.0 - tb
        lo = np.where(gap > 0, gap * gap * (2.0 * np.log(np.where(gap > 0, gap, 1.0)) - 1.0), 0.0)
        hi = (1.0 + tb) ** 2 * (2.0 * np.log1p(tb) - 1.0)
    out[~small] = -(hi - lo) / (8.0 * tb)
    return out


def log_offsets(n, t, npts=PANEL_POINTS):
    """a_n(t) = A_n(1, t) for ratios 0 <= t <= 1."""
    t = np.asarray(t, dtype=float)
    if n == 2:
        return np.zeros_like(t)
    if n == 3:
        return _a3(t)
    flat = _backend.log_offsets(t.ravel(), *panel_tables(n, npts))
    return flat.reshape(t.shape)


def angular_log_average(n, r, s):
    """A_n(r, s): sphere average of log(1 / |r e_1 - s w|).

    Raises ``QuadratureError`` if two independent graded rules disagree
    by more than 1e-10.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer n >= 2, got n={n}")
    if r < 0 or s < 0:
        raise DomainError("radii must be nonnegative")
    big, small = max(r, s), min(r, s)
    if big == 0:
        raise DomainError("A_n(0, 0) is undefined")
    t = small / big
    val = float(log_offsets(n, np.array([t]))[0])
    if n >= 4:
        check = float(log_offsets(n, np.array([t]), _CHECK_POINTS)[0])
        if abs(check - val) > 1e-10:
            raise QuadratureError(f"angular quadrature for n={n}, t={t!r} missed 1e-10")
    return -math.log(big) + val


def log_average_matrix(n, r, s):
    """A_n(r_i, s_j) for arbitrary positive radii (dense, general path)."""
    r = np.asarray(r, dtype=float)[:, None]
    s = np.asarray(s, dtype=float)[None, :]
    big = np.maximum(r, s)
    return -np.log(big) + log_offsets(n, np.minimum(r, s) / big)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Nystrom discretisation of the normal-solution potential.

    ``entries @ d`` gives the potential at the nodes of a radial density
    sampled as ``d``; ``origin_row @ d`` its value at r = 0.
    """

    params: object
    grid: object
    entries: np.ndarray
    origin_row: np.ndarray
    _spline: list = field(default_factory=list, repr=False)

    @property
    def n(self):
        return self.params.n

    @property
    def coef(self):
        return self.params.omega / self.params.gamma_n

    def _offset_fn(self):
        n = self.params.n
        if n <= 3:
            return lambda t: log_offsets(n, t)
        if not self._spline:
            t = np.linspace(0.0, 1.0, _SPLINE_NODES)
            self._spline.append(CubicSpline(t, log_offsets(n, t)))
        return self._spline[0]

    def tail_response(self, tau):
        """Potential (nodes, origin) of a unit-height power-law tail beyond r_max.

        The tail density is (s / R)^-(tau + n); tau must be positive.
        """
        if not tau > 0:
            raise DomainError(f"tail exponent must be positive, got tau={tau}")
        grid = self.grid
        big = grid.r_max
        x, w = gauss_legendre(_TAIL_POINTS)
        v = 0.5 * (x + 1.0)
        wq = 0.5 * w
        with np.errstate(over="ignore"):
            s = big * v ** (-1.0 / tau)
        far = np.log1p(1.0 / s)
        ratio = grid.nodes[:, None] / s[None, :]
        near = self._offset_fn()(ratio)
        scale = self.coef * big ** grid.n / tau
        return scale * ((far[None, :] + near) @ wq), scale * float(far @ wq)


def build_kernel(params, grid):
    """Assemble the dense kernel for ``grid``.

    Row i uses quadrature weights split at node i so that the derivative
    jump of A_n at s = r_i does not reduce the order of the rule.
    """
    if params.n != grid.n:
        raise DomainError(f"grid built for n={grid.n} but params have n={params.n}")
    m = grid.m
    r = grid.nodes
    logr = np.log(r)
    ratios = np.exp(-grid.log_step * np.arange(m))
    offsets = log_offsets(params.n, ratios)
    if params.n >= 4:
        hard = np.arange(min(m, 8))
        check = log_offsets(params.n, ratios[hard], _CHECK_POINTS)
        bad = np.flatnonzero(np.abs(check - offsets[hard]) > 1e-10)
        if bad.size:
            raise QuadratureError(f"angular quadrature failed at (i, j) = (0, {hard[bad[0]]})")
    idx = np.arange(m)
    amat = -np.maximum(logr[:, None], logr[None, :]) + offsets[np.abs(idx[:, None] - idx[None, :])]
    wsplit = np.empty((m, m))
    for i in range(m):
        wsplit[i] = grid.split_weights(i)
    coef = params.omega / params.gamma_n
    far = np.log1p(r) * grid.weights
    entries = coef * (amat * wsplit + far[None, :])
    origin = coef * (np.log1p(r) - logr) * grid.weights
    entries.setflags(write=False)
    origin.setflags(write=False)
    return KernelMatrix(params=params, grid=grid, entries=entries, origin_row=origin)


def apply_kernel(kernel, density, tail=None):
    """Potential of a radial density as a ``RadialField``.

    ``tail`` is an optional (height, tau) pair describing a power-law
    continuation of the density beyond r_max (see ``tail_response``).
    """
    d = np.asarray(density, dtype=float)
    if d.shape != (kernel.grid.m,):
        raise ValueError(f"density has shape {d.shape}, expected ({kernel.grid.m},)")
    values = kernel.entries @ d
    u0 = float(kernel.origin_row @ d)
    mass = kernel.params.omega * float(kernel.grid.weights @ d)
    if tail is not None and tail[0] != 0:
        height, tau = tail
        tv, t0 = kernel.tail_response(tau)
        values = values + height * tv
        u0 += height * t0
        mass += kernel.params.omega * height * kernel.grid.r_max ** kernel.grid.n / tau
    return RadialField(values=values, u0=u0, tail_slope=mass / kernel.params.gamma_n)


_MAGIC = b"QKRN"
_VERSION = 1
_HEADER = struct.Struct("<4sIII32s")


def save_kernel(kernel, path):
    """Write the matrix as header + row-major little-endian float64."""
    grid = kernel.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, kernel.n, grid.m, grid.digest()))
        fh.write(np.ascontiguousarray(kernel.entries, dtype="<f8").tobytes())


def load_kernel(params, grid, path):
    """Read a cached matrix; returns None when missing, stale or corrupt."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                return None
            magic, version, n, m, digest = _HEADER.unpack(head)
            if (magic, version, n, m, digest) != (_MAGIC, _VERSION, params.n, grid.m, grid.digest()):
                return None
            raw = fh.read()
    except OSError:
        return None
    if len(raw) != 8 * grid.m * grid.m:
        return None
    entries = np.frombuffer(raw, dtype="<f8").reshape(grid.m, grid.m).astype(float)
    entries.setflags(write=False)
    coef = params.omega / params.gamma_n
    origin = coef * (np.log1p(grid.nodes) - np.log(grid.nodes)) * grid.weights
    origin.setflags(write=False)
    return KernelMatrix(params=params, grid=grid, entries=entries, origin_row=origin)


def cached_kernel(params, grid, path):
    """Load ``path`` if it matches, else build and write it."""
    kernel = load_kernel(params, grid, path)
    if kernel is None:
        kernel = build_kernel(params, grid)
        save_kernel(kernel, path)
    return kernel
