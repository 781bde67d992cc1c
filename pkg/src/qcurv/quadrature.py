"""Quadrature building blocks shared by the grid and the kernel.

Radial integrals are discretised in the log variable ``x = log r`` on a
uniform grid.  The composite trapezoid rule is corrected at both ends of
every integration segment with Gregory weights, which keeps the rule
high order on truncated intervals and at the kink of the log kernel.
"""
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

#: highest Gregory correction order; orders above 8 produce negative weights
GREGORY_ORDER = 8


@lru_cache(maxsize=None)
def gregory_corrections(order):
    """Left-end corrections ``c_k`` (k < order) added to trapezoid weights.

    They reproduce the left Euler-Maclaurin boundary terms exactly for
    polynomials of degree < order.  The right end uses the mirror image.
    """
    if order < 2:
        return np.zeros(max(order, 0))
    b = bernoulli(order + 1)
    k = np.arange(order, dtype=float)
    vander = np.vander(k, order, increasing=True).T
    rhs = np.array([b[m + 1] / (m + 1) if m % 2 else 0.0 for m in range(order)])
    c = np.linalg.solve(vander, rhs)
    c.setflags(write=False)
    return c


def segment_weights(size, a, b, order=GREGORY_ORDER):
    """Unit-spacing weights for integrating over nodes ``a..b`` of ``size``.

    Returns a length ``size`` array that is zero outside ``[a, b]``.  The
    correction order is lowered on short segments so that the two end
    stencils never overlap.
    """
    w = np.zeros(size)
    if b <= a:
        return w
    w[a:b + 1] = 1.0
    w[a] = w[b] = 0.5
    p = min(order, (b - a + 1) // 2)
    if p >= 2:
        c = gregory_corrections(p)
        w[a:a + p] += c
        w[b - p + 1:b + 1] += c[::-1]
    return w


@lru_cache(maxsize=None)
def gauss_legendre(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
