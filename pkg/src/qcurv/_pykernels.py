"""Pure numpy implementation of the angular quadrature hot loop.

Mirrors ``_ckernels``; used when the compiled extension is unavailable
or ``QCURV_PURE_PYTHON`` is set.
"""
import numpy as np

MAX_LEVEL = 52
_CHUNK = 1 << 15


def panel_levels(t):
    """Number of dyadic panels needed for ratio t (vectorised)."""
    t = np.asarray(t, dtype=float)
    gap = 1.0 - t
    with np.errstate(divide="ignore"):
        k = np.ceil(np.log2(np.pi / np.where(gap > 0, gap, 1.0))) + 1.0
    k = np.where(gap > 0, k, MAX_LEVEL)
    return np.clip(k, 1, MAX_LEVEL).astype(np.int64)


def _integrand(t, theta):
    small = t < 0.5
    s = np.sin(0.5 * theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.log((1.0 - t) ** 2 + 4.0 * t * s * s)
        far = np.log1p(t * (t - 2.0 * np.cos(theta)))
    return np.where(small, far, near)


def log_offsets(t, dy_x, dy_w, fin_x, fin_w):
    """a_n(t) for an array of ratios 0 <= t <= 1.

    ``dy_x``/``dy_w`` hold nodes and weights of the dyadic panels
    [pi 2^-(k+1), pi 2^-k]; ``fin_x``/``fin_w`` those of the closing panel
    [0, pi 2^-K].  Weights already include sin^(n-2) and -c_n/2.
    """
    t = np.ascontiguousarray(t, dtype=float).ravel()
    out = np.empty_like(t)
    levels = panel_levels(t)
    for start in range(0, t.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        tc, kc = t[sl], levels[sl]
        acc = np.zeros(tc.size)
        for lev in np.unique(kc):
            sel = kc == lev
            ts = tc[sel][:, None]
            th = np.concatenate([dy_x[:lev].ravel(), fin_x[lev]])
            wt = np.concatenate([dy_w[:lev].ravel(), fin_w[lev]])
            acc[sel] = _integrand(ts, th[None, :]) @ wt
        out[sl] = acc
    return out
