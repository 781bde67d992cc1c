# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled angular quadrature hot loop; same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, log2, ceil, M_PI

cnp.import_array()

cdef enum:
    MAX_LEVEL = 52


cdef inline int _level(double t) nogil:
    cdef double gap = 1.0 - t
    cdef int k
    if gap <= 0.0:
        return MAX_LEVEL
    k = <int>ceil(log2(M_PI / gap)) + 1
    if k < 1:
        return 1
    if k > MAX_LEVEL:
        return MAX_LEVEL
    return k


cdef inline double _integrand(double t, double cos_th, double half_sin2) nogil:
    # log(1 - 2 t cos(theta) + t^2) in the form that stays accurate for t
    if t < 0.5:
        return log1p(t * (t - 2.0 * cos_th))
    return log((1.0 - t) * (1.0 - t) + 4.0 * t * half_sin2)


cdef _trig(const double[:, ::1] x):
    """cos(theta) and sin(theta / 2)^2 for a node table."""
    arr = np.asarray(x)
    half = np.sin(0.5 * arr)
    return np.ascontiguousarray(np.cos(arr)), np.ascontiguousarray(half * half)


def log_offsets(t, const double[:, ::1] dy_x, const double[:, ::1] dy_w,
                const double[:, ::1] fin_x, const double[:, ::1] fin_w):
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef Py_ssize_t m = tv.shape[0], npts = dy_x.shape[1]
    dc, ds = _trig(dy_x)
    fc, fs = _trig(fin_x)
    cdef const double[:, ::1] dy_c = dc, dy_s = ds, fin_c = fc, fin_s = fs
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, k, q
    cdef int lev
    cdef double acc, ti
    with nogil:
        for i in range(m):
            ti = tv[i]
            lev = _level(ti)
            acc = 0.0
            for k in range(lev):
                for q in range(npts):
                    acc += dy_w[k, q] * _integrand(ti, dy_c[k, q], dy_s[k, q])
            for q in range(npts):
                acc += fin_w[lev, q] * _integrand(ti, fin_c[lev, q], fin_s[lev, q])
            ov[i] = acc
    return out
