# cython: language_level=3
"""Compiled coordinate-descent kernel.

Minimises ``0.5 b'Gb - c'b + sum_j pen(b_j)`` over a small active block,
where ``G`` is the block Gram matrix (already divided by n) and the lasso or
MCP penalty is selected by ``gamma`` (``inf`` means lasso).  The gradient
vector ``g = c - G b`` is updated in place after every coordinate move
(covariance updates), so a sweep costs O(m^2) for an m-variable block.

The arithmetic order is mirrored exactly by ``_cd_fallback.py``.
"""
from libc.math cimport fabs, isinf

cdef inline double _penalty(double b, double lam, double gamma) noexcept nogil:
    cdef double ab = fabs(b)
    if isinf(gamma):
        return lam * ab
    if ab <= gamma * lam:
        return lam * ab - b * b / (2.0 * gamma)
    return 0.5 * gamma * lam * lam


cdef inline double _coordinate(double z, double v, double lam, double gamma) noexcept nogil:
    cdef double az, s, b
    if v <= 0.0:
        return 0.0
    az = fabs(z)
    s = 1.0 if z > 0.0 else -1.0
    if isinf(gamma):
        if az <= lam:
            return 0.0
        return s * (az - lam) / v
    if v * gamma > 1.0:
        if az <= lam:
            return 0.0
        if az <= gamma * lam * v:
            return s * (az - lam) / (v - 1.0 / gamma)
        return z / v
    # concave 1-D problem: optimum is 0 or the far candidate
    b = s * (az / v if az / v > gamma * lam else gamma * lam)
    if 0.5 * v * b * b - z * b + _penalty(b, lam, gamma) < 0.0:
        return b
    return 0.0


def cd_quadratic(double[:, ::1] G, double[::1] g, double[::1] beta,
                 double lam, double gamma, double tol, long max_sweeps):
    """Run sweeps until the largest coefficient move is below ``tol``.

    ``g`` and ``beta`` are modified in place.  Returns ``(n_sweeps, max_change)``.
    """
    cdef Py_ssize_t m = G.shape[0]
    cdef Py_ssize_t i, j
    cdef long sweep = 0
    cdef double v, z, bnew, delta, maxchg = 0.0
    with nogil:
        while sweep < max_sweeps:
            sweep += 1
            maxchg = 0.0
            for j in range(m):
                v = G[j, j]
                z = g[j] + v * beta[j]
                bnew = _coordinate(z, v, lam, gamma)
                delta = bnew - beta[j]
                if delta != 0.0:
                    beta[j] = bnew
                    for i in range(m):
                        g[i] = g[i] - G[j, i] * delta
                    if fabs(delta) > maxchg:
                        maxchg = fabs(delta)
            if maxchg < tol:
                break
    return sweep, maxchg
