"""Pure-Python twin of ``_cd_kernel.pyx``.

Same operation order as the compiled kernel, so both produce bit-identical
coefficients.  The O(m) gradient update is vectorised with numpy, which is
elementwise and therefore rounds identically.
"""
import math

import numpy as np


def _penalty(b, lam, gamma):
    ab = abs(b)
    if math.isinf(gamma):
        return lam * ab
    if ab <= gamma * lam:
        return lam * ab - b * b / (2.0 * gamma)
    return 0.5 * gamma * lam * lam


def _coordinate(z, v, lam, gamma):
    if v <= 0.0:
        return 0.0
    az = abs(z)
    s = 1.0 if z > 0.0 else -1.0
    if math.isinf(gamma):
        if az <= lam:
            return 0.0
        return s * (az - lam) / v
    if v * gamma > 1.0:
        if az <= lam:
            return 0.0
        if az <= gamma * lam * v:
            return s * (az - lam) / (v - 1.0 / gamma)
        return z / v
    b = s * (az / v if az / v > gamma * lam else gamma * lam)
    if 0.5 * v * b * b - z * b + _penalty(b, lam, gamma) < 0.0:
        return b
    return 0.0


def cd_quadratic(G, g, beta, lam, gamma, tol, max_sweeps):
    """See ``_cd_kernel.cd_quadratic``; ``g`` and ``beta`` are updated in place."""
    m = G.shape[0]
    diag = [float(G[j, j]) for j in range(m)]
    lam, gamma, tol = float(lam), float(gamma), float(tol)
    sweep = 0
    maxchg = 0.0
    while sweep < max_sweeps:
        sweep += 1
        maxchg = 0.0
        for j in range(m):
            v = diag[j]
            bj = float(beta[j])
            z = float(g[j]) + v * bj
            bnew = _coordinate(z, v, lam, gamma)
            delta = bnew - bj
            if delta != 0.0:
                beta[j] = bnew
                np.subtract(g, G[j] * delta, out=g)
                if abs(delta) > maxchg:
                    maxchg = abs(delta)
        if maxchg < tol:
            break
    return sweep, maxchg
