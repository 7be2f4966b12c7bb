"""Random streams, normal / chi-square distribution utilities and projections.

Everything here is deterministic given its inputs.  Random draws come from
:class:`RngStream`, a (master_seed, stream_id) pair hashed through numpy's
``SeedSequence`` so that each replicate or purpose gets an independent,
reproducible generator regardless of scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidInputError

RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """Counter-style random stream keyed by ``(master_seed, stream_id, path)``.

    ``path`` lets one replicate derive further independent sub-streams
    (data, CV folds, calibration ...) via :meth:`child`.
    """

    master_seed: int
    stream_id: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for v in (self.master_seed, self.stream_id, *self.path):
            if not 0 <= int(v) < 2**64:
                raise DomainError("seeds and stream ids must be unsigned 64-bit integers")

    def child(self, tag: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_id, self.path + (int(tag),))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_id), *map(int, self.path)),
        )
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng):
    """Accept an :class:`RngStream`, a numpy ``Generator``, an int seed, or a duck-typed stub."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    return rng


# ---------------------------------------------------------------------------
# normal distribution
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)

# Acklam's rational approximation, refined below by one Halley step.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_PLOW = 0.02425


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_quantile(prob: float) -> float:
    """Inverse of the standard normal CDF."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"normal quantile needs prob in (0, 1), got {prob!r}")
    if prob == 0.5:
        return 0.0
    # work in the lower half and reflect, which makes the result exactly antisymmetric
    p = min(prob, 1.0 - prob)
    if p < _PLOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    for _ in range(2):
        e = normal_cdf(x) - p
        u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x if prob < 0.5 else -x


# ---------------------------------------------------------------------------
# chi-square distribution
# ---------------------------------------------------------------------------

_EPS = 1e-16
_TINY = 1e-300


def _gamma_series(a: float, x: float) -> float:
    # lower regularised gamma by its power series; converges fast for x < a + 1
    ap = a
    term = total = 1.0 / a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a: float, x: float) -> float:
    # upper regularised gamma by a modified-Lentz continued fraction; for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_p(a: float, x: float) -> float:
    """Lower regularised incomplete gamma function P(a, x)."""
    if a <= 0:
        raise DomainError("shape must be positive")
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cfrac(a, x)


def chi2_cdf(x: float, df: float) -> float:
    return regularized_gamma_p(0.5 * df, 0.5 * x)


def chi2_pdf(x: float, df: float) -> float:
    if x <= 0.0:
        return 0.0
    k = 0.5 * df
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


@lru_cache(maxsize=4096)
def chi2_quantile(df: int, prob: float) -> float:
    """The ``prob``-quantile of the central chi-square law with ``df`` degrees of freedom.

    Bracketed Newton iteration on the regularised incomplete gamma function,
    started from the Wilson-Hilferty cube-root approximation.
    """
    if df < 1:
        raise DomainError(f"chi-square needs df >= 1, got {df!r}")
    if not 0.0 < prob < 1.0:
        raise DomainError(f"chi-square quantile needs prob in (0, 1), got {prob!r}")
    z = normal_quantile(prob)
    h = 2.0 / (9.0 * df)
    x = df * max(1.0 - h + z * math.sqrt(h), 0.05) ** 3

    lo, hi = 0.0, max(x, 1.0)
    while chi2_cdf(hi, df) < prob:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        f = chi2_cdf(x, df) - prob
        if f == 0.0:
            return x
        if f < 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        dens = chi2_pdf(x, df)
        step = f / dens if dens > 0.0 else math.inf
        xn = x - step
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * max(1.0, x):
            return xn
        x = xn
    return x


# ---------------------------------------------------------------------------
# noncentral chi-square sampling
# ---------------------------------------------------------------------------

class MCEstimate(NamedTuple):
    value: float
    stderr: float


def sample_noncentral_chi2(df: int, noncentrality: float, rng, size=None):
    """Draw ``||Z + m||^2`` with ``Z`` a standard normal ``df``-vector and ``||m||^2 = noncentrality``.

    The mean vector is put on the first axis, so a draw is
    ``(Z_1 + sqrt(rho))^2`` plus an independent central chi-square on
    ``df - 1`` degrees of freedom.
    """
    if df < 1:
        raise DomainError("df must be at least 1")
    if noncentrality < 0:
        raise DomainError("noncentrality must be non-negative")
    gen = as_generator(rng)
    shift = math.sqrt(noncentrality)
    first = gen.standard_normal(size) + shift
    out = first * first
    if df > 1:
        out = out + gen.chisquare(df - 1, size)
    return out


def mean_inverse_noncentral_chi2(df: int, noncentrality: float, n_draws: int, rng) -> MCEstimate:
    """Monte-Carlo estimate of ``E[df / chi2_df(rho)]`` and its standard error."""
    if df <= 2:
        raise DomainError("E[1/chi2] is infinite unless df > 2")
    if n_draws < 10_000:
        raise DomainError("use at least 1e4 draws")
    w = sample_noncentral_chi2(df, noncentrality, rng, size=n_draws)
    ratio = df / w
    return MCEstimate(float(ratio.mean()), float(ratio.std(ddof=1) / math.sqrt(n_draws)))


# ---------------------------------------------------------------------------
# orthonormal bases and projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal basis ``Q`` (n x k) of span(X_A); ``k == 0`` is the empty basis."""

    Q: np.ndarray
    k: int
    source_indices: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        if self.k == 0:
            return np.zeros_like(v, dtype=float)
        return self.Q @ (self.Q.T @ v)

    def complement(self, v: np.ndarray) -> np.ndarray:
        return v - self.project(v)


def orthonormal_basis(X_A: np.ndarray, tol: float = RANK_TOL, source_indices=()) -> OrthoBasis:
    """Orthonormal basis of the column space of ``X_A`` via a thin SVD.

    The rank counts singular values above ``tol`` times the largest one.
    """
    X_A = np.asarray(X_A, dtype=float)
    if X_A.ndim == 1:
        X_A = X_A[:, None]
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not np.all(np.isfinite(X_A)):
        raise InvalidInputError("design columns contain non-finite entries")
    n, m = X_A.shape
    idx = tuple(int(i) for i in source_indices)
    if m == 0:
        return OrthoBasis(np.zeros((n, 0)), 0, idx)
    U, s, _ = np.linalg.svd(X_A, full_matrices=False)
    if s[0] == 0.0:
        return OrthoBasis(np.zeros((n, 0)), 0, idx)
    k = int(np.sum(s > tol * s[0]))
    return OrthoBasis(np.ascontiguousarray(U[:, :k]), k, idx)
