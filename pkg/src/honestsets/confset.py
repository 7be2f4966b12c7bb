"""Two-step projection and shrinkage confidence sets for ``mu = X beta``.

A candidate index set ``A`` (chosen on an independent half sample) splits
``R^n`` into span(X_A) and its complement.  The strong-signal part is
estimated by projection with a chi-square radius; the complement part by
Stein shrinkage with a SURE-based radius.  The resulting set is the ellipsoid

    ||P_A mu - mu_A||^2 / (n r_A^2) + ||P_perp mu - mu_perp||^2 / (n r_perp^2) <= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import stein
from .dataset import Dataset
from .errors import DegenerateInputError, DomainError, InvalidInputError
from .numkit import OrthoBasis, as_generator, chi2_quantile, mean_inverse_noncentral_chi2, orthonormal_basis

DEFAULT_E = 10.0
A_GRID = tuple(round(0.05 * i, 2) for i in range(81))
_MEMBERSHIP_SLACK = 1e-12
_PROJECTION_RESIDUE = 1e-12
CRITERIA = ("volume", "diameter")


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateSet:
    indices: tuple[int, ...]
    basis: OrthoBasis

    @property
    def k(self) -> int:
        return self.basis.k

    @classmethod
    def from_indices(cls, X, indices) -> "CandidateSet":
        idx = tuple(sorted(int(i) for i in indices))
        return cls(idx, orthonormal_basis(np.asarray(X)[:, list(idx)], source_indices=idx))


@dataclass(frozen=True)
class EllipsoidCS:
    """Ellipsoid confidence set.  Squared radii are stored; ``r_perp_sq`` may be
    negative only for the untruncated-SURE variant (then the set is empty)."""

    basis: OrthoBasis
    mu_A_hat: np.ndarray
    mu_perp_hat: np.ndarray
    r_A_sq: float
    r_perp_sq: float
    c1: float
    c2: float
    m: int = 0

    @property
    def n(self) -> int:
        return self.mu_perp_hat.shape[0]

    @property
    def k(self) -> int:
        return self.basis.k

    @property
    def r_A(self) -> float:
        return math.sqrt(max(self.r_A_sq, 0.0))

    @property
    def r_perp(self) -> float:
        return math.sqrt(max(self.r_perp_sq, 0.0))

    @property
    def center(self) -> np.ndarray:
        return self.mu_A_hat + self.mu_perp_hat

    def squared_diameter_raw(self) -> float:
        """``4 max(r_A^2, r_perp^2)`` on the signed squared radii (``4 r_perp^2`` for a ball)."""
        if self.k == 0:
            return 4.0 * self.r_perp_sq
        return 4.0 * max(self.r_A_sq, self.r_perp_sq)


@dataclass(frozen=True)
class BallCS:
    """``{mu : ||mu - center||^2 / n <= radius^2}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise DomainError("ball radius must be finite and non-negative")

    @property
    def n(self) -> int:
        return self.center.shape[0]


class Geometry(NamedTuple):
    diameter: float
    log_volume: float
    geo_avg_radius: float


# ---------------------------------------------------------------------------
# radii and constants
# ---------------------------------------------------------------------------

def _base_radius_A_sq(k, n, sigma2, alpha):
    return 0.0 if k == 0 else sigma2 * chi2_quantile(int(k), 1.0 - alpha / 2.0) / n


def _base_radius_A_multi_sq(k, n, sigma2, alpha, M):
    if k == 0:
        return 0.0
    return sigma2 / n * (k + 2.0 * math.sqrt(k * math.log(4.0 * M / alpha)))


def _check_k(k, n):
    if not 0 <= k <= n:
        raise DomainError("need 0 <= k <= n")


def radius_A_single(k: int, n: int, sigma2: float, alpha: float, c1: float) -> float:
    """Strong-signal radius: ``r_A^2 = c1 sigma^2 chi2_{k, 1 - alpha/2} / n``."""
    _check_k(k, n)
    if k == 0:
        return 0.0
    if not c1 > 1:
        raise DomainError("c1 must exceed 1")
    return math.sqrt(c1 * _base_radius_A_sq(k, n, sigma2, alpha))


def radius_A_multi(k: int, n: int, sigma2: float, alpha: float, c1: float, M: int) -> float:
    """Strong-signal radius valid simultaneously over ``M`` candidate sets."""
    _check_k(k, n)
    if M < 1:
        raise DomainError("M must be at least 1")
    if k == 0:
        return 0.0
    if not c1 > 1:
        raise DomainError("c1 must exceed 1")
    return math.sqrt(c1 * _base_radius_A_multi_sq(k, n, sigma2, alpha, M))


def choose_constants_volume(r_tilde_A, r_tilde_perp, k: int, n: int, E: float = DEFAULT_E):
    """Volume-minimising ``(c1, c2)`` under ``1/c1 + 1/c2 = 1`` and ``c1, c2 <= E``.

    The optimum does not depend on the base radii, which are accepted only to
    keep the signature parallel to :func:`choose_constants_diameter`.
    """
    if not E > 2:
        raise DomainError("E must exceed 2")
    if not 1 <= k <= n - 1:
        raise DomainError("volume criterion needs 1 <= k <= n - 1")
    lo = E / (E - 1.0)
    return max(lo, min(n / k, E)), max(lo, min(n / (n - k), E))


def choose_constants_diameter(r_tilde_A, r_tilde_perp):
    """Diameter-minimising ``(c1, c2)``; both final radii equal ``sqrt(r_A~^2 + r_perp~^2)``."""
    a = float(r_tilde_A) ** 2
    b = float(r_tilde_perp) ** 2
    if a == 0.0 and b == 0.0:
        raise DegenerateInputError("both base radii are zero")
    total = a + b
    return (total / a if a > 0 else math.inf), (total / b if b > 0 else math.inf)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_two_step(data: Dataset, cand: CandidateSet, alpha: float, criterion: str = "volume",
                   cs=None, E: float = DEFAULT_E, *, constants=None, sure: str = "truncated",
                   multi_M: int | None = None, cm: float | None = None, m: int = 0) -> EllipsoidCS:
    """One pass of the loop body: project, shrink, pick ``(c1, c2)``, scale the radii.

    ``cs`` is ``c_s(alpha/2)`` (a :class:`~honestsets.stein.SureConstant` or a
    float); by default it is looked up for ``n``.  ``constants`` overrides the
    criterion with a fixed ``(c1, c2)``.  ``sure="untruncated"`` uses ``1 - B``
    in place of ``(1 - B)_+``.  ``multi_M`` switches to the radii valid
    uniformly over ``multi_M`` candidates, with deviation constant ``cm``
    (default ``c_s(alpha/2)``).

    An empty candidate (``k = 0``) gives a ball: the whole budget of the
    complement step is used at level ``alpha/2`` and ``c2 = 1``, which is the
    diameter solution with ``r_A~ = 0``.
    """
    if criterion not in CRITERIA:
        raise DomainError(f"criterion must be one of {CRITERIA}")
    if sure not in ("truncated", "untruncated"):
        raise DomainError("sure must be 'truncated' or 'untruncated'")
    y = data.y
    n = y.shape[0]
    k = cand.k
    if cand.basis.n != n:
        raise InvalidInputError("candidate basis and response have different lengths")
    if k >= n:
        raise DegenerateInputError("candidate spans R^n; no complement left to shrink")
    if cs is None:
        cs = stein.get_cs(n, alpha / 2.0)
    cs_value = float(cs.value if isinstance(cs, stein.SureConstant) else cs)

    mu_A = cand.basis.project(y)
    y_perp = y - mu_A
    if np.linalg.norm(y_perp) <= _PROJECTION_RESIDUE * np.linalg.norm(y):
        # y lies in span(X_A) up to rounding; a residue would give an exploding B
        y_perp = np.zeros_like(y)
    fit = stein.stein_shrink(y_perp, n - k, data.sigma2)
    L = fit.L_hat if sure == "truncated" else (fit.sure_untruncated if math.isfinite(fit.B) else 0.0)

    if multi_M is None:
        a = _base_radius_A_sq(k, n, data.sigma2, alpha)
        deviation = cs_value
    else:
        a = _base_radius_A_multi_sq(k, n, data.sigma2, alpha, multi_M)
        deviation = (cs_value if cm is None else float(cm)) * multi_M ** 0.25
    b = stein.base_radius_perp_sq(L, n, k, data.sigma2, deviation)

    if constants is not None:
        c1, c2 = (float(c) for c in constants)
        if k == 0:
            c1 = math.inf
    elif k == 0:
        c1, c2 = math.inf, 1.0
    elif criterion == "volume":
        c1, c2 = choose_constants_volume(math.sqrt(a), math.sqrt(max(b, 0.0)), k, n, E)
    else:
        c1, c2 = choose_constants_diameter(math.sqrt(a), math.sqrt(max(b, 0.0)))
    r_A_sq = 0.0 if k == 0 else c1 * a
    return EllipsoidCS(cand.basis, mu_A, fit.mu_perp_hat, r_A_sq, c2 * b, c1, c2, int(m))


def generate_candidates(coeffs, lam: float, a_grid: Sequence[float] = A_GRID) -> list[tuple[int, ...]]:
    """Index sets ``{j : |b_j| > a lam}`` over the threshold grid, first occurrences only."""
    if len(a_grid) == 0:
        raise DomainError("threshold grid is empty")
    if any(a < 0 for a in a_grid):
        raise DomainError("thresholds must be non-negative")
    mags = np.abs(np.asarray(coeffs, dtype=float))
    seen = set()
    out = []
    for a in a_grid:
        idx = tuple(int(j) for j in np.flatnonzero(mags > a * lam))
        if idx not in seen:
            seen.add(idx)
            out.append(idx)
    return out


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _safe_log(r):
    return math.log(r) if r > 0 else -math.inf


def geometry(cs) -> Geometry:
    """Diameter ``2 max(r_A, r_perp)``, log volume ``k ln r_A + (n - k) ln r_perp``
    and geometric-average radius ``exp(log volume / n)``."""
    if isinstance(cs, BallCS):
        r = cs.radius
        return Geometry(2.0 * r, cs.n * _safe_log(r), r)
    n, k = cs.n, cs.k
    rA, rP = cs.r_A, cs.r_perp
    if k == 0:
        logv = n * _safe_log(rP)
    else:
        logv = k * _safe_log(rA) + (n - k) * _safe_log(rP)
    geo = math.exp(logv / n) if logv > -math.inf else 0.0
    return Geometry(2.0 * max(rA, rP), logv, geo)


def select_best(sets, criterion: str = "volume"):
    """Set with the smallest volume (or diameter); ties go to smaller ``k``, then smaller ``m``."""
    if not sets:
        raise DomainError("no candidate sets to choose from")
    if criterion not in CRITERIA:
        raise DomainError(f"criterion must be one of {CRITERIA}")
    slot = 1 if criterion == "volume" else 0

    def key(item):
        i, s = item
        g = geometry(s)
        return (g[slot], getattr(s, "k", 0), getattr(s, "m", i))

    return min(enumerate(sets), key=key)[1]


def contains(cs, mu) -> bool:
    """Membership of ``mu`` in the (closed) set."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (cs.n,):
        raise InvalidInputError(f"mu must have length {cs.n}")
    if not np.all(np.isfinite(mu)):
        raise InvalidInputError("mu must be finite")
    return quadratic_form(cs, mu) <= 1.0 + _MEMBERSHIP_SLACK


def _ratio(num, den):
    if den > 0:
        return num / den
    return 0.0 if num == 0.0 else math.inf


def quadratic_form(cs, mu) -> float:
    """Left-hand side of the membership inequality (``<= 1`` inside)."""
    mu = np.asarray(mu, dtype=float)
    n = cs.n
    if isinstance(cs, BallCS):
        d = mu - cs.center
        return _ratio(float(d @ d), n * cs.radius ** 2)
    mu_A = cs.basis.project(mu)
    dA = mu_A - cs.mu_A_hat
    dP = (mu - mu_A) - cs.mu_perp_hat
    q = _ratio(float(dP @ dP), n * max(cs.r_perp_sq, 0.0))
    if cs.k > 0:
        q += _ratio(float(dA @ dA), n * cs.r_A_sq)
    return q


def naive_chi2_ball(y, sigma2: float, alpha: float) -> BallCS:
    """Ball around ``y`` from the pivotal ``||y - mu||^2 / sigma^2 ~ chi2_n``."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    return BallCS(y, math.sqrt(sigma2 * chi2_quantile(n, 1.0 - alpha) / n))


def expected_sq_diameter(k: int, n: int, sigma2: float, alpha: float, c1: float, c2: float,
                         cs: float, rho: float, n_draws: int = 100_000, rng=None, with_stderr=False):
    """Expected squared diameter for a fixed candidate of rank ``k`` (untruncated SURE).

    ``4 sigma^2 max{c1 chi2_{k,1-alpha/2} / n, c2 (n-k)/n (1 - E[(n-k)/chi2_{n-k}(rho)] + cs / sqrt(n-k))}``
    with the inverse-moment term estimated by Monte Carlo.
    """
    m = n - k
    if m <= 2:
        raise DomainError("need n - k > 2")
    cs = float(cs.value if isinstance(cs, stein.SureConstant) else cs)
    first = 0.0 if k == 0 else c1 * chi2_quantile(int(k), 1.0 - alpha / 2.0) / n
    est = mean_inverse_noncentral_chi2(m, rho, n_draws, as_generator(rng))
    second = c2 * m / n * (1.0 - est.value + cs / math.sqrt(m))
    value = 4.0 * sigma2 * max(first, second)
    if not with_stderr:
        return value
    se = 4.0 * sigma2 * c2 * m / n * est.stderr if second >= first else 0.0
    return value, se
