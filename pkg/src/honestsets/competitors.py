"""Baseline confidence sets: the adaptive sample-splitting ball, the oracle lasso
ball and the two-step lasso ellipsoid, with Monte-Carlo calibration of their
lasso error constants."""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import confset, solvers
from .confset import BallCS, CandidateSet, EllipsoidCS
from .dataset import Dataset
from .errors import CalibrationError, DegenerateInputError, DomainError, InvalidInputError
from .numkit import as_generator, normal_quantile

DEFAULT_K = 2.0 * math.sqrt(2.0) + 0.01
DEFAULT_NU = 0.5
ETA_GRID = tuple(0.25 * i for i in range(1, 13))


@dataclass(frozen=True)
class CalibratedConstant:
    kind: str
    alpha: float
    value: float
    n_sim: int
    context: tuple = ()


def design_digest(X) -> str:
    X = np.ascontiguousarray(X, dtype=float)
    return hashlib.sha256(X.tobytes() + repr(X.shape).encode()).hexdigest()[:16]


def _lasso_coefficients(data: Dataset, lambda_rule, rng, beta_hat, lam):
    if beta_hat is not None:
        return np.asarray(beta_hat, dtype=float), lam
    if lam is None:
        lam = solvers.select_lambda(data.X, data.y, data.sigma, lambda_rule, rng)
    beta_hat = solvers.lasso(data.X, data.y, lam).coefficients
    return beta_hat, lam


# ---------------------------------------------------------------------------
# adaptive ball
# ---------------------------------------------------------------------------

def adaptive_statistic(d: float, R: float, sigma2: float, n: int) -> float:
    """``(R_n - d) / tau_n`` with ``d = ||mu - X b||^2 / n``."""
    tau = math.sqrt(2.0 * sigma2 ** 2 / n + 4.0 * sigma2 * d / n)
    return (R - d) / tau


def adaptive_radius_sq(R: float, sigma2: float, n: int, alpha: float) -> float:
    """Larger root ``d`` of ``(R - d)^2 = z^2 (2 sigma^4 + 4 sigma^2 d) / n``."""
    z = normal_quantile(1.0 - alpha)
    if not z > 0:
        raise DomainError("alpha must be below 1/2")
    h = R + 2.0 * z * z * sigma2 / n
    disc = h * h - R * R + 2.0 * z * z * sigma2 ** 2 / n
    assert disc >= 0.0
    return h + math.sqrt(disc)


def adaptive_cs(fit_half: Dataset, eval_half: Dataset, lambda_rule, alpha: float,
                rng=None, beta_hat=None, lam=None) -> BallCS:
    """Ball around ``X beta_hat`` (lasso on the fitting half) with the
    loss-estimate radius computed on the evaluation half."""
    beta_hat, _ = _lasso_coefficients(fit_half, lambda_rule, rng, beta_hat, lam)
    center = eval_half.X @ beta_hat
    if not np.all(np.isfinite(center)):
        raise InvalidInputError("lasso fit is not finite")
    n = eval_half.n
    r = eval_half.y - center
    R = float(r @ r) / n - eval_half.sigma2
    return BallCS(center, math.sqrt(adaptive_radius_sq(R, eval_half.sigma2, n, alpha)))


# ---------------------------------------------------------------------------
# lasso error calibration
# ---------------------------------------------------------------------------

def signal_bound(X_prime, y_prime) -> float:
    """Rough bound on ``||beta||_inf``: ``max_i |X'_i^T y'| / ||X'_i||^2``."""
    X_prime = np.asarray(X_prime, dtype=float)
    norms = np.einsum("ij,ij->j", X_prime, X_prime)
    keep = norms > 0
    if not np.any(keep):
        raise CalibrationError("design has no non-zero column")
    return float(np.max(np.abs(X_prime.T @ np.asarray(y_prime, dtype=float))[keep] / norms[keep]))


def lasso_error_draws(X, lam: float, s: int, b: float, sigma2: float, n_sim: int, rng) -> np.ndarray:
    """Draws of ``||X (g_hat - g)||^2 / (sigma^2 s ln p)`` over random ``s``-sparse ``g``.

    Non-zeros of ``g`` are ``U(-b, b)`` on a uniformly random support and
    ``y* ~ N(X g, sigma^2 I)``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n_sim < 100:
        raise CalibrationError("n_sim below 100 gives an unreliable quantile")
    if not b > 0:
        raise CalibrationError("signal bound must be positive")
    if s < 1:
        raise DomainError("sparsity must be at least 1")
    gen = as_generator(rng)
    sd = math.sqrt(sigma2)
    denom = sigma2 * s * math.log(p)
    out = np.empty(n_sim)
    for j in range(n_sim):
        g = np.zeros(p)
        g[gen.permutation(p)[:s]] = gen.uniform(-b, b, size=s)
        mu = X @ g
        y = mu + sd * gen.standard_normal(n)
        beta = solvers.lasso(X, y, lam).coefficients
        d = X @ beta - mu
        out[j] = float(d @ d) / denom
    return out


def _quantile(draws, alpha):
    return float(np.quantile(draws, 1.0 - alpha))


def calibrate_c_o(X, lam: float, s_beta: int, alpha: float, n_sim: int, rng, b: float,
                  sigma2: float = 1.0) -> CalibratedConstant:
    """``(1 - alpha)`` quantile of the whole-data lasso error in units of ``sigma^2 s ln p``."""
    draws = lasso_error_draws(X, lam, s_beta, b, sigma2, n_sim, rng)
    return CalibratedConstant("c_o", float(alpha), _quantile(draws, alpha), int(n_sim),
                              (design_digest(X), float(lam), int(s_beta)))


def projected_design(X, basis) -> np.ndarray:
    """``P_perp X`` for the complement of ``span(basis)``."""
    X = np.asarray(X, dtype=float)
    if basis.k == 0:
        return X.copy()
    return X - basis.Q @ (basis.Q.T @ X)


def lambda_two_step(K: float, nu: float, sigma2: float, p: int, n: int, size_A: int = 0,
                    sigma_power: int = 2) -> float:
    """Step-2 tuning ``nu K sigma^q sqrt(ln(p - |A|) / (n - |A|))`` with ``q = 2`` (default) or ``1``.

    The same value is used for the step-2 fit and for calibrating ``c_l``, so
    the calibrated quantile describes the estimator actually used.
    """
    if sigma_power not in (1, 2):
        raise DomainError("sigma_power must be 1 or 2")
    scale = sigma2 if sigma_power == 2 else math.sqrt(sigma2)
    return nu * K * scale * math.sqrt(math.log(p - size_A) / (n - size_A))


def estimate_cl(X, X_prime, y_prime, s_beta: int, lambda_sim: float, alpha: float, n_sim: int,
                rng, sigma2: float = 1.0) -> CalibratedConstant:
    """Calibrate the weak-signal lasso constant on the step-2 design ``X``.

    For a candidate ``A`` the step-2 design is ``P_perp X_{A^c}``, so
    ``s_beta`` is the sparsity left after ``A`` and ``ln p`` counts the
    remaining columns.  ``b`` comes from the held-out half only, so the
    constant does not depend on the response used to build the set.
    """
    b = signal_bound(X_prime, y_prime)
    if not b > 0:
        raise CalibrationError("signal bound b must be positive")
    draws = lasso_error_draws(X, lambda_sim, s_beta, b, sigma2, n_sim, rng)
    return CalibratedConstant("c_l", float(alpha), _quantile(draws, alpha), int(n_sim),
                              (design_digest(X), float(lambda_sim), int(s_beta)))


def choose_eta(q, alpha: float, grid: Sequence[float] = ETA_GRID) -> float:
    """Grid factor whose pooled coverage ``mean(q <= eta)`` is closest to ``1 - alpha``.

    ``q`` holds lasso errors in units of ``c_o(lambda_val) sigma^2 s ln p``.
    Equal distances go to the higher coverage (the more conservative ball);
    equal coverages go to the smallest factor that attains it.
    """
    q = np.asarray(q, dtype=float)
    if q.size == 0:
        raise CalibrationError("no pilot draws")
    best = None
    for eta in sorted(float(e) for e in grid):
        cov = float(np.mean(q <= eta))
        # round so that mirror-image gaps compare equal despite float noise
        key = (round(abs(cov - (1.0 - alpha)), 12), -cov)
        if best is None or key < best[0]:
            best = (key, eta)
    return best[1]


# ---------------------------------------------------------------------------
# oracle lasso ball
# ---------------------------------------------------------------------------

def oracle_radius_sq(c_o: float, sigma2: float, s_beta: int, p: int, n: int) -> float:
    return c_o * sigma2 * s_beta * math.log(p) / n


def oracle_lasso_cs(data_full: Dataset, s_beta: int, lambda_rule, alpha: float, c_o,
                    rng=None, beta_hat=None, lam=None) -> BallCS:
    """Ball around the whole-data lasso fit with radius ``c_o sigma^2 s ln p / n``."""
    value = float(c_o.value if isinstance(c_o, CalibratedConstant) else c_o)
    if s_beta == 0:
        warnings.warn("oracle ball with s_beta = 0 is a point at the null fit", RuntimeWarning)
        return BallCS(np.zeros(data_full.n), 0.0)
    beta_hat, _ = _lasso_coefficients(data_full, lambda_rule, rng, beta_hat, lam)
    center = data_full.X @ beta_hat
    if not np.all(np.isfinite(center)):
        raise InvalidInputError("lasso fit is not finite")
    r2 = oracle_radius_sq(value, data_full.sigma2, s_beta, data_full.p, data_full.n)
    return BallCS(center, math.sqrt(r2))


# ---------------------------------------------------------------------------
# two-step lasso
# ---------------------------------------------------------------------------

def projected_lasso(X, y, basis, lam: float, reduced: bool = False, tol=solvers.DEFAULT_TOL):
    """Lasso of ``P_perp y`` on ``P_perp X`` with the ``1/(2n)`` loss.

    With ``reduced`` the same problem is solved in complement coordinates:
    ``V^T X_{A^c}`` with ``V`` an orthonormal basis of the complement, the
    ``A`` coefficients pinned at zero and ``lam`` rescaled by ``n / (n - k)``
    for the shorter response.  Both forms return a length-``p`` vector.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if not reduced:
        Xp = projected_design(X, basis)
        yp = y - basis.project(y)
        return solvers.lasso(Xp, yp, lam, tol=tol).coefficients
    k = basis.k
    if k == 0:
        V = np.eye(n)
    else:
        U, _, _ = np.linalg.svd(basis.Q, full_matrices=True)
        V = U[:, k:]
    rest = np.setdiff1d(np.arange(p), np.asarray(basis.source_indices, dtype=int))
    Xr = V.T @ X[:, rest]
    yr = V.T @ y
    beta = np.zeros(p)
    beta[rest] = solvers.lasso(Xr, yr, lam * n / (n - k), tol=tol).coefficients
    return beta


def trim_candidate(indices, coeffs, s_beta: int) -> tuple[int, ...]:
    """Keep the ``s_beta - 1`` largest ``|coeffs|`` of ``indices`` (ties by index)."""
    idx = list(indices)
    limit = max(s_beta - 1, 0)
    if len(idx) <= limit:
        return tuple(idx)
    mags = np.abs(np.asarray(coeffs, dtype=float))
    kept = sorted(idx, key=lambda j: (-mags[j], j))[:limit]
    return tuple(sorted(kept))


def two_step_lasso_candidates(coeffs, lam, s_beta, a_grid=confset.A_GRID):
    out = []
    for idx in confset.generate_candidates(coeffs, lam, a_grid):
        t = trim_candidate(idx, coeffs, s_beta)
        if t not in out:
            out.append(t)
    return out


def build_two_step_lasso(data: Dataset, cand: CandidateSet, s_beta: int, alpha: float,
                         criterion: str, c_l: float, K: float = DEFAULT_K, nu: float = DEFAULT_NU,
                         sigma_power: int = 2, m: int = 0) -> EllipsoidCS:
    """Projection step as in the Stein set, lasso on the complement in step 2.

    ``c_l`` is the weak-signal constant calibrated at level ``alpha / 2`` for
    this candidate's rank.
    """
    n, p = data.X.shape
    k = cand.k
    if k >= s_beta:
        raise DegenerateInputError("two-step lasso needs rank(X_A) < s_beta")
    p_eff = p - len(cand.indices)
    lam2 = lambda_two_step(K, nu, data.sigma2, p, n, len(cand.indices), sigma_power)
    Xp = projected_design(data.X, cand.basis)
    mu_A = cand.basis.project(data.y)
    beta = solvers.lasso(Xp, data.y - mu_A, lam2).coefficients
    mu_perp = Xp @ beta
    a = 0.0 if k == 0 else data.sigma2 * confset.chi2_quantile(k, 1.0 - alpha / 2.0) / n
    b = float(c_l) * data.sigma2 * (s_beta - k) * math.log(p_eff) / n
    if k == 0:
        c1, c2 = math.inf, 1.0
    elif criterion == "volume":
        c1, c2 = confset.choose_constants_volume(math.sqrt(a), math.sqrt(b), k, n)
    else:
        c1, c2 = confset.choose_constants_diameter(math.sqrt(a), math.sqrt(b))
    return EllipsoidCS(cand.basis, mu_A, mu_perp, 0.0 if k == 0 else c1 * a, c2 * b, c1, c2, m)


def two_step_lasso_cs(fit_half: Dataset, eval_half: Dataset, s_beta: int, alpha: float,
                      criterion: str, lambda_rule, c_l: Callable[[int], float],
                      K: float = DEFAULT_K, nu: float = DEFAULT_NU, a_grid=confset.A_GRID,
                      rng=None, beta_hat=None, lam=None, sigma_power: int = 2) -> EllipsoidCS:
    """Best two-step lasso set over thresholded, trimmed candidates.

    ``c_l(k)`` returns the calibrated constant for a candidate of rank ``k``.
    """
    if c_l is None:
        raise CalibrationError("two-step lasso needs calibrated c_l constants")
    beta_hat, lam = _lasso_coefficients(fit_half, lambda_rule, rng, beta_hat, lam)
    sets = []
    for m, idx in enumerate(two_step_lasso_candidates(beta_hat, lam, s_beta, a_grid)):
        cand = CandidateSet.from_indices(eval_half.X, idx)
        value = c_l(cand.k)
        sets.append(build_two_step_lasso(eval_half, cand, s_beta, alpha, criterion, value,
                                         K, nu, sigma_power, m))
    return confset.select_best(sets, criterion)
