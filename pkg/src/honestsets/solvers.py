"""Lasso and MCP by coordinate descent, lambda rules and support thresholding.

Both penalties minimise

    (1 / 2n) ||y - X b||^2 + sum_j pen(b_j)

with ``pen = lam |b|`` for the lasso and the minimax concave penalty
``lam * rho(|b|; lam, gamma)`` for MCP.  The outer loop keeps an active set,
checks the KKT conditions of all inactive coordinates with one BLAS pass,
and hands the active block to the coordinate-descent kernel (compiled when
available, see :mod:`honestsets._backend`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import CalibrationError, DomainError, InvalidInputError
from .numkit import as_generator

DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 100_000
_KKT_SLACK = 1e-9
_DEV_RATIO_MAX = 0.999
_DEV_GAIN_MIN = 1e-5
# held-out errors are insensitive to coordinate accuracy far below this
CV_TOL = 1e-5


@dataclass
class PenalizedFit:
    coefficients: np.ndarray
    lam: float
    gamma: float | None
    n_sweeps: int
    converged: bool
    objective_trace: list = field(default_factory=list)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)


@dataclass(frozen=True)
class LambdaRule:
    kind: str = "theoretical"
    folds: int = 10

    KINDS = ("theoretical", "cv_min", "cv_1se")
    _ALIASES = {"val": "theoretical", "theory": "theoretical", "theoretical": "theoretical",
                "cv": "cv_min", "cv_min": "cv_min", "min": "cv_min",
                "1se": "cv_1se", "cv_1se": "cv_1se"}

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown lambda rule {self.kind!r}")
        if self.kind != "theoretical" and self.folds < 2:
            raise DomainError("cross-validation needs at least two folds")

    @classmethod
    def parse(cls, text: str, folds: int = 10) -> "LambdaRule":
        try:
            return cls(cls._ALIASES[text.lower()], folds)
        except KeyError:
            raise DomainError(f"unknown lambda rule {text!r}") from None

    @property
    def short(self) -> str:
        return {"theoretical": "val", "cv_min": "cv", "cv_1se": "1se"}[self.kind]


def _penalty_sum(beta, lam, gamma):
    a = np.abs(beta)
    if gamma is None or math.isinf(gamma):
        return lam * a.sum()
    inner = a <= gamma * lam
    return float(np.sum(np.where(inner, lam * a - a * a / (2.0 * gamma), 0.5 * gamma * lam * lam)))


def objective(X, y, beta, lam, gamma=None):
    """Penalised least-squares objective with the 1/(2n) loss scaling."""
    r = y - X @ beta
    return float(r @ r) / (2.0 * X.shape[0]) + _penalty_sum(beta, lam, gamma)


def _check_inputs(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise InvalidInputError("X must be n x p and y length n")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidInputError("X and y must be finite")
    return X, y


def _coordinate_descent(X, y, lam, gamma, tol, max_sweeps, beta_init, kernel=None, gram=None):
    # gram: optional precomputed X'X / n, sliced instead of recomputing the active block
    kernel = kernel or _backend.cd_quadratic
    n, p = X.shape
    gam = math.inf if gamma is None else float(gamma)
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)
    active = np.flatnonzero(beta)
    pending = active.size > 0
    sweeps = 0
    converged = True
    trace = [objective(X, y, beta, lam, gamma)]
    while True:
        grad = X.T @ (y - X @ beta) / n
        outside = np.ones(p, dtype=bool)
        outside[active] = False
        violators = np.flatnonzero(outside & (np.abs(grad) > lam * (1.0 + _KKT_SLACK)))
        if violators.size == 0 and not pending:
            break
        pending = False
        if violators.size:
            active = np.union1d(active, violators)
        if gram is None:
            XA = X[:, active]
            G = XA.T @ XA / n
            G = np.ascontiguousarray(0.5 * (G + G.T))
        else:
            G = np.ascontiguousarray(gram[np.ix_(active, active)])
        g = np.ascontiguousarray(grad[active])
        b = np.ascontiguousarray(beta[active])
        budget = max_sweeps - sweeps
        if budget <= 0:
            converged = False
            break
        used, change = kernel(G, g, b, float(lam), gam, float(tol), int(budget))
        sweeps += int(used)
        beta[active] = b
        trace.append(objective(X, y, beta, lam, gamma))
        if change >= tol:
            converged = False
            break
    return PenalizedFit(beta, float(lam), gamma, sweeps, converged, trace)


def lasso(X, y, lam, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS, beta_init=None):
    """Lasso fit ``argmin (1/2n)||y - Xb||^2 + lam ||b||_1``."""
    X, y = _check_inputs(X, y)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return _coordinate_descent(X, y, lam, None, tol, max_sweeps, beta_init)


def mcp(X, y, lam, gamma=3.0, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS, beta_init=None):
    """MCP fit, warm-started from the lasso at the same ``lam`` unless ``beta_init`` is given.

    Returns a coordinate-wise stationary point; the objective never exceeds
    the MCP objective of the warm start.
    """
    X, y = _check_inputs(X, y)
    if not gamma > 1:
        raise DomainError("MCP needs gamma > 1")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if beta_init is None:
        beta_init = lasso(X, y, lam, tol=tol, max_sweeps=max_sweeps).coefficients
    return _coordinate_descent(X, y, lam, float(gamma), tol, max_sweeps, beta_init)


def lambda_max(X, y) -> float:
    """Smallest lambda giving the null lasso fit, ``||X'y / n||_inf``."""
    return float(np.max(np.abs(X.T @ y))) / X.shape[0]


def lambda_grid(lam_max, n_lambda=100, ratio=1e-3):
    return lam_max * np.logspace(0.0, math.log10(ratio), n_lambda)


def lasso_path(X, y, lambdas, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS, early_stop=True):
    """Warm-started lasso fits along a decreasing grid; returns a (len(lambdas), p) array.

    With ``early_stop`` the path halts once the training deviance ratio
    exceeds 0.999, stalls (gain below 1e-5), or the support saturates at n;
    the remaining grid points reuse the last solution.
    """
    X, y = _check_inputs(X, y)
    n = X.shape[0]
    coefs = np.zeros((len(lambdas), X.shape[1]))
    null_dev = float(y @ y)
    gram = X.T @ X / n
    gram = 0.5 * (gram + gram.T)
    beta = None
    prev_ratio = 0.0
    for i, lam in enumerate(lambdas):
        beta = _coordinate_descent(X, y, lam, None, tol, max_sweeps, beta, gram=gram).coefficients
        coefs[i] = beta
        if not early_stop or null_dev == 0.0:
            continue
        r = y - X @ beta
        ratio = 1.0 - float(r @ r) / null_dev
        if ratio > _DEV_RATIO_MAX or (i >= 5 and ratio - prev_ratio < _DEV_GAIN_MIN) \
                or np.count_nonzero(beta) >= n:
            coefs[i + 1:] = beta
            break
        prev_ratio = ratio
    return coefs


@dataclass
class CVResult:
    lambdas: np.ndarray
    mean_error: np.ndarray
    se_error: np.ndarray
    lambda_min: float
    lambda_1se: float


def cross_validate(X, y, rng, folds=10, n_lambda=100, ratio=1e-3, tol=CV_TOL):
    """K-fold CV of the lasso over a log-spaced grid from lambda_max down to ``ratio * lambda_max``.

    The CV error is the per-fold mean squared prediction error averaged over
    folds; its standard error is the across-fold standard deviation over
    ``sqrt(folds)``.  Paths use the looser ``CV_TOL`` and glmnet-style early
    termination (see :func:`lasso_path`).
    """
    X, y = _check_inputs(X, y)
    n = X.shape[0]
    if n < folds:
        raise CalibrationError(f"need at least {folds} observations for {folds}-fold CV")
    if np.all(y == y[0]):
        raise CalibrationError("response has zero variance")
    lambdas = lambda_grid(lambda_max(X, y), n_lambda, ratio)
    perm = as_generator(rng).permutation(n)
    errors = np.empty((folds, n_lambda))
    for f, test in enumerate(np.array_split(perm, folds)):
        train = np.setdiff1d(perm, test)
        coefs = lasso_path(X[train], y[train], lambdas, tol=tol)
        resid = y[test][None, :] - coefs @ X[test].T
        errors[f] = np.mean(resid * resid, axis=1)
    mean = errors.mean(axis=0)
    se = errors.std(axis=0, ddof=1) / math.sqrt(folds)
    i_min = int(np.argmin(mean))
    # grid is decreasing, so the first index within one SE is the largest lambda
    i_1se = int(np.flatnonzero(mean <= mean[i_min] + se[i_min])[0])
    return CVResult(lambdas, mean, se, float(lambdas[i_min]), float(lambdas[i_1se]))


def theoretical_lambda(sigma, n, p) -> float:
    return 2.0 * math.sqrt(2.0) * sigma * math.sqrt(math.log(p) / n)


def select_lambda(X, y, sigma, rule: LambdaRule, rng=None) -> float:
    """Tuning parameter by the theoretical value, the CV minimiser, or the one-SE rule."""
    if isinstance(rule, str):
        rule = LambdaRule.parse(rule)
    n, p = np.shape(X)
    if rule.kind == "theoretical":
        return theoretical_lambda(sigma, n, p)
    cv = cross_validate(X, y, rng, folds=rule.folds)
    return cv.lambda_min if rule.kind == "cv_min" else cv.lambda_1se


def threshold_support(coefficients, tau: float) -> np.ndarray:
    """Indices ``j`` with ``|b_j| > tau`` (``tau = 0`` gives the support)."""
    if tau < 0:
        raise DomainError("threshold must be non-negative")
    return np.flatnonzero(np.abs(np.asarray(coefficients)) > tau)
