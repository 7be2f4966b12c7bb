"""Gaussian random designs and sparse coefficient vectors for the simulation grid."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..dataset import Dataset
from ..errors import DomainError
from ..numkit import as_generator

DESIGNS = ("toeplitz", "expdecay", "equicorr")
BETA_MODES = ("uniform", "mixed")
TOEPLITZ_RHO = 0.5
EXPDECAY_RHO = 0.4
EQUICORR_RHO = 0.8
WEAK_BOUND = 0.2


def _toeplitz(rho: float, p: int) -> np.ndarray:
    i = np.arange(p)
    return rho ** np.abs(i[:, None] - i[None, :])


@dataclass(frozen=True, eq=False)
class CovarianceFactor:
    """Sampling factor for ``N_p(0, Sigma)``; ``L`` is a Cholesky factor, or
    ``None`` for the equicorrelated design, which uses a one-factor shortcut."""

    design: str
    p: int
    L: np.ndarray | None

    def sample(self, n: int, rng) -> np.ndarray:
        gen = as_generator(rng)
        if self.L is None:
            z = gen.standard_normal((n, 1))
            w = gen.standard_normal((n, self.p))
            return math.sqrt(EQUICORR_RHO) * z + math.sqrt(1.0 - EQUICORR_RHO) * w
        return gen.standard_normal((n, self.p)) @ self.L.T

    def covariance(self) -> np.ndarray:
        if self.L is None:
            S = np.full((self.p, self.p), EQUICORR_RHO)
            np.fill_diagonal(S, 1.0)
            return S
        return self.L @ self.L.T


@lru_cache(maxsize=16)
def build_covariance(design: str, p: int) -> CovarianceFactor:
    if p < 1:
        raise DomainError("p must be positive")
    if design == "toeplitz":
        return CovarianceFactor(design, p, np.linalg.cholesky(_toeplitz(TOEPLITZ_RHO, p)))
    if design == "expdecay":
        sigma = np.linalg.inv(_toeplitz(EXPDECAY_RHO, p))
        sigma = 0.5 * (sigma + sigma.T)
        return CovarianceFactor(design, p, np.linalg.cholesky(sigma))
    if design == "equicorr":
        return CovarianceFactor(design, p, None)
    raise DomainError(f"unknown design {design!r}; choose from {DESIGNS}")


def normalize_columns(X: np.ndarray) -> np.ndarray:
    """Rescale every column to squared norm ``n``."""
    n = X.shape[0]
    return X * (math.sqrt(n) / np.linalg.norm(X, axis=0))


def sample_beta(p: int, s: int, b: float, mode: str, rng) -> np.ndarray:
    """``s``-sparse coefficients on a uniformly random support.

    ``uniform``: all non-zeros ``U(-b, b)``; ``mixed``: ``ceil(s/2)`` of them
    ``U(-b, b)`` and the rest ``U(-0.2, 0.2)``.
    """
    if mode not in BETA_MODES:
        raise DomainError(f"unknown beta mode {mode!r}")
    if not 0 <= s <= p:
        raise DomainError("need 0 <= s <= p")
    gen = as_generator(rng)
    beta = np.zeros(p)
    support = gen.permutation(p)[:s]
    strong = s if mode == "uniform" else (s + 1) // 2
    beta[support[:strong]] = gen.uniform(-b, b, size=strong)
    beta[support[strong:]] = gen.uniform(-WEAK_BOUND, WEAK_BOUND, size=s - strong)
    return beta


def sample_dataset(config, rng):
    """Draw ``(data, data_prime, beta)``: two independent halves sharing ``beta``.

    Draw order is fixed (X, X', beta, y noise, y' noise) so a stream fully
    determines the replicate.
    """
    gen = as_generator(rng)
    factor = build_covariance(config.design, config.p)
    X = normalize_columns(factor.sample(config.n, gen))
    Xp = normalize_columns(factor.sample(config.n, gen))
    beta = sample_beta(config.p, config.s, config.b, config.beta_mode, gen)
    sd = math.sqrt(config.sigma2)
    y = X @ beta + sd * gen.standard_normal(config.n)
    yp = Xp @ beta + sd * gen.standard_normal(config.n)
    return Dataset(X, y, config.sigma2), Dataset(Xp, yp, config.sigma2), beta
