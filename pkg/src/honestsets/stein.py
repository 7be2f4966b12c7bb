"""Stein shrinkage of the complement response, truncated SURE and the weak-signal radius.

With ``k = rank(X_A)`` and ``y_perp`` the projection of ``y`` onto the
orthogonal complement of span(X_A), the estimate is ``(1 - B) y_perp`` with
``B = (n - k) sigma^2 / ||y_perp||^2`` and its risk estimate is
``sigma^2 (1 - B)_+``.  The deviation constant ``c_s(alpha)`` is calibrated by
simulating the same statistic under ``mu = 0``, where it only depends on a
chi-square draw.
"""
from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import CalibrationError, DomainError
from .numkit import RngStream, as_generator

DEFAULT_NSIM = 100_000
GOLDEN_NSIM = 1_000_000
CS_SEED = 20_190_611


@dataclass(frozen=True)
class SteinFit:
    B: float
    L_hat: float
    mu_perp_hat: np.ndarray
    df: int

    @property
    def sure_untruncated(self) -> float:
        return 1.0 - self.B


@dataclass(frozen=True)
class SureConstant:
    alpha: float
    value: float
    n: int
    n_sim: int


def stein_shrink(y_perp, df: int, sigma2: float) -> SteinFit:
    """Shrink ``y_perp`` toward zero by the factor ``1 - B``."""
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    if df < 1:
        raise DomainError("need at least one complement dimension")
    y_perp = np.asarray(y_perp, dtype=float)
    norm2 = float(y_perp @ y_perp)
    if norm2 == 0.0:
        return SteinFit(math.inf, 0.0, np.zeros_like(y_perp), int(df))
    B = df * sigma2 / norm2
    return SteinFit(B, max(0.0, 1.0 - B), (1.0 - B) * y_perp, int(df))


def cs_statistic(w: np.ndarray, n: int) -> np.ndarray:
    """``sqrt(n) |L - ||mu||^2 / (n sigma^2)|`` as a function of ``W = ||Y||^2 / sigma^2 ~ chi2_n``."""
    w = np.asarray(w, dtype=float)
    shrink = 1.0 - n / w
    return math.sqrt(n) * np.abs(np.maximum(shrink, 0.0) - shrink * shrink * w / n)


def estimate_cs(alpha: float, n: int, n_sim: int = DEFAULT_NSIM, rng=None) -> SureConstant:
    """Monte-Carlo ``(1 - alpha)`` quantile of the SURE deviation statistic at sample size ``n``.

    ``rng`` may be any object with a ``chisquare(df, size)`` method, which lets
    tests plug in degenerate stubs.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if n < 2:
        raise DomainError("n must be at least 2")
    if n_sim < 100:
        raise CalibrationError("n_sim below 100 gives an unreliable quantile")
    gen = as_generator(RngStream(CS_SEED, n) if rng is None else rng)
    w = np.asarray(gen.chisquare(n, size=n_sim), dtype=float)
    stat = cs_statistic(w, n)
    return SureConstant(float(alpha), float(np.quantile(stat, 1.0 - alpha)), int(n), int(n_sim))


# ---------------------------------------------------------------------------
# cached constants
# ---------------------------------------------------------------------------

_CACHE: dict[tuple[int, float], SureConstant] = {}
_LOCK = threading.Lock()


def _alpha_key(alpha: float) -> float:
    return round(float(alpha), 12)


def load_golden() -> dict[tuple[int, float], SureConstant]:
    out = {}
    try:
        text = resources.files("honestsets.data").joinpath("cs_constants.csv").read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return out
    for row in csv.DictReader(text.splitlines()):
        n, a = int(row["n"]), float(row["alpha"])
        out[(n, _alpha_key(a))] = SureConstant(a, float(row["value"]), n, int(row["n_sim"]))
    return out


def get_cs(n: int, alpha: float) -> SureConstant:
    """``c_s(alpha)`` for sample size ``n``: golden value if recorded, otherwise simulated once and cached."""
    key = (int(n), _alpha_key(alpha))
    with _LOCK:
        if not _CACHE:
            _CACHE.update(load_golden())
        hit = _CACHE.get(key)
        if hit is None:
            hit = estimate_cs(alpha, n, DEFAULT_NSIM, RngStream(CS_SEED, n))
            _CACHE[key] = hit
        return hit


def write_golden(path, ns, alphas, n_sim=GOLDEN_NSIM, master_seed=CS_SEED):
    rows = []
    for n in ns:
        for a in alphas:
            c = estimate_cs(a, n, n_sim, RngStream(master_seed, n))
            rows.append((n, a, n_sim, master_seed, repr(c.value)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "alpha", "n_sim", "master_seed", "value"])
        w.writerows(rows)
    return rows


# ---------------------------------------------------------------------------
# radii
# ---------------------------------------------------------------------------

def _cs_value(cs) -> float:
    return float(cs.value if isinstance(cs, SureConstant) else cs)


def base_radius_perp_sq(L_hat: float, n: int, k: int, sigma2: float, deviation: float) -> float:
    # radius squared before the c2 inflation; deviation multiplies (n - k)^(-1/2)
    if not 0 <= k < n:
        raise DomainError("need 0 <= k < n")
    m = n - k
    return (m / n) * sigma2 * (L_hat + deviation / math.sqrt(m))


def radius_perp_single(fit: SteinFit, n: int, k: int, sigma2: float, c2: float, cs) -> float:
    """Weak-signal radius ``r_perp`` for a single candidate set."""
    if not c2 > 1:
        raise DomainError("c2 must exceed 1")
    return math.sqrt(max(0.0, c2 * base_radius_perp_sq(fit.L_hat, n, k, sigma2, _cs_value(cs))))


def radius_perp_multi(fit: SteinFit, n: int, k: int, sigma2: float, c2: float, cm: float, M: int) -> float:
    """Weak-signal radius with the ``M^(1/4)`` inflation for ``M`` simultaneous candidates."""
    if M < 1:
        raise DomainError("M must be at least 1")
    if not c2 > 1:
        raise DomainError("c2 must exceed 1")
    return math.sqrt(max(0.0, c2 * base_radius_perp_sq(fit.L_hat, n, k, sigma2, float(cm) * M ** 0.25)))
