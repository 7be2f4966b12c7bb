import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from honestsets import _backend, solvers
from honestsets._cd_fallback import _coordinate
from honestsets.errors import CalibrationError, DomainError, InvalidInputError
from honestsets.numkit import RngStream


def _problem(n, p, seed, s=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:s] = rng.uniform(-2, 2, s)
    return X, X @ beta + rng.standard_normal(n)


def _fista(X, y, lam, iters=20000):
    # proximal-gradient oracle for the same objective
    n = X.shape[0]
    L = np.linalg.norm(X, 2) ** 2 / n
    b = np.zeros(X.shape[1])
    z, t = b.copy(), 1.0
    for _ in range(iters):
        g = z - X.T @ (X @ z - y) / (n * L)
        bn = np.sign(g) * np.maximum(np.abs(g) - lam / L, 0.0)
        tn = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = bn + (t - 1) / tn * (bn - b)
        b, t = bn, tn
    return b


def _orthogonal_column(n, z):
    x = np.ones(n)
    return x[:, None], z * x


# --- lasso ------------------------------------------------------------------

def test_soft_threshold():
    X, y = _orthogonal_column(50, 1.0)
    fit = solvers.lasso(X, y, 0.3)
    assert fit.coefficients[0] == pytest.approx(0.7, abs=1e-12)
    assert fit.converged


def test_null_fit_at_lambda_max():
    X, y = _problem(40, 15, 1)
    lam = solvers.lambda_max(X, y)
    assert np.all(solvers.lasso(X, y, lam).coefficients == 0)
    assert np.all(solvers.lasso(X, y, 1.5 * lam).coefficients == 0)
    assert np.any(solvers.lasso(X, y, 0.99 * lam).coefficients != 0)


@pytest.mark.parametrize("seed", range(5))
def test_lasso_matches_proximal_oracle(seed):
    X, y = _problem(20, 5, seed)
    fit = solvers.lasso(X, y, 0.1, tol=1e-12)
    ref = _fista(X, y, 0.1)
    assert np.allclose(fit.coefficients, ref, atol=1e-5)
    gap = solvers.objective(X, y, fit.coefficients, 0.1) - solvers.objective(X, y, ref, 0.1)
    assert abs(gap) < 1e-8


def _kkt(X, y, beta, lam):
    grad = X.T @ (y - X @ beta) / X.shape[0]
    nz = beta != 0
    return np.max(np.abs(np.abs(grad[nz]) - lam), initial=0.0), np.max(np.abs(grad[~nz]), initial=0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(10, 60), st.integers(2, 120), st.floats(0.02, 0.8), st.integers(0, 10**6))
def test_lasso_kkt(n, p, frac, seed):
    X, y = _problem(n, p, seed, s=min(3, p))
    lam = frac * solvers.lambda_max(X, y)
    fit = solvers.lasso(X, y, lam)
    on, off = _kkt(X, y, fit.coefficients, lam)
    assert on <= 1e-6
    assert off <= lam + 1e-6
    assert np.all(np.diff(fit.objective_trace) <= 1e-12)


def test_least_squares_limit():
    X, y = _problem(60, 8, 3)
    fit = solvers.lasso(X, y, 1e-8, tol=1e-12)
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    assert np.allclose(fit.coefficients, ols, atol=1e-4)


def test_sweep_cap_reports_nonconvergence():
    X, y = _problem(50, 30, 4, s=10)
    X[:, 1] = X[:, 0] + 0.01 * X[:, 1]
    fit = solvers.lasso(X, y, 0.001, max_sweeps=2)
    assert not fit.converged
    assert fit.n_sweeps <= 2


def test_lasso_rejects_bad_input():
    X, y = _problem(10, 4, 0)
    X[0, 0] = np.inf
    with pytest.raises(InvalidInputError):
        solvers.lasso(X, y, 0.1)
    with pytest.raises(DomainError):
        solvers.lasso(np.ones((3, 2)), np.ones(3), 0.0)


def test_deterministic():
    X, y = _problem(40, 60, 8)
    a = solvers.lasso(X, y, 0.1).coefficients
    b = solvers.lasso(X, y, 0.1).coefficients
    assert np.array_equal(a, b)


# --- MCP --------------------------------------------------------------------

def _mcp_1d_grid(z, lam, gamma):
    t = np.linspace(-3, 3, 600001)
    a = np.abs(t)
    pen = np.where(a <= gamma * lam, lam * a - t * t / (2 * gamma), 0.5 * gamma * lam * lam)
    return t[np.argmin(0.5 * t * t - z * t + pen)]


@pytest.mark.parametrize("z,expected", [(1.0, 1.0), (0.5, 0.3), (0.25, 0.0), (-0.5, -0.3)])
def test_mcp_orthogonal(z, expected):
    X, y = _orthogonal_column(40, z)
    fit = solvers.mcp(X, y, 0.3, gamma=3.0)
    assert fit.coefficients[0] == pytest.approx(expected, abs=1e-10)
    assert _mcp_1d_grid(z, 0.3, 3.0) == pytest.approx(expected, abs=1e-4)


def test_mcp_gamma_domain():
    X, y = _orthogonal_column(10, 1.0)
    with pytest.raises(DomainError):
        solvers.mcp(X, y, 0.3, gamma=1.0)


@pytest.mark.parametrize("seed", range(4))
def test_mcp_stationary_and_not_worse_than_warm_start(seed):
    X, y = _problem(50, 80, seed, s=4)
    lam, gamma = 0.15, 3.0
    warm = solvers.lasso(X, y, lam).coefficients
    fit = solvers.mcp(X, y, lam, gamma)
    assert solvers.objective(X, y, fit.coefficients, lam, gamma) <= \
        solvers.objective(X, y, warm, lam, gamma) + 1e-12
    n = X.shape[0]
    b = fit.coefficients
    r = y - X @ b
    for j in range(X.shape[1]):
        v = X[:, j] @ X[:, j] / n
        z = X[:, j] @ r / n + v * b[j]
        assert _coordinate(z, v, lam, gamma) == pytest.approx(b[j], abs=1e-6)


def test_mcp_large_gamma_is_lasso():
    X, y = _problem(40, 30, 5)
    a = solvers.lasso(X, y, 0.2, tol=1e-10).coefficients
    b = solvers.mcp(X, y, 0.2, gamma=1e6, tol=1e-10).coefficients
    assert np.allclose(a, b, atol=1e-5)


# --- tuning -----------------------------------------------------------------

def test_theoretical_lambda():
    # 2 sqrt(2) sqrt(6.684612 / 200) evaluates to 0.517092, not the 0.51681 sometimes quoted
    assert solvers.select_lambda(np.zeros((200, 800)), np.zeros(200), 1.0, "val") == \
        pytest.approx(0.517092, abs=1e-5)


def test_lambda_rule_parse():
    assert solvers.LambdaRule.parse("1se").kind == "cv_1se"
    assert solvers.LambdaRule.parse("CV").short == "cv"
    with pytest.raises(DomainError):
        solvers.LambdaRule.parse("aic")
    with pytest.raises(DomainError):
        solvers.LambdaRule("cv_min", folds=1)


@pytest.mark.parametrize("seed", range(3))
def test_one_se_not_below_min(seed):
    X, y = _problem(80, 40, seed)
    cv = solvers.cross_validate(X, y, RngStream(seed, 0))
    assert cv.lambda_1se >= cv.lambda_min
    assert cv.lambdas[0] == pytest.approx(solvers.lambda_max(X, y))
    assert len(cv.lambdas) == 100
    assert cv.lambdas[-1] == pytest.approx(1e-3 * cv.lambdas[0])


def test_pure_noise_one_se_is_empty():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((100, 50))
    y = rng.standard_normal(100)
    lam = solvers.select_lambda(X, y, 1.0, solvers.LambdaRule("cv_1se"), RngStream(1, 2))
    cv = solvers.cross_validate(X, y, RngStream(1, 2))
    assert lam >= cv.lambdas[10]
    assert solvers.lasso(X, y, lam).support.size <= 1


def test_cv_fold_assignment_follows_stream():
    X, y = _problem(60, 30, 2)
    a = solvers.cross_validate(X, y, RngStream(5, 5))
    b = solvers.cross_validate(X, y, RngStream(5, 5))
    assert np.array_equal(a.mean_error, b.mean_error)


def test_cv_degenerate_inputs():
    X, _ = _problem(30, 5, 0)
    with pytest.raises(CalibrationError):
        solvers.cross_validate(X, np.full(30, 2.0), RngStream(0, 0))
    with pytest.raises(CalibrationError):
        solvers.cross_validate(X[:5], np.arange(5.0), RngStream(0, 0))


def test_threshold_support():
    b = np.array([0.5, -0.01, 0.0])
    assert solvers.threshold_support(b, 0.1).tolist() == [0]
    assert solvers.threshold_support(b, 0.0).tolist() == [0, 1]
    assert solvers.threshold_support(b, 0.5).tolist() == []
    with pytest.raises(DomainError):
        solvers.threshold_support(b, -1.0)


# --- kernels ----------------------------------------------------------------

def _has_ext():
    try:
        _backend.load("cython")
        return True
    except ImportError:
        return False


@pytest.mark.skipif(not _has_ext(), reason="compiled kernel not built")
@pytest.mark.parametrize("gamma", [None, 3.0, 1.5])
@pytest.mark.parametrize("seed", range(3))
def test_kernels_bitwise_identical(gamma, seed):
    X, y = _problem(60, 120, seed, s=5)
    out = []
    for name in ("cython", "python"):
        beta = solvers.lasso(X, y, 0.1).coefficients if gamma else None
        fit = solvers._coordinate_descent(X, y, 0.1, gamma, 1e-9, 10**5, beta,
                                          kernel=_backend.load(name))
        out.append(fit)
    assert np.array_equal(out[0].coefficients, out[1].coefficients)
    assert out[0].n_sweeps == out[1].n_sweeps


def test_backend_name():
    assert _backend.BACKEND in ("cython", "python")
