import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize, stats

from honestsets import competitors, confset, solvers
from honestsets.confset import CandidateSet
from honestsets.dataset import Dataset
from honestsets.errors import CalibrationError, DegenerateInputError, DomainError
from honestsets.numkit import RngStream


def _halves(n=100, p=150, s=5, b=2.0, seed=0):
    rng = np.random.default_rng(seed)
    beta = np.zeros(p)
    beta[:s] = rng.uniform(-b, b, s)
    out = []
    for _ in range(2):
        X = rng.standard_normal((n, p))
        out.append(Dataset(X, X @ beta + rng.standard_normal(n), 1.0))
    return out[0], out[1], beta


# --- adaptive ball ----------------------------------------------------------------

def test_adaptive_radius_bisection_oracle():
    R, n, alpha = 0.0, 100, 0.05
    z = stats.norm.ppf(1 - alpha)
    # largest d with statistic = -z
    root = optimize.brentq(lambda d: competitors.adaptive_statistic(d, R, 1.0, n) + z, R + 1e-9, 10.0,
                           xtol=1e-14)
    r2 = competitors.adaptive_radius_sq(R, 1.0, n, alpha)
    assert r2 == pytest.approx(root, abs=1e-10)
    # 2 z^2 / n = 0.0541109 gives 0.0541109 + sqrt(0.0029280 + 0.0541109)
    assert r2 == pytest.approx(0.292939, abs=1e-6)


@given(st.floats(-0.5, 5.0), st.integers(20, 2000), st.sampled_from([0.01, 0.05, 0.1]))
def test_adaptive_boundary_statistic(R, n, alpha):
    r2 = competitors.adaptive_radius_sq(R, 1.0, n, alpha)
    z = stats.norm.ppf(1 - alpha)
    assert competitors.adaptive_statistic(r2, R, 1.0, n) == pytest.approx(-z, abs=1e-8)


def test_adaptive_center_is_member():
    hits = 0
    for seed in range(50):
        fit, ev, beta = _halves(seed=seed)
        ball = competitors.adaptive_cs(fit, ev, solvers.LambdaRule("theoretical"), 0.05)
        hits += confset.contains(ball, ball.center)
        assert ball.center == pytest.approx(ev.X @ solvers.lasso(
            fit.X, fit.y, solvers.theoretical_lambda(1.0, 100, 150)).coefficients)
    assert hits == 50


def test_adaptive_dense_coverage():
    reps, alpha = 300, 0.05
    rng = np.random.default_rng(2)
    n, p = 100, 150
    beta = rng.uniform(-0.3, 0.3, p)
    hits = 0
    lam = 0.3
    for _ in range(reps):
        X1, X2 = rng.standard_normal((n, p)), rng.standard_normal((n, p))
        fit = Dataset(X1, X1 @ beta + rng.standard_normal(n), 1.0)
        ev = Dataset(X2, X2 @ beta + rng.standard_normal(n), 1.0)
        ball = competitors.adaptive_cs(fit, ev, None, alpha, lam=lam)
        hits += confset.contains(ball, X2 @ beta)
    assert hits / reps >= 1 - alpha - 3 * math.sqrt(alpha * (1 - alpha) / reps)


def test_adaptive_domain():
    with pytest.raises(DomainError):
        competitors.adaptive_radius_sq(0.0, 1.0, 100, 0.6)


# --- oracle lasso -------------------------------------------------------------------

def test_oracle_radius_formula():
    assert competitors.oracle_radius_sq(4, 1.0, 10, 800, 400) == pytest.approx(0.668461, abs=1e-6)


def test_oracle_ball_radius_independent_of_y():
    fit, ev, _ = _halves()
    full = Dataset.stack(fit, ev)
    a = competitors.oracle_lasso_cs(full, 5, None, 0.05, 2.0, lam=0.2)
    b = competitors.oracle_lasso_cs(Dataset(full.X, -full.y, 1.0), 5, None, 0.05, 2.0, lam=0.2)
    assert a.radius == b.radius


def test_oracle_zero_sparsity_warns():
    fit, ev, _ = _halves()
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        ball = competitors.oracle_lasso_cs(fit, 0, None, 0.05, 2.0, lam=0.2)
    assert ball.radius == 0.0 and w


class _ZeroGen:
    """Generator stub: zero noise and zero signal draws."""

    def permutation(self, p):
        return np.arange(p)

    def uniform(self, lo, hi, size):
        return np.zeros(size)

    def standard_normal(self, size):
        return np.zeros(size)


def test_calibrate_c_o_degenerate_stub():
    X = np.random.default_rng(0).standard_normal((30, 40))
    c = competitors.calibrate_c_o(X, 0.1, 3, 0.05, 200, _ZeroGen(), 1.0)
    assert c.value == 0.0 and c.kind == "c_o"


def test_calibrate_c_o_monotone_in_alpha():
    X = np.random.default_rng(0).standard_normal((40, 60))
    a = competitors.calibrate_c_o(X, 0.3, 3, 0.05, 200, RngStream(1, 1), 1.0)
    b = competitors.calibrate_c_o(X, 0.3, 3, 0.2, 200, RngStream(1, 1), 1.0)
    assert a.value >= b.value
    assert a.context[0] == competitors.design_digest(X)


def test_calibration_errors():
    X = np.random.default_rng(0).standard_normal((20, 30))
    with pytest.raises(CalibrationError):
        competitors.calibrate_c_o(X, 0.3, 3, 0.05, 50, RngStream(1, 1), 1.0)
    with pytest.raises(CalibrationError):
        competitors.calibrate_c_o(X, 0.3, 3, 0.05, 200, RngStream(1, 1), 0.0)
    with pytest.raises(CalibrationError):
        competitors.estimate_cl(X, X, np.zeros(20), 3, 0.3, 0.05, 200, RngStream(1, 1))


def test_signal_bound():
    X = np.eye(3) * 2.0
    y = np.array([2.0, -8.0, 0.0])
    assert competitors.signal_bound(X, y) == pytest.approx(4.0)


def test_choose_eta():
    q = np.linspace(0.0, 1.0, 101)
    assert competitors.choose_eta(q, 0.05, (0.5, 0.95, 2.0)) == 0.95
    # both 0.4 and 0.6 are 0.1 away from 0.5; ties go to the larger
    assert competitors.choose_eta(np.array([0.5, 1.5]), 0.5, (0.4, 2.0)) == 2.0
    # a plateau of full coverage resolves to its smallest factor, not the grid end
    q = np.r_[np.full(9, 0.1), 0.4]
    assert competitors.choose_eta(q, 0.05, competitors.ETA_GRID) == 0.5
    with pytest.raises(CalibrationError):
        competitors.choose_eta([], 0.05)


# --- two-step lasso ------------------------------------------------------------------

def test_lambda_two_step():
    lam = competitors.lambda_two_step(competitors.DEFAULT_K, 0.5, 1.0, 800, 200, 4)
    assert lam == pytest.approx(0.5 * (2 * math.sqrt(2) + 0.01) * math.sqrt(math.log(796) / 196))
    assert competitors.lambda_two_step(1.0, 1.0, 4.0, 100, 50, sigma_power=1) == \
        pytest.approx(2.0 * math.sqrt(math.log(100) / 50))
    with pytest.raises(DomainError):
        competitors.lambda_two_step(1.0, 1.0, 1.0, 100, 50, sigma_power=3)


def test_two_step_lasso_radius_formula():
    rng = np.random.default_rng(0)
    n, p = 200, 800
    X = rng.standard_normal((n, p))
    data = Dataset(X, rng.standard_normal(n), 1.0)
    cand = CandidateSet.from_indices(X, [0, 1, 2, 3])
    cs = competitors.build_two_step_lasso(data, cand, 10, 0.05, "volume", 3.0)
    assert cs.r_perp_sq == pytest.approx(cs.c2 * 3 * 6 * math.log(796) / 200)
    assert 2 * 3 * 6 * math.log(796) / 200 == pytest.approx(1.20233, abs=1e-5)
    with pytest.raises(DegenerateInputError):
        competitors.build_two_step_lasso(data, CandidateSet.from_indices(X, range(10)), 10, 0.05,
                                         "volume", 3.0)


@pytest.mark.parametrize("k", [0, 3])
def test_projected_lasso_identity(k):
    rng = np.random.default_rng(k)
    n, p = 60, 90
    X = rng.standard_normal((n, p))
    y = X[:, :5] @ np.full(5, 1.5) + rng.standard_normal(n)
    cand = CandidateSet.from_indices(X, range(k))
    full = competitors.projected_lasso(X, y, cand.basis, 0.15, tol=1e-12)
    red = competitors.projected_lasso(X, y, cand.basis, 0.15, reduced=True, tol=1e-12)
    assert np.all(full[:k] == 0)
    assert np.allclose(full, red, atol=1e-6)


def test_trim_candidate():
    coefs = np.array([0.1, -3.0, 2.0, 0.5, 2.0])
    assert competitors.trim_candidate((0, 1, 2, 3, 4), coefs, 3) == (1, 2)
    assert competitors.trim_candidate((0, 3), coefs, 5) == (0, 3)
    assert competitors.trim_candidate((0, 3), coefs, 1) == ()


@given(st.lists(st.floats(-4, 4), min_size=3, max_size=40), st.integers(1, 12))
def test_two_step_lasso_candidates_bounded(coefs, s):
    for idx in competitors.two_step_lasso_candidates(np.array(coefs), 0.2, s):
        assert len(idx) <= s - 1


def test_two_step_lasso_cs_runs_and_covers_center():
    fit, ev, beta = _halves(n=120, p=100, s=4, b=3.0, seed=3)
    cs = competitors.two_step_lasso_cs(fit, ev, 4, 0.05, "volume", None, lambda k: 2.0, lam=0.2)
    assert cs.k <= 3
    assert confset.contains(cs, cs.center)
    with pytest.raises(CalibrationError):
        competitors.two_step_lasso_cs(fit, ev, 4, 0.05, "volume", None, None, lam=0.2)


def test_estimate_cl_noiseless_stub():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((80, 20))
    c = competitors.estimate_cl(X, X, X[:, 0] * 2, 2, 0.1, 0.05, 200, _ZeroGen())
    assert c.value == 0.0 and c.kind == "c_l"


def test_estimate_cl_monotone_in_alpha():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((60, 40))
    y = X[:, 0] * 2 + rng.standard_normal(60)
    a = competitors.estimate_cl(X, X, y, 2, 0.2, 0.025, 200, RngStream(3, 3))
    b = competitors.estimate_cl(X, X, y, 2, 0.2, 0.1, 200, RngStream(3, 3))
    assert a.value >= b.value


def test_two_step_lasso_error_bound():
    # A inside supp(beta) fixed; c_l calibrated at level alpha on the step-2 design
    n, p, s, k, alpha, reps = 100, 150, 5, 2, 0.1, 300
    rng = np.random.default_rng(9)
    X = rng.standard_normal((n, p))
    Xh = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:s] = rng.uniform(-2, 2, s)
    yh = Xh @ beta + rng.standard_normal(n)
    cand = CandidateSet.from_indices(X, range(k))
    rest = np.arange(k, p)
    X2 = competitors.projected_design(X[:, rest], cand.basis)
    lam = competitors.lambda_two_step(competitors.DEFAULT_K, 0.5, 1.0, p, n, k)
    c_l = competitors.estimate_cl(X2, Xh, yh, s - k, lam, alpha, 300, RngStream(5, 5)).value
    bound = c_l * (s - k) * math.log(p - k)
    Xp = competitors.projected_design(X, cand.basis)
    exceed = 0
    for _ in range(reps):
        y = X @ beta + rng.standard_normal(n)
        bt = solvers.lasso(Xp, y - cand.basis.project(y), lam).coefficients
        d = Xp @ (bt - beta)
        exceed += d @ d > bound
    assert exceed / reps <= alpha + 3 * math.sqrt(alpha * (1 - alpha) / reps)
