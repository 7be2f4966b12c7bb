import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from honestsets.errors import DomainError, InvalidInputError
from honestsets.numkit import (
    RngStream,
    chi2_cdf,
    chi2_quantile,
    mean_inverse_noncentral_chi2,
    normal_cdf,
    normal_quantile,
    orthonormal_basis,
    sample_noncentral_chi2,
)


# --- random streams -------------------------------------------------------

def test_stream_reproducible():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 3).generator().standard_normal(5)
    assert np.array_equal(a, b)


def test_streams_differ_by_id_and_path():
    base = RngStream(7, 3)
    draws = [base.generator().random(), RngStream(7, 4).generator().random(),
             base.child(1).generator().random(), base.child(2).generator().random()]
    assert len(set(draws)) == 4


def test_streams_uncorrelated():
    x = RngStream(1, 10).generator().standard_normal(20000)
    y = RngStream(1, 11).generator().standard_normal(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / math.sqrt(20000)


def test_stream_rejects_negative_seed():
    with pytest.raises(DomainError):
        RngStream(-1, 0)


# --- normal ----------------------------------------------------------------

@pytest.mark.parametrize("prob,expected", [(0.5, 0.0), (0.95, 1.64485), (0.975, 1.95996)])
def test_normal_quantile_values(prob, expected):
    assert normal_quantile(prob) == pytest.approx(expected, abs=1e-5)


@pytest.mark.parametrize("prob", [1e-12, 1e-6, 0.001, 0.02, 0.3, 0.5, 0.77, 0.99, 1 - 1e-9])
def test_normal_quantile_matches_scipy(prob):
    assert normal_quantile(prob) == pytest.approx(stats.norm.ppf(prob), rel=1e-12, abs=1e-12)


@given(st.floats(min_value=1e-10, max_value=1 - 1e-10))
def test_normal_round_trip_and_antisymmetry(p):
    x = normal_quantile(p)
    assert normal_cdf(x) == pytest.approx(p, abs=1e-8)
    q = 1.0 - p
    # 1 - p is rounded, so compare against the probability it actually reflects
    assert normal_quantile(q) == -normal_quantile(1.0 - q)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(bad):
    with pytest.raises(DomainError):
        normal_quantile(bad)


# --- chi-square ------------------------------------------------------------

def test_chi2_quantile_closed_forms():
    assert chi2_quantile(2, 0.95) == pytest.approx(-2 * math.log(0.05), abs=1e-9)
    assert chi2_quantile(1, 0.95) == pytest.approx(normal_quantile(0.975) ** 2, abs=1e-9)


def _incomplete_gamma_series_oracle(a, x, terms=2000):
    # independent evaluation by the confluent series P(a,x) = x^a e^-x sum x^j / Gamma(a+j+1)
    total = 0.0
    for j in range(terms):
        total += math.exp(j * math.log(x) - math.lgamma(a + j + 1)) if x > 0 else 0.0
    return math.exp(a * math.log(x) - x) * total


def test_chi2_quantile_df5_against_series_oracle():
    q = chi2_quantile(5, 0.975)
    assert q == pytest.approx(12.8325, abs=5e-5)
    assert _incomplete_gamma_series_oracle(2.5, q / 2) == pytest.approx(0.975, abs=1e-10)


@pytest.mark.parametrize("df", [1, 2, 3, 7, 10, 50, 199, 200, 400])
@pytest.mark.parametrize("prob", [0.005, 0.025, 0.05, 0.5, 0.95, 0.975, 0.995])
def test_chi2_round_trip(df, prob):
    q = chi2_quantile(df, prob)
    assert chi2_cdf(q, df) == pytest.approx(prob, abs=1e-8)
    assert q == pytest.approx(stats.chi2.ppf(prob, df), rel=1e-9)


def test_chi2_cdf_matches_scipy():
    for df in (1, 4, 33, 400):
        for x in (0.01, 0.5 * df, df, 2.0 * df + 10):
            assert chi2_cdf(x, df) == pytest.approx(special.gammainc(df / 2, x / 2), abs=1e-13)


def test_chi2_quantile_strictly_increasing():
    probs = np.linspace(0.01, 0.99, 60)
    qs = [chi2_quantile(12, float(p)) for p in probs]
    assert np.all(np.diff(qs) > 0)


def test_chi2_quantile_naive_reference():
    assert chi2_quantile(200, 0.95) == pytest.approx(233.994, abs=1e-3)


def test_chi2_quantile_domain():
    with pytest.raises(DomainError):
        chi2_quantile(0, 0.5)
    with pytest.raises(DomainError):
        chi2_quantile(3, 1.0)


# --- noncentral chi-square ---------------------------------------------------

def test_noncentral_zero_is_central():
    a = sample_noncentral_chi2(6, 0.0, RngStream(3, 0), size=200000)
    assert a.mean() == pytest.approx(6.0, abs=0.05)
    assert a.var() == pytest.approx(12.0, abs=0.3)


def test_noncentral_moments():
    x = sample_noncentral_chi2(10, 4.0, RngStream(5, 1), size=1_000_000)
    assert x.mean() == pytest.approx(14.0, abs=0.02)
    assert x.var() == pytest.approx(36.0, abs=0.5)


def test_noncentral_scalar_draw():
    v = sample_noncentral_chi2(3, 1.0, RngStream(5, 2))
    assert np.ndim(v) == 0 and v > 0


@pytest.mark.parametrize("df,expected", [(10, 1.25), (100, 100 / 98)])
def test_mean_inverse_central(df, expected):
    est = mean_inverse_noncentral_chi2(df, 0.0, 400_000, RngStream(11, df))
    assert abs(est.value - expected) < 4 * est.stderr


def test_mean_inverse_decreases_in_rho():
    vals = [mean_inverse_noncentral_chi2(20, rho, 100_000, RngStream(2, 0)).value
            for rho in (0.0, 5.0, 20.0, 80.0, 320.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.1


def test_mean_inverse_domain():
    with pytest.raises(DomainError):
        mean_inverse_noncentral_chi2(2, 0.0, 10_000, RngStream(0, 0))
    with pytest.raises(DomainError):
        mean_inverse_noncentral_chi2(10, 0.0, 100, RngStream(0, 0))


@pytest.mark.parametrize("df", [50, 200])
@pytest.mark.parametrize("delta", [1.0, 2.0, 3.0])
def test_chi2_concentration_tail(df, delta):
    w = RngStream(99, df).generator().chisquare(df, size=100_000)
    freq = np.mean(math.sqrt(df) * np.abs(1 - w / df) >= delta)
    se = math.sqrt(max(freq * (1 - freq), 1e-12) / w.size)
    assert freq <= 2 * math.exp(-delta ** 2 / 4) + 3 * se


# --- bases and projections -------------------------------------------------

def test_empty_basis():
    b = orthonormal_basis(np.zeros((5, 0)))
    assert b.k == 0 and b.Q.shape == (5, 0)
    v = np.arange(5.0)
    assert np.array_equal(b.complement(v), v)


def test_unit_column_basis():
    e1 = np.zeros((4, 1))
    e1[0] = 1.0
    b = orthonormal_basis(e1)
    assert b.k == 1
    assert np.allclose(np.abs(b.Q[:, 0]), e1[:, 0])


def test_collinear_columns():
    v = np.random.default_rng(0).standard_normal(8)
    assert orthonormal_basis(np.column_stack([v, 2 * v])).k == 1


def test_nonfinite_rejected():
    X = np.ones((3, 2))
    X[1, 1] = np.nan
    with pytest.raises(InvalidInputError):
        orthonormal_basis(X)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=30), st.integers(min_value=0, max_value=12),
       st.integers(min_value=0, max_value=2**32 - 1))
def test_projection_properties(n, m, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    b = orthonormal_basis(X)
    assert b.k <= min(n, m)
    assert np.allclose(b.Q.T @ b.Q, np.eye(b.k), atol=1e-10)
    v = rng.standard_normal(n)
    pv = b.project(v)
    assert np.allclose(b.project(pv), pv, atol=1e-8)
    assert v @ v == pytest.approx(pv @ pv + b.complement(v) @ b.complement(v), abs=1e-8 * max(1, v @ v))
    if b.k:
        # columns of X lie in the span
        assert np.allclose(b.complement(X[:, 0]), 0.0, atol=1e-8 * max(1.0, np.linalg.norm(X[:, 0])))
