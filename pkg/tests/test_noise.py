import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from lagreg import noise
from lagreg.experiments import fit_loglog_slope, run_autocov_check
from lagreg.noise import (
    NoiseKind,
    NoiseSpec,
    Which,
    covariance_eigen_range,
    embedding_size,
    fgn_autocov,
    gen_iid,
    gen_lm,
    gen_noise,
    sample_autocov,
)

# Fixed seed for the Monte Carlo checks against the closed-form autocovariance.
AUTOCOV_SEED = 2


def test_iid_clt_bounds():
    n = 10**5
    x = gen_iid(n, 11, 0)
    assert abs(x.mean()) <= 3 / math.sqrt(n)
    assert abs(x.var() - 1) <= 3 * math.sqrt(2 / n)


def test_distinct_streams_are_uncorrelated():
    n = 10**5
    a, b = gen_iid(n, 11, 0), gen_iid(n, 11, 1)
    assert abs(np.corrcoef(a, b)[0, 1]) <= 3 / math.sqrt(n)
    assert not np.array_equal(a, b)


def test_generators_are_deterministic():
    assert np.array_equal(gen_iid(100, 5, 3), gen_iid(100, 5, 3))
    assert np.array_equal(gen_lm(300, 0.4, 5, 3), gen_lm(300, 0.4, 5, 3))
    assert not np.array_equal(gen_lm(300, 0.4, 5, 3), gen_lm(300, 0.4, 6, 3))


def test_alpha_one_is_bit_identical_to_iid():
    assert np.array_equal(gen_lm(1000, 1.0, 9, 4), gen_iid(1000, 9, 4))


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gen_iid(0, 1, 0)
    with pytest.raises(ValueError):
        gen_lm(10, 0.0, 1, 0)
    with pytest.raises(ValueError):
        gen_lm(10, 1.5, 1, 0)
    with pytest.raises(ValueError):
        fgn_autocov(1, 1.0)


def test_fgn_autocov_values():
    getcontext().prec = 40
    exact = (Decimal(2) ** Decimal("1.6") - 2) / 2
    assert fgn_autocov(1, 0.4) == pytest.approx(float(exact), rel=1e-14)
    assert fgn_autocov(1, 0.4) == pytest.approx(0.5157166, abs=1e-7)
    assert fgn_autocov(0, 0.3) == 1.0
    assert np.array_equal(fgn_autocov(np.array([2, -2]), 0.5), np.repeat(fgn_autocov(2, 0.5), 2))


@given(st.floats(0.05, 0.95))
def test_fgn_autocov_power_law_tail(alpha):
    # gamma(h) ~ H(2H-1) h^(2H-2) = (1 - alpha/2)(1 - alpha) h^(-alpha)
    h = 1e4
    lead = (1 - alpha / 2) * (1 - alpha) * h**-alpha
    assert fgn_autocov(h, alpha) == pytest.approx(lead, rel=1e-3)


@pytest.mark.parametrize("n, size", [(2, 2), (3, 4), (5, 8), (4096, 8192), (4097, 8192), (4098, 16384)])
def test_embedding_size(n, size):
    assert embedding_size(n) == size


def test_noise_spec_invariants():
    spec = NoiseSpec(NoiseKind.IID, 0.3, 0.2, 1)
    assert (spec.alpha1, spec.alpha2) == (1.0, 1.0)
    with pytest.raises(ValueError):
        NoiseSpec(NoiseKind.LONG_MEMORY, 0.0, 0.5)
    with pytest.raises(ValueError):
        NoiseSpec(NoiseKind.LONG_MEMORY, 0.5, 1.5)
    with pytest.raises(ValueError):
        NoiseSpec(NoiseKind.IID, seed=-1)


def test_gen_noise_uses_the_matching_alpha():
    spec = NoiseSpec(NoiseKind.LONG_MEMORY, 0.3, 0.7, 4)
    assert np.array_equal(gen_noise(spec, Which.EPSILON, 200, 1).values, gen_lm(200, 0.3, 4, 1))
    assert np.array_equal(gen_noise(spec, Which.Z, 200, 1).values, gen_lm(200, 0.7, 4, 1))
    iid = NoiseSpec(NoiseKind.IID, seed=4)
    assert np.array_equal(gen_noise(iid, Which.Z, 200, 1).values, gen_iid(200, 4, 1))


def _covariance_z2(paths: np.ndarray, alpha: float) -> float:
    """Mean squared z-score of the empirical covariance entries against the fGn law."""
    r, n = paths.shape
    exact = scipy.linalg.toeplitz(fgn_autocov(np.arange(n), alpha))
    emp = paths.T @ paths / r
    # Var of x_i x_j for a centered Gaussian pair is 1 + rho_ij^2
    z = (emp - exact) / np.sqrt((1 + exact**2) / r)
    return float(np.mean(z[np.triu_indices(n)] ** 2))


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_exact_covariance_by_circulant_embedding(alpha):
    paths = np.array([gen_lm(64, alpha, 21, i) for i in range(20000)])
    assert abs(_covariance_z2(paths, alpha) - 1) < 0.15


def test_cholesky_fallback_has_the_same_law(monkeypatch):
    monkeypatch.setattr(noise, "_circulant_scale", lambda n, alpha: None)
    paths = np.array([gen_lm(64, 0.4, 22, i) for i in range(20000)])
    assert abs(_covariance_z2(paths, 0.4) - 1) < 0.15
    assert np.array_equal(gen_lm(64, 0.4, 22, 0), paths[0])


def test_autocov_at_long_path_matches_closed_form():
    check = run_autocov_check(0.4, n=2**14, paths=200, max_lag=100, seed=AUTOCOV_SEED)
    z = (check.sample[1:] - check.exact[1:]) / check.se[1:]
    assert np.max(np.abs(z)) <= 3


def test_autocov_decay_slope():
    check = run_autocov_check(0.3, n=2**12, paths=200, max_lag=100, seed=AUTOCOV_SEED)
    assert check.decay_slope == pytest.approx(-0.3, abs=0.1)


def test_stationarity_across_windows():
    n, lag, width = 4096, 5, 1024
    first, last = [], []
    for i in range(200):
        x = gen_lm(n, 0.4, 23, i)
        first.append(sample_autocov(x[:width], lag)[lag])
        last.append(sample_autocov(x[-width:], lag)[lag])
    diff = np.array(first) - np.array(last)
    assert abs(diff.mean()) <= 3 * diff.std(ddof=1) / math.sqrt(diff.size)


def test_gaussian_fourth_moment():
    per_path = np.array([np.mean(gen_lm(1024, 0.3, 24, i) ** 4) for i in range(300)])
    se = per_path.std(ddof=1) / math.sqrt(per_path.size)
    assert abs(per_path.mean() - 3) <= 3 * se


def test_sample_autocov_examples():
    x = np.array([[1.0, 2.0, 3.0]])
    assert sample_autocov(x, 2).tolist() == [14 / 3, 8 / 2, 3 / 1]


def test_eigen_range_examples():
    assert covariance_eigen_range(1, 0.4) == (1.0, 1.0)
    assert covariance_eigen_range(500, 1.0) == (1.0, 1.0)
    with pytest.raises(ValueError):
        covariance_eigen_range(10**5, 0.4)
    lo, hi = covariance_eigen_range(64, 0.4)
    assert 0 < lo < 1 < hi


def test_max_eigenvalue_growth():
    ns = [256, 512, 1024, 2048]
    peaks = [covariance_eigen_range(n, 0.4)[1] for n in ns]
    slope, _ = fit_loglog_slope(zip(ns, peaks))
    assert slope == pytest.approx(0.6, abs=0.1)
