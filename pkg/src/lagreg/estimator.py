"""Hard-thresholding Laguerre estimator of ``h = f**2``.

Each coefficient is estimated by the sample mean of the centered summand

    eta_i = y_i**2 * phi_l(t_i) / g(t_i) - sigma**2 * int_0^b phi_l

For i.i.d. errors summands larger than ``sqrt(N / ln N)`` in absolute value
are dropped (the mean still divides by N).  Under long memory the plain
mean is used.  Coefficients are kept only when they strictly exceed a
level-independent threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import DEFAULT_ORDER, LaguerreCoeffs, basis_integrals, laguerre_iter, make_grid, reconstruct
from .model import RegressionSample


class Regime(str, enum.Enum):
    IID = "iid"
    LM = "lm"


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning of the estimator.

    ``gamma1``/``gamma2`` default to ``gamma``.  ``lambda_override`` replaces
    the threshold rule (used to disable thresholding).
    """

    regime: Regime = Regime.IID
    gamma: float = 1.0
    sigma: float = 0.5
    alpha1: float = 1.0
    alpha2: float = 1.0
    m_cap: int = 1024
    clamp_nonnegative: bool = False
    gamma1: float | None = None
    gamma2: float | None = None
    grid_order: int = DEFAULT_ORDER
    lambda_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        for name in ("gamma", "gamma1", "gamma2"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        for name in ("alpha1", "alpha2"):
            a = getattr(self, name)
            if not 0.0 < a <= 1.0:
                raise ValueError(f"{name} must lie in (0,1], got {a}")
        if self.m_cap < 1:
            raise ValueError(f"m_cap must be positive, got {self.m_cap}")

    @property
    def min_alpha(self) -> float:
        return 1.0 if self.regime is Regime.IID else min(self.alpha1, self.alpha2)

    @property
    def strong_memory(self) -> bool:
        """True in the long-memory branch where rates depend on alpha."""
        return self.min_alpha < 0.5

    @property
    def uses_truncated_mean(self) -> bool:
        """Whether coefficients use the i.i.d. estimator with the summand cutoff.

        Long memory with both alphas equal to 1 is white noise and collapses
        to the i.i.d. pipeline.
        """
        return self.min_alpha == 1.0


def threshold(cfg: EstimatorConfig, n: int) -> float:
    if cfg.lambda_override is not None:
        return float(cfg.lambda_override)
    if n < 2:
        raise ValueError(f"threshold needs n >= 2, got {n}")
    log_n = math.log(n)
    if not cfg.strong_memory:
        return cfg.gamma * math.sqrt(log_n / n)
    g1 = cfg.gamma1 if cfg.gamma1 is not None else cfg.gamma
    g2 = cfg.gamma2 if cfg.gamma2 is not None else cfg.gamma
    return max(g1 * log_n / n**cfg.alpha1, g2 * log_n / n**cfg.alpha2)


def truncation_level(cfg: EstimatorConfig, n: int) -> int:
    if n < 2:
        raise ValueError(f"truncation level needs n >= 2, got {n}")
    if not cfg.strong_memory:
        m = n
    else:
        m = math.floor(n ** (2 * cfg.min_alpha))
    return max(1, min(m, cfg.m_cap))


def summand_cutoff(n: int) -> float:
    return math.sqrt(n / math.log(n))


def _weights(sample: RegressionSample) -> np.ndarray:
    g = sample.design_density()
    if np.any(g <= 0):
        raise ValueError("design density must be positive at every design point")
    return sample.y**2 / g


def _check_finite(summand: np.ndarray, l: int) -> None:
    bad = np.flatnonzero(~np.isfinite(summand))
    if bad.size:
        raise ValueError(f"non-finite summand for l={l} at observation i={bad[0]}")


def _coefficients(sample: RegressionSample, m: int, cfg: EstimatorConfig, truncate: bool) -> np.ndarray:
    """Estimates for ``l = 0..m-1`` in a single recurrence pass over the data."""
    n = sample.n
    w = _weights(sample)
    centers = cfg.sigma**2 * basis_integrals(m, make_grid(sample.spec.b, cfg.grid_order))
    cutoff = summand_cutoff(n) if truncate else math.inf
    out = np.empty(m)
    for l, phi in enumerate(laguerre_iter(m - 1, sample.t)):
        summand = w * phi - centers[l]
        _check_finite(summand, l)
        if truncate:
            summand = np.where(np.abs(summand) <= cutoff, summand, 0.0)
        out[l] = summand.sum() / n
    return out


def estimate_coeff_iid(sample: RegressionSample, l: int, cfg: EstimatorConfig) -> float:
    """Truncated-mean estimate of ``theta_l`` for i.i.d. errors (needs N >= 2)."""
    if sample.n < 2:
        raise ValueError(f"the i.i.d. estimator needs N >= 2, got {sample.n}")
    return float(_coefficients(sample, l + 1, cfg, truncate=True)[l])


def estimate_coeff_lm(sample: RegressionSample, l: int, cfg: EstimatorConfig) -> float:
    """Plain-mean (unbiased) estimate of ``theta_l``."""
    if sample.n < 1:
        raise ValueError("the estimator needs at least one observation")
    return float(_coefficients(sample, l + 1, cfg, truncate=False)[l])


@dataclass(frozen=True)
class ThresholdedEstimate:
    raw: LaguerreCoeffs
    kept: np.ndarray
    lam: float
    clamp_nonnegative: bool = False

    @property
    def m(self) -> int:
        return self.raw.m

    @property
    def lambdas(self) -> np.ndarray:
        return np.full(self.m, self.lam)

    @property
    def masked(self) -> np.ndarray:
        return np.where(self.kept, self.raw.theta, 0.0)

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.kept))

    def coeffs(self) -> LaguerreCoeffs:
        return LaguerreCoeffs(self.masked, self.raw.b)

    def __call__(self, t):
        """Evaluate the estimate; clamped at zero when configured."""
        value = reconstruct(self.coeffs(), t)
        return np.maximum(value, 0.0) if self.clamp_nonnegative else value


def fit(sample: RegressionSample, cfg: EstimatorConfig) -> ThresholdedEstimate:
    n = sample.n
    m = truncation_level(cfg, n)
    lam = threshold(cfg, n)
    if cfg.uses_truncated_mean and n < 2:
        raise ValueError(f"the i.i.d. estimator needs N >= 2, got {n}")
    theta = _coefficients(sample, m, cfg, truncate=cfg.uses_truncated_mean)
    raw = LaguerreCoeffs(theta, sample.spec.b)
    return ThresholdedEstimate(raw, np.abs(theta) > lam, lam, cfg.clamp_nonnegative)


def without_threshold(cfg: EstimatorConfig) -> EstimatorConfig:
    return replace(cfg, lambda_override=0.0)


def ise(estimate: ThresholdedEstimate, oracle: LaguerreCoeffs, tail: float = 0.0) -> float:
    """Squared L2[0, inf) error in coefficient space plus the oracle's tail energy.

    Exact when the oracle extends at least as far as the estimate.
    """
    est = estimate.masked
    size = max(est.size, oracle.m)
    diff = np.zeros(size)
    diff[: est.size] += est
    diff[: oracle.m] -= oracle.theta
    return float(diff @ diff + tail)
