"""Monte Carlo risk and variance studies with log-log rate fits.

Each replication is an independent task keyed by ``(n, replication)`` and
draws its randomness from ``(master_seed, replication)`` alone, so every
number is reproducible and independent of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .basis import LaguerreCoeffs, make_grid
from .estimator import (
    EstimatorConfig,
    estimate_coeff_iid,
    estimate_coeff_lm,
    fit,
    ise,
    truncation_level,
)
from .model import ModelSpec, h_coefficients, simulate

ORACLE_ORDER = 4096


class ReplicationError(RuntimeError):
    def __init__(self, n: int, replication: int, cause: BaseException):
        super().__init__(f"replication {replication} at n={n} failed: {cause}")
        self.n = n
        self.replication = replication


@dataclass(frozen=True)
class StudyPlan:
    model: ModelSpec
    cfg: EstimatorConfig
    n_grid: tuple[int, ...]
    replications: int = 100
    master_seed: int = 0
    smoothness: float | None = None
    oracle_order: int = ORACLE_ORDER
    noiseless: bool = False

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if len(grid) == 0:
            raise ValueError("n_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"n_grid must be strictly increasing, got {list(grid)}")
        if grid[0] < 64:
            raise ValueError(f"n_grid entries must be >= 64, got {grid[0]}")
        if self.replications < 30:
            raise ValueError(f"replications must be >= 30, got {self.replications}")

    def spec_at(self, n: int) -> ModelSpec:
        spec = replace(self.model, n=n)
        return replace(spec, sigma=0.0) if self.noiseless else spec

    def sample(self, n: int, replication: int):
        spec = self.spec_at(n)
        eps = np.ones(n) if self.noiseless else None
        return simulate(spec, self.master_seed, replication, epsilon=eps)


def risk_exponent(cfg: EstimatorConfig, smoothness: float | None) -> float:
    """Exponent of N in the upper-bound rate, ignoring logarithmic factors.

    ``smoothness=None`` stands for a finite expansion (the limit s -> inf).
    """
    ratio = 1.0 if smoothness is None else 2 * smoothness / (2 * smoothness + 1)
    if not cfg.strong_memory:
        return -ratio
    return -2 * cfg.min_alpha * ratio


def variance_exponent(cfg: EstimatorConfig) -> float:
    return -1.0 if not cfg.strong_memory else -2 * cfg.min_alpha


def fit_loglog_slope(points) -> tuple[float, float]:
    """OLS slope of ``log y`` on ``log x`` and its standard error."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise ValueError("x values must be positive and strictly increasing")
    if np.any(~(y > 0)):
        raise ValueError("y values must be positive")
    lx, ly = np.log(x), np.log(y)
    lx_c = lx - lx.mean()
    sxx = lx_c @ lx_c
    slope = (lx_c @ (ly - ly.mean())) / sxx
    resid = ly - ly.mean() - slope * lx_c
    dof = len(pts) - 2
    se = math.sqrt(max(resid @ resid, 0.0) / dof / sxx)
    return float(slope), float(se)


def oracle_coefficients(model: ModelSpec, level: int, order: int = ORACLE_ORDER) -> tuple[LaguerreCoeffs, float]:
    """Oracle coefficients ``theta_0..theta_{level-1}`` of ``h`` and the tail energy beyond them.

    The tail is ``||h||^2 - sum(theta**2)`` on [0, b], clipped at zero.
    """
    coeffs = h_coefficients(model, level, order)
    grid = make_grid(model.b, order)
    energy = grid.integrate(model.h(grid.nodes) ** 2)
    tail = max(energy - float(coeffs.theta @ coeffs.theta), 0.0)
    return coeffs, tail


def _run_indexed(plan: StudyPlan, task: Callable, threads: int | None):
    """Run ``task(n, r)`` for every pair; results land in indexed slots."""
    pairs = [(i, n, r) for i, n in enumerate(plan.n_grid) for r in range(plan.replications)]
    slots: list[list] = [[None] * plan.replications for _ in plan.n_grid]

    def run(item):
        i, n, r = item
        try:
            slots[i][r] = task(n, r)
        except Exception as exc:
            raise ReplicationError(n, r, exc) from exc

    if threads is None or threads <= 1:
        for item in pairs:
            run(item)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for _ in pool.map(run, pairs):
                pass
    return slots


@dataclass(frozen=True)
class RiskRow:
    n: int
    mean_risk: float
    risk_se: float
    kept_mean: float


@dataclass(frozen=True)
class RiskStudyResult:
    per_n: list[RiskRow]
    slope: float
    slope_se: float
    theoretical_exponent: float
    oracle_tail: float = 0.0
    risks: np.ndarray | None = field(default=None, repr=False, compare=False)


def run_risk_study(plan: StudyPlan, threads: int | None = None, log: Callable | None = None) -> RiskStudyResult:
    """Mean integrated squared error of the thresholded fit at each ``n``."""
    level = max(truncation_level(plan.cfg, n) for n in plan.n_grid)
    oracle, tail = oracle_coefficients(plan.model, level, plan.oracle_order)

    def task(n, r):
        est = fit(plan.sample(n, r), plan.cfg)
        return ise(est, oracle, tail), est.kept_count

    slots = _run_indexed(plan, task, threads)
    rows = []
    risks = np.empty((len(plan.n_grid), plan.replications))
    for i, n in enumerate(plan.n_grid):
        risk = np.array([s[0] for s in slots[i]])
        kept = np.array([s[1] for s in slots[i]], dtype=float)
        risks[i] = risk
        rows.append(RiskRow(n, float(risk.mean()), float(risk.std(ddof=1) / math.sqrt(risk.size)), float(kept.mean())))
        if log is not None:
            log(f"n={n} mean_risk={rows[-1].mean_risk:.6g} se={rows[-1].risk_se:.3g} kept={rows[-1].kept_mean:.2f}")
    slope, se = fit_loglog_slope([(r.n, r.mean_risk) for r in rows])
    return RiskStudyResult(rows, slope, se, risk_exponent(plan.cfg, plan.smoothness), tail, risks)


@dataclass(frozen=True)
class VarianceRow:
    n: int
    variance: float
    variance_se: float
    mean_estimate: float


@dataclass(frozen=True)
class VarianceStudyResult:
    per_n: list[VarianceRow]
    slope: float
    slope_se: float
    theoretical_exponent: float
    coefficient: int = 0
    estimates: np.ndarray | None = field(default=None, repr=False, compare=False)


def _variance_se(x: np.ndarray) -> float:
    """Standard error of the unbiased sample variance (moment formula)."""
    r = x.size
    d = x - x.mean()
    m2 = d @ d / r
    m4 = np.mean(d**4)
    return float(math.sqrt(max(m4 - (r - 3) / (r - 1) * m2**2, 0.0) / r))


def run_variance_study(plan: StudyPlan, l: int = 0, threads: int | None = None,
                       log: Callable | None = None) -> VarianceStudyResult:
    """Monte Carlo variance of the coefficient estimate for index ``l``."""
    estimator = estimate_coeff_iid if plan.cfg.uses_truncated_mean else estimate_coeff_lm

    def task(n, r):
        return estimator(plan.sample(n, r), l, plan.cfg)

    slots = _run_indexed(plan, task, threads)
    rows = []
    estimates = np.array(slots, dtype=float)
    for i, n in enumerate(plan.n_grid):
        x = estimates[i]
        rows.append(VarianceRow(n, float(np.var(x, ddof=1)), _variance_se(x), float(x.mean())))
        if log is not None:
            log(f"n={n} variance={rows[-1].variance:.6g} se={rows[-1].variance_se:.3g}")
    slope, se = fit_loglog_slope([(r.n, r.variance) for r in rows])
    return VarianceStudyResult(rows, slope, se, variance_exponent(plan.cfg), l, estimates)


def grid_ise(estimate, model: ModelSpec, order: int = ORACLE_ORDER) -> float:
    """ISE over [0, inf) by direct quadrature, as a check on the Parseval form.

    Integrates ``(h_hat - h)**2`` on [0, b] with Gauss-Legendre.  The part
    past ``b``, where ``h`` is zero, is ``int_b^inf h_hat**2 = sum(c**2) -
    int_0^b h_hat**2`` by orthonormality on [0, inf).
    """
    grid = make_grid(model.b, order)
    h_hat = estimate(grid.nodes)
    inside = grid.integrate((h_hat - model.h(grid.nodes)) ** 2)
    c = estimate.coeffs().theta
    outside = float(c @ c) - grid.integrate(h_hat**2)
    return float(inside + outside)


@dataclass(frozen=True)
class AutocovCheck:
    alpha: float
    lags: np.ndarray
    sample: np.ndarray
    se: np.ndarray
    exact: np.ndarray
    decay_slope: float | None
    decay_slope_se: float | None

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.sample - self.exact) / self.se))


def run_autocov_check(alpha: float, n: int = 4096, paths: int = 200, max_lag: int = 100,
                      seed: int = 0, decay_lags: tuple[int, int] = (10, 100)) -> AutocovCheck:
    """Pooled sample autocovariance of long-memory paths against the fGn law.

    Each path contributes one estimate per lag; the standard error is the
    spread of those estimates over paths.
    """
    from .noise import fgn_autocov, gen_lm, sample_autocov

    per_path = np.array([sample_autocov(gen_lm(n, alpha, seed, i), max_lag) for i in range(paths)])
    mean = per_path.mean(axis=0)
    se = per_path.std(axis=0, ddof=1) / math.sqrt(paths)
    lags = np.arange(max_lag + 1)
    exact = np.asarray(fgn_autocov(lags, alpha)) if alpha < 1.0 else (lags == 0).astype(float)
    lo, hi = decay_lags
    sel = lags[lo : hi + 1]
    slope = slope_se = None
    # the decay fit needs at least 3 lags with positive mean autocovariance
    if alpha < 1.0 and sel.size >= 3 and np.all(mean[sel] > 0):
        slope, slope_se = fit_loglog_slope(zip(sel, mean[sel]))
    return AutocovCheck(alpha, lags, mean, se, exact, slope, slope_se)


@dataclass(frozen=True)
class BasisCheck:
    gram_max_deviation: float
    max_abs_phi: float
    k_gram: int
    b_gram: float
    k_bound: int


def run_basis_check(k_gram: int = 30, b_gram: float = 200.0, order: int = 1024,
                    k_bound: int = 2**14, t_max: float = 50.0, points: int = 1000) -> BasisCheck:
    """Orthonormality of ``phi_0..phi_k_gram`` on [0, b_gram] and the bound ``|phi_k| <= 1``."""
    from .basis import laguerre_iter, laguerre_matrix

    grid = make_grid(b_gram, order)
    phi = laguerre_matrix(k_gram, grid.nodes)
    gram = phi.T @ (grid.weights[:, None] * phi)
    deviation = float(np.max(np.abs(gram - np.eye(k_gram + 1))))
    t = np.linspace(0.0, t_max, points)
    peak = 0.0
    for values in laguerre_iter(k_bound, t):
        peak = max(peak, float(np.max(np.abs(values))))
    return BasisCheck(deviation, peak, k_gram, b_gram, k_bound)
