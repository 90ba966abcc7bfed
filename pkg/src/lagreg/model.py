"""Data generation for ``y_i = f(t_i) * eps_i + sigma * z_i`` with random design.

Also holds the catalog of test functions ``f`` and design densities ``g``.
Each replication draws from three disjoint random streams (design, eps, z)
derived from one master seed, so the three sources are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import DEFAULT_ORDER, LaguerreCoeffs, make_grid, project
from .noise import NoiseSpec, Which, gen_noise, rng_for

# Smallest admissible m_1 / m_2 ratio for a design density on [0, b].
MIN_DENSITY_RATIO = 1e-3

_STREAM_DESIGN, _STREAM_EPS, _STREAM_Z = 0, 1, 2
_STREAMS_PER_REPLICATION = 4


def stream_id(replication: int, source: int) -> int:
    return _STREAMS_PER_REPLICATION * int(replication) + source


@dataclass(frozen=True)
class DesignDensity:
    """Density ``g`` of the design points on [0, b].

    ``kind="uniform"`` or ``kind="truncexp"`` (``g(t)`` proportional to
    ``exp(-rate * t)``).
    """

    kind: str = "uniform"
    rate: float = 0.0

    def bounds(self, b: float) -> tuple[float, float]:
        """``(m_1, m_2)`` with ``m_1 <= g <= m_2`` on [0, b]."""
        if self.kind == "uniform":
            return 1.0 / b, 1.0 / b
        g = self.pdf(np.array([0.0, b]), b)
        return float(g[1]), float(g[0])

    def validate(self, b: float) -> None:
        if self.kind == "uniform":
            return
        if self.kind != "truncexp":
            raise ValueError(f"unsupported design density {self.kind!r}; use 'uniform' or 'truncexp'")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"truncexp rate must be positive and finite, got {self.rate}")
        ratio = math.exp(-self.rate * b)
        if ratio < MIN_DENSITY_RATIO:
            m1, m2 = self.bounds(b)
            raise ValueError(
                f"design density violates the lower bound m_1 > 0 in practice: "
                f"m_1={m1:.3g}, m_2={m2:.3g}, m_1/m_2={ratio:.3g} < {MIN_DENSITY_RATIO}"
            )

    def pdf(self, t, b: float):
        t = np.asarray(t, dtype=float)
        if self.kind == "uniform":
            return np.full_like(t, 1.0 / b)
        r = self.rate
        return r * np.exp(-r * t) / -math.expm1(-r * b)

    def quantile(self, u, b: float):
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            return b * u
        r = self.rate
        return -np.log1p(u * math.expm1(-r * b)) / r


def sample_design(n: int, g: DesignDensity, b: float, seed: int, stream_id: int) -> np.ndarray:
    """``n`` i.i.d. design points from ``g`` by inverse-CDF sampling."""
    g.validate(b)
    if n == 0:
        return np.empty(0)
    u = rng_for(seed, stream_id).random(n)
    return np.clip(g.quantile(u, b), 0.0, b)


@dataclass(frozen=True)
class TestFunction:
    """Catalog entry: ``f`` on [0, b], its upper bound and nominal smoothness.

    ``smoothness`` is the Laguerre-Sobolev index ``s`` of ``h = f**2``
    extended by zero past ``b``: coefficients satisfy
    ``sum_{l>=L} theta_l**2 ~ L**(-2s)``.  ``None`` means the
    expansion is finite (any ``s`` works).
    """

    __test__ = False  # not a pytest class

    name: str
    f: Callable[[np.ndarray, float], np.ndarray]
    m2: float
    smoothness: float | None
    exact_h_coeffs: bool
    bounded_away_from_zero: bool
    description: str

    def __call__(self, t, b: float):
        return self.f(np.asarray(t, dtype=float), b)


def _phi0_sqrt(t, b):
    return np.exp(-t / 4)


def _cos_bump(t, b):
    return 0.5 * (1.0 + np.cos(np.pi * t / b))


def _ramp(t, b):
    return 1.0 - t / b


def _power_ramp(t, b):
    return (1.0 - t / b) ** 0.75


def _floor_bump(t, b):
    return 0.5 + 0.25 * (1.0 + np.cos(np.pi * t / b))


def _zero(t, b):
    return np.zeros_like(t)


CATALOG: dict[str, TestFunction] = {
    fn.name: fn
    for fn in [
        TestFunction(
            "phi0-sqrt", _phi0_sqrt, 1.0, 0.25, True, True,
            "f = exp(-t/4), h = phi_0; theta = (1, 0, ...) as b -> inf",
        ),
        TestFunction(
            "cos-bump", _cos_bump, 1.0, 2.25, False, False,
            "f = (1 + cos(pi t / b)) / 2, h vanishes to fourth order at b",
        ),
        TestFunction(
            "ramp", _ramp, 1.0, 1.25, False, False,
            "f = 1 - t/b, h vanishes to second order at b",
        ),
        TestFunction(
            "power-ramp", _power_ramp, 1.0, 1.0, False, False,
            "f = (1 - t/b)**(3/4), h = (1 - t/b)**(3/2) vanishes to order 3/2 at b",
        ),
        TestFunction(
            "floor-bump", _floor_bump, 1.0, 0.25, False, True,
            "f = 1/2 + (1 + cos(pi t / b)) / 4, bounded away from zero",
        ),
        TestFunction("zero", _zero, 0.0, None, True, False, "f = 0"),
    ]
}


def test_function(name: str) -> TestFunction:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; catalog: {sorted(CATALOG)}") from None


test_function.__test__ = False


@dataclass(frozen=True)
class ModelSpec:
    f: str = "phi0-sqrt"
    g: DesignDensity = field(default_factory=DesignDensity)
    sigma: float = 0.5
    b: float = 1.0
    n: int = 1024
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError(f"b must be positive, got {self.b}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        test_function(self.f)
        self.g.validate(self.b)

    @property
    def function(self) -> TestFunction:
        return test_function(self.f)

    def h(self, t):
        return self.function(t, self.b) ** 2


@dataclass(frozen=True)
class RegressionSample:
    t: np.ndarray
    y: np.ndarray
    spec: ModelSpec

    def __post_init__(self):
        if self.t.shape != self.y.shape:
            raise ValueError("t and y must have equal length")
        if self.t.size and (self.t.min() < 0 or self.t.max() > self.spec.b):
            raise ValueError(f"design points must lie in [0, {self.spec.b}]")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.y))):
            raise ValueError("sample contains non-finite values")

    @property
    def n(self) -> int:
        return self.t.size

    def design_density(self) -> np.ndarray:
        return self.spec.g.pdf(self.t, self.spec.b)


def simulate(
    spec: ModelSpec,
    seed: int,
    replication: int,
    *,
    epsilon: np.ndarray | None = None,
    z: np.ndarray | None = None,
) -> RegressionSample:
    """Draw one sample from the model.

    ``epsilon`` and ``z`` replace the generated noise paths when given
    (used for noiseless checks).
    """
    n = spec.n
    noise = NoiseSpec(spec.noise.kind, spec.noise.alpha1, spec.noise.alpha2, seed)
    t = sample_design(n, spec.g, spec.b, seed, stream_id(replication, _STREAM_DESIGN))
    if epsilon is None:
        epsilon = gen_noise(noise, Which.EPSILON, n, stream_id(replication, _STREAM_EPS)).values if n else np.empty(0)
    if z is None:
        z = gen_noise(noise, Which.Z, n, stream_id(replication, _STREAM_Z)).values if n else np.empty(0)
    f = spec.function(t, spec.b)
    y = f * np.asarray(epsilon, dtype=float) + spec.sigma * np.asarray(z, dtype=float)
    return RegressionSample(t, y, spec)


def h_coefficients(spec: ModelSpec, m: int, order: int = DEFAULT_ORDER) -> LaguerreCoeffs:
    """Quadrature coefficients of ``h = f**2`` on [0, b]."""
    return project(spec.h, m, make_grid(spec.b, order))


def sobolev_tail_check(coeffs: LaguerreCoeffs, s: float, A: float) -> bool:
    """Membership in the Laguerre-Sobolev ball: ``sum max(l,1)**(2s) theta_l**2 <= A``."""
    if s < 0.5:
        raise ValueError(f"smoothness s must be >= 1/2, got {s}")
    weights = np.maximum(np.arange(coeffs.m), 1.0) ** (2 * s)
    return bool(np.sum(weights * coeffs.theta**2) <= A)
