"""Laguerre functions, Gauss-Legendre grids on [0, b] and basis projections.

The Laguerre functions ``phi_k(t) = exp(-t/2) L_k(t)`` form an orthonormal
basis of L2[0, inf).  All evaluation runs the three-term recurrence on the
already damped values, so nothing overflows for large ``k`` or ``t``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from numbers import Integral
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

DEFAULT_ORDER = 256


def _check_index(k) -> int:
    if isinstance(k, bool) or not isinstance(k, Integral):
        raise ValueError(f"Laguerre index must be an integer, got {k!r}")
    if k < 0:
        raise ValueError(f"Laguerre index must be nonnegative, got {k}")
    return int(k)


def _check_points(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)):
        raise ValueError("evaluation points must be finite")
    if np.any(t < 0):
        raise ValueError(f"Laguerre functions live on [0, inf); got t={t.min()}")
    return t


def laguerre_iter(k_max: int, t):
    """Yield ``phi_0(t), ..., phi_{k_max}(t)`` one index at a time.

    ``t`` may be a scalar or an array; each yielded value has its shape.
    Used by callers that reduce over the sample for every index and never
    need the full matrix in memory.
    """
    k_max = _check_index(k_max)
    t = _check_points(t)
    prev = np.exp(-0.5 * t)
    yield prev
    if k_max == 0:
        return
    cur = (1.0 - t) * prev
    yield cur
    for k in range(1, k_max):
        prev, cur = cur, ((2 * k + 1 - t) * cur - k * prev) / (k + 1)
        yield cur


def laguerre_fn_row(k_max: int, t: float) -> np.ndarray:
    """Return ``[phi_0(t), ..., phi_{k_max}(t)]`` from a single recurrence pass."""
    t = float(t)
    return np.array([float(v) for v in laguerre_iter(k_max, t)])


def laguerre_fn(k: int, t: float) -> float:
    """Laguerre function ``phi_k(t) = exp(-t/2) L_k(t)`` for ``t >= 0``.

    >>> laguerre_fn(1, 0.0)
    1.0
    """
    k = _check_index(k)
    return float(laguerre_fn_row(k, t)[k])


def laguerre_matrix(k_max: int, t) -> np.ndarray:
    """Matrix of shape ``(len(t), k_max + 1)`` with ``phi_k(t_i)`` in column k."""
    t = np.atleast_1d(_check_points(t))
    out = np.empty((t.size, _check_index(k_max) + 1))
    for k, col in enumerate(laguerre_iter(k_max, t)):
        out[:, k] = col
    return out


@dataclass(frozen=True)
class BasisGrid:
    """Gauss-Legendre nodes and weights mapped affinely onto [0, b]."""

    b: float
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def make_grid(b: float, order: int = DEFAULT_ORDER) -> BasisGrid:
    """Build an ``order``-point Gauss-Legendre rule on [0, b].

    The rule integrates polynomials of degree ``2*order - 1`` exactly.
    Grids are immutable and cached.
    """
    if not np.isfinite(b) or b <= 0:
        raise ValueError(f"grid endpoint b must be positive, got {b}")
    if isinstance(order, bool) or not isinstance(order, Integral) or order < 2:
        raise ValueError(f"grid order must be an integer >= 2, got {order!r}")
    return _make_grid(float(b), int(order))


@lru_cache(maxsize=32)
def _make_grid(b: float, order: int) -> BasisGrid:
    # scipy's rule is O(order); numpy's leggauss is cubic in the order
    x, w = roots_legendre(order)
    nodes = 0.5 * b * (x + 1.0)
    weights = 0.5 * b * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return BasisGrid(float(b), nodes, weights, int(order))


_integral_cache: dict[tuple[float, int], np.ndarray] = {}
_integral_lock = threading.Lock()


def basis_integrals(m: int, grid: BasisGrid) -> np.ndarray:
    """Quadrature values of ``int_0^b phi_l(t) dt`` for ``l = 0..m-1``.

    Memoized per ``(b, order)``; the cached vector only ever grows, so a
    shorter request is a prefix of a longer one.
    """
    if m < 1:
        raise ValueError(f"need at least one basis integral, got m={m}")
    key = (grid.b, grid.order)
    with _integral_lock:
        cached = _integral_cache.get(key)
        if cached is None or cached.size < m:
            # one dot product per index: a matrix product would round
            # differently depending on m, and the cache must not depend on
            # which request filled it first
            cached = np.array([np.dot(grid.weights, col) for col in laguerre_iter(m - 1, grid.nodes)])
            cached.setflags(write=False)
            _integral_cache[key] = cached
    return cached[:m]


def basis_integral(l: int, grid: BasisGrid) -> float:
    """Quadrature value of ``int_0^b phi_l(t) dt``."""
    l = _check_index(l)
    return float(basis_integrals(l + 1, grid)[l])


@dataclass(frozen=True)
class LaguerreCoeffs:
    """Coefficients ``theta_0..theta_{m-1}`` of an expansion computed on [0, b]."""

    theta: np.ndarray
    b: float

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1 or theta.size == 0:
            raise ValueError("coefficients must be a nonempty vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("coefficients must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return self.theta.size

    def __call__(self, t):
        return reconstruct(self, t)


def project(h: Callable, m: int, grid: BasisGrid) -> LaguerreCoeffs:
    """Coefficients ``int_0^b h(t) phi_k(t) dt`` for ``k < m`` by quadrature.

    ``h`` is called once with the full node array.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    values = np.asarray(h(grid.nodes), dtype=float)
    if values.shape != grid.nodes.shape:
        values = np.broadcast_to(values, grid.nodes.shape)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = bad[0]
        raise ValueError(f"h is not finite at node t={grid.nodes[i]!r}: {values[i]!r}")
    theta = (grid.weights * values) @ laguerre_matrix(m - 1, grid.nodes)
    return LaguerreCoeffs(theta, grid.b)


def reconstruct(coeffs: LaguerreCoeffs, t):
    """Evaluate ``sum_k theta_k phi_k(t)``; scalar in, scalar out."""
    scalar = np.ndim(t) == 0
    t = _check_points(t)
    total = np.zeros_like(t, dtype=float)
    for theta_k, phi_k in zip(coeffs.theta, laguerre_iter(coeffs.m - 1, t)):
        if theta_k != 0.0:
            total = total + theta_k * phi_k
    return float(total) if scalar else total
