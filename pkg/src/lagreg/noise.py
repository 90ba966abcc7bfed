"""Gaussian error sequences: white noise and long-memory fractional Gaussian noise.

Long memory with parameter ``alpha`` in (0, 1) is realized as fractional
Gaussian noise with Hurst index ``H = 1 - alpha/2``, whose autocovariance
decays like ``lag**(-alpha)``.  ``alpha = 1`` is white noise.  Paths are
exact samples, drawn by circulant embedding (Davies-Harte) with a Cholesky
fallback.

Every generator is a pure function of ``(n, parameters, seed, stream_id)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

EIGEN_BUDGET = 4096


class NoiseKind(str, enum.Enum):
    IID = "iid"
    LONG_MEMORY = "lm"


class Which(str, enum.Enum):
    EPSILON = "epsilon"
    Z = "z"


@dataclass(frozen=True)
class NoiseSpec:
    """Error structure of both noise sources.

    For ``IID`` the memory parameters are ignored and reported as 1.
    """

    kind: NoiseKind = NoiseKind.IID
    alpha1: float = 1.0
    alpha2: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.kind is NoiseKind.IID:
            object.__setattr__(self, "alpha1", 1.0)
            object.__setattr__(self, "alpha2", 1.0)
        for name in ("alpha1", "alpha2"):
            a = getattr(self, name)
            if not 0.0 < a <= 1.0:
                raise ValueError(f"{name} must lie in (0,1], got {a}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def alpha(self, which: Which) -> float:
        return self.alpha1 if Which(which) is Which.EPSILON else self.alpha2


@dataclass(frozen=True)
class NoisePath:
    values: np.ndarray
    spec: NoiseSpec
    which: Which


def rng_for(seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for one ``(seed, stream_id)`` pair."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def gen_iid(n: int, seed: int, stream_id: int) -> np.ndarray:
    """``n`` independent standard normal draws."""
    if n < 1:
        raise ValueError(f"path length must be positive, got {n}")
    return rng_for(seed, stream_id).standard_normal(n)


def _hurst(alpha: float) -> float:
    return 1.0 - 0.5 * alpha


def fgn_autocov(h, alpha: float):
    """Autocovariance of unit-variance fGn with ``H = 1 - alpha/2`` at lag ``h``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    two_h = 2.0 * _hurst(alpha)
    h = np.abs(np.asarray(h, dtype=float))
    out = 0.5 * (np.abs(h + 1) ** two_h - 2 * h**two_h + np.abs(h - 1) ** two_h)
    return float(out) if out.ndim == 0 else out


def _autocov_vector(n: int, alpha: float) -> np.ndarray:
    if alpha >= 1.0:
        acf = np.zeros(n)
        acf[0] = 1.0
        return acf
    return np.atleast_1d(fgn_autocov(np.arange(n), alpha))


def embedding_size(n: int) -> int:
    """Smallest power of two that is at least ``2(n - 1)``."""
    target = max(2 * (n - 1), 1)
    return 1 << (target - 1).bit_length()


class EmbeddingError(RuntimeError):
    pass


@lru_cache(maxsize=64)
def _circulant_scale(n: int, alpha: float):
    """``sqrt(eigenvalues / size)`` of the circulant embedding, or None."""
    size = embedding_size(n)
    half = size // 2
    acf = _autocov_vector(half + 1, alpha)
    row = np.concatenate([acf, acf[1:half][::-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        return None
    scale = np.sqrt(np.clip(eig, 0.0, None) / size)
    scale.setflags(write=False)
    return scale


@lru_cache(maxsize=16)
def _cholesky_factor(n: int, alpha: float) -> np.ndarray:
    cov = scipy.linalg.toeplitz(_autocov_vector(n, alpha))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError(
            f"covariance for n={n}, alpha={alpha} is not positive definite"
        ) from exc


def gen_lm(n: int, alpha: float, seed: int, stream_id: int) -> np.ndarray:
    """Exact stationary Gaussian path with autocovariance ``fgn_autocov(., alpha)``.

    ``alpha == 1`` delegates to :func:`gen_iid` and yields the same numbers.
    """
    if n < 1:
        raise ValueError(f"path length must be positive, got {n}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0,1], got {alpha}")
    if alpha == 1.0 or n == 1:
        return gen_iid(n, seed, stream_id)
    rng = rng_for(seed, stream_id)
    scale = _circulant_scale(n, alpha)
    if scale is None:
        return _cholesky_factor(n, alpha) @ rng.standard_normal(n)
    size = scale.size
    xi = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return np.fft.fft(scale * xi).real[:n]


def gen_noise(spec: NoiseSpec, which: Which, n: int, stream_id: int) -> NoisePath:
    """Path for one of the two noise sources described by ``spec``."""
    which = Which(which)
    if spec.kind is NoiseKind.IID:
        values = gen_iid(n, spec.seed, stream_id)
    else:
        values = gen_lm(n, spec.alpha(which), spec.seed, stream_id)
    return NoisePath(values, spec, which)


def covariance_eigen_range(n: int, alpha: float) -> tuple[float, float]:
    """Smallest and largest eigenvalue of the ``n x n`` fGn covariance matrix."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > EIGEN_BUDGET:
        raise ValueError(f"n={n} exceeds the dense eigensolve budget of {EIGEN_BUDGET}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0,1], got {alpha}")
    if alpha == 1.0:
        return 1.0, 1.0
    eig = scipy.linalg.eigvalsh(scipy.linalg.toeplitz(_autocov_vector(n, alpha)))
    return float(eig[0]), float(eig[-1])


def sample_autocov(paths: np.ndarray, max_lag: int) -> np.ndarray:
    """Autocovariance at lags ``0..max_lag`` averaged over the rows of ``paths``.

    Uses the known zero mean, dividing by the number of pairs at each lag.
    """
    paths = np.atleast_2d(paths)
    n = paths.shape[1]
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        out[lag] = np.mean(paths[:, : n - lag] * paths[:, lag:])
    return out
