"""Kernel-weighted long-run covariance of functional time series."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FunctionalSample
from .errors import ConfigError, DataError

__all__ = [
    "KernelSpec",
    "LongRunCovarianceEstimate",
    "KERNELS",
    "autocovariance",
    "demeaned",
    "andrews_bandwidth",
    "estimate_longrun",
    "save_longrun",
]

# Andrews (1991) AR(1) plug-in constant for the Parzen kernel
ANDREWS_PARZEN = 2.6614


def _parzen(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    inner = 1.0 - 6.0 * a**2 + 6.0 * a**3
    outer = 2.0 * (1.0 - a) ** 3
    return np.where(a <= 0.5, inner, np.where(a <= 1.0, outer, 0.0))


def _bartlett(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    return np.where(a <= 1.0, 1.0 - a, 0.0)


def _flat_top(x: np.ndarray) -> np.ndarray:
    # trapezoid: flat on [-1/2, 1/2], linear decay to zero at |x| = 1
    a = np.abs(x)
    return np.where(a <= 0.5, 1.0, np.where(a <= 1.0, 2.0 * (1.0 - a), 0.0))


KERNELS = {
    "parzen": _parzen,
    "bartlett": _bartlett,
    "flat_top_truncated": _flat_top,
}


@dataclass(frozen=True)
class KernelSpec:
    """Lag-window kernel supported on ``[-support_c, support_c]``."""

    name: str = "parzen"
    support_c: float = 1.0

    def __post_init__(self) -> None:
        if self.name not in KERNELS:
            raise ConfigError(f"unknown kernel {self.name!r}; choose from {sorted(KERNELS)}")
        if not (math.isfinite(self.support_c) and self.support_c > 0):
            raise ConfigError("kernel support must be a positive finite number")

    def __call__(self, x: np.ndarray | float) -> np.ndarray | float:
        out = KERNELS[self.name](np.asarray(x, dtype=np.float64) / self.support_c)
        return out if out.ndim else float(out)

    def max_lag(self, h: float) -> int:
        return int(math.floor(self.support_c * h))


DEMEANING = ("full_sample", "split_at_khat")


@dataclass(frozen=True, eq=False)
class LongRunCovarianceEstimate:
    """Discretized long-run covariance kernel ``D(t_j, t_j')``.

    ``matrix`` is ``(r*S, r*S)`` and symmetric; ``sigma0_sq`` is the mean
    squared norm of the demeaned curves.
    """

    matrix: np.ndarray
    quad_weight: float
    bandwidth: float
    demeaning: str
    sigma0_sq: float
    kernel: KernelSpec
    k_hat: int | None = None

    def to_dict(self) -> dict:
        return {
            "bandwidth": self.bandwidth,
            "kernel": self.kernel.name,
            "demeaning": self.demeaning,
            "sigma0_sq": self.sigma0_sq,
            "k_hat": self.k_hat,
        }


def demeaned(sample: FunctionalSample, demeaning: str = "full_sample", k_hat: int | None = None) -> np.ndarray:
    """Curves minus the full-sample mean, or minus pre/post-``k_hat`` block means."""
    x = sample.flat()
    if demeaning == "full_sample":
        return x - x.mean(axis=0)
    if demeaning == "split_at_khat":
        n = sample.n_obs
        if k_hat is None or not (2 <= k_hat <= n - 2):
            raise ConfigError(f"split_at_khat demeaning needs 2 <= k_hat <= N-2, got {k_hat}")
        out = np.empty_like(x)
        out[:k_hat] = x[:k_hat] - x[:k_hat].mean(axis=0)
        out[k_hat:] = x[k_hat:] - x[k_hat:].mean(axis=0)
        return out
    raise ConfigError(f"unknown demeaning {demeaning!r}; choose from {DEMEANING}")


def _lag_cov(xbar: np.ndarray, lag: int) -> np.ndarray:
    n = xbar.shape[0]
    if lag >= n:
        return np.zeros((xbar.shape[1], xbar.shape[1]))
    return xbar[: n - lag].T @ xbar[lag:] / (n - lag)


def autocovariance(
    sample: FunctionalSample, lag: int, demeaning: str = "full_sample", k_hat: int | None = None
) -> np.ndarray:
    """Lag-``lag`` autocovariance ``(N-lag)^-1 sum_j Xbar_j(t) Xbar_{j+lag}(s)^T`` on the grid."""
    if lag < 0:
        raise ConfigError("lag must be non-negative")
    return _lag_cov(demeaned(sample, demeaning, k_hat), lag)


def andrews_bandwidth(sample: FunctionalSample) -> float:
    """AR(1) plug-in bandwidth for the Parzen kernel, clamped to ``[1, N/4]``.

    The AR coefficient is pooled across the grid through inner products of
    consecutive demeaned curves.
    """
    n = sample.n_obs
    if n < 10:
        raise DataError(f"bandwidth selection needs N >= 10, got {n}")
    xbar = demeaned(sample)
    num = float(np.einsum("ij,ij->", xbar[1:], xbar[:-1]))
    den = float(np.einsum("ij,ij->", xbar[:-1], xbar[:-1]))
    upper = n / 4.0
    if den <= 0.0:
        return 1.0
    rho = num / den
    if rho >= 1.0:
        return upper
    return bandwidth_from_rho(rho, n)


def bandwidth_from_rho(rho: float, n: int) -> float:
    a2 = 4.0 * rho**2 / (1.0 - rho) ** 4
    h = ANDREWS_PARZEN * (a2 * n) ** 0.2
    return float(min(max(h, 1.0), n / 4.0))


def estimate_longrun(
    sample: FunctionalSample,
    kernel: KernelSpec | None = None,
    h: float | None = None,
    demeaning: str = "full_sample",
    k_hat: int | None = None,
) -> LongRunCovarianceEstimate:
    """Kernel-weighted sum of autocovariances, truncated where the kernel vanishes.

    When ``h`` is omitted it is chosen by :func:`andrews_bandwidth` (and set to
    1 for samples too short for that rule).
    """
    kernel = kernel or KernelSpec()
    if h is None:
        h = andrews_bandwidth(sample) if sample.n_obs >= 10 else 1.0
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise ConfigError(f"bandwidth must be positive, got {h}")
    xbar = demeaned(sample, demeaning, k_hat)
    n = sample.n_obs
    d = _lag_cov(xbar, 0)
    sigma0_sq = float(np.trace(d)) * sample.weight
    for lag in range(1, min(kernel.max_lag(h), n - 1) + 1):
        kw = kernel(lag / h)
        if kw == 0.0:
            continue
        g = _lag_cov(xbar, lag)
        d = d + kw * (g + g.T)
    d = 0.5 * (d + d.T)
    d.setflags(write=False)
    return LongRunCovarianceEstimate(
        d, sample.weight, h, demeaning, sigma0_sq, kernel, k_hat if demeaning == "split_at_khat" else None
    )


def save_longrun(est: LongRunCovarianceEstimate, path: str | Path) -> None:
    """Dump the matrix as ``.npz`` (binary) or CSV with ``#`` metadata lines."""
    path = Path(path)
    meta = dict(est.to_dict(), quad_weight=est.quad_weight)
    if path.suffix.lower() == ".npz":
        np.savez(path, matrix=est.matrix, **{k: np.asarray(v if v is not None else -1) for k, v in meta.items()})
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, val in meta.items():
            fh.write(f"# {key}={val}\n")
        csv.writer(fh).writerows([[repr(float(v)) for v in row] for row in est.matrix])
