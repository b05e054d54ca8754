"""Empirical energy statistic (exponent 2) and its weighted process.

Windows follow prefix-sum conventions: ``(lower, upper)`` covers observations
``lower+1 .. upper`` (1-based), and a split at ``k`` compares
``lower+1 .. k`` with ``k+1 .. upper``.  Admissible splits are
``lower+2 <= k <= upper-2`` and the window must hold more than 4 curves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FunctionalSample, InnerProductCache, build_cache, inner_product
from .errors import ConfigError, DegenerateError, DomainError

__all__ = [
    "WeightedEnergyProcess",
    "BreakdateEstimate",
    "v_statistic_pairwise",
    "v_statistic_fast",
    "v_components_pairwise",
    "v_profile_pairwise",
    "v_profile_fast",
    "weight_factor",
    "weighted_process",
    "estimate_breakdate",
    "export_process",
]


def _check_window(n_obs: int, lower: int, upper: int) -> None:
    if not (0 <= lower < upper <= n_obs):
        raise DomainError(f"window ({lower}, {upper}) outside 0..{n_obs}")
    if upper - lower <= 4:
        raise DomainError(f"window ({lower}, {upper}) must contain more than 4 observations")


def _check_split(n_obs: int, lower: int, upper: int, k: int) -> None:
    _check_window(n_obs, lower, upper)
    if not (lower + 2 <= k <= upper - 2):
        raise DomainError(f"split k={k} outside {lower + 2}..{upper - 2}")


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise ConfigError(f"weight exponent alpha must lie in [0, 1), got {alpha}")
    return alpha


def _pairwise_sq_dists(sample: FunctionalSample, lower: int, upper: int) -> np.ndarray:
    x = sample.flat()[lower:upper]
    n = upper - lower
    d2 = np.empty((n, n))
    for i in range(n):
        diff = x[i] - x
        d2[i] = np.einsum("ij,ij->i", diff, diff) * sample.weight
    return d2


def _components_from_dists(d2: np.ndarray, kk: int) -> tuple[float, float, float]:
    m = d2.shape[0] - kk
    between = d2[:kk, kk:].sum() * 2.0 / (kk * m)
    left = np.triu(d2[:kk, :kk], 1).sum() / (kk * (kk - 1) / 2)
    right = np.triu(d2[kk:, kk:], 1).sum() / (m * (m - 1) / 2)
    return float(between), float(left), float(right)


def v_components_pairwise(sample: FunctionalSample, lower: int, upper: int, k: int) -> tuple[float, float, float]:
    """The between-block and two within-block terms of ``V`` by literal summation."""
    _check_split(sample.n_obs, lower, upper, k)
    return _components_from_dists(_pairwise_sq_dists(sample, lower, upper), k - lower)


def v_statistic_pairwise(sample: FunctionalSample, lower: int, upper: int, k: int) -> float:
    """``V^{(lower,upper)}(k)`` by direct summation of pairwise squared distances.

    Quadratic in the window length; meant as a reference for
    :func:`v_statistic_fast`.
    """
    between, left, right = v_components_pairwise(sample, lower, upper, k)
    return between - left - right


def v_profile_pairwise(
    sample: FunctionalSample, lower: int, upper: int, *, components: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """``(ks, V(k))`` for every admissible split, summing one window's pairwise distances.

    With ``components=True`` the second array is ``(len(ks), 3)`` holding the
    between, left and right terms instead of ``V``.
    """
    _check_window(sample.n_obs, lower, upper)
    d2 = _pairwise_sq_dists(sample, lower, upper)
    ks = np.arange(lower + 2, upper - 1)
    comps = np.array([_components_from_dists(d2, int(k) - lower) for k in ks])
    if components:
        return ks, comps
    return ks, comps[:, 0] - comps[:, 1] - comps[:, 2]


def _v_vectorized(cache: InnerProductCache, lower: int, upper: int, ks: np.ndarray) -> np.ndarray:
    p = cache.prefix_sums
    q = cache.prefix_sq_norms
    w = cache.weight
    n1 = (ks - lower).astype(np.float64)
    n2 = (upper - ks).astype(np.float64)
    a = p[ks] - p[lower]
    b = p[upper] - p[ks]
    sum1 = q[ks] - q[lower]
    sum2 = q[upper] - q[ks]
    aa = np.einsum("ij,ij->i", a, a) * w
    bb = np.einsum("ij,ij->i", b, b) * w
    d = a / n1[:, None] - b / n2[:, None]
    dd = np.einsum("ij,ij->i", d, d) * w
    # within-block sums of squares
    ss1 = sum1 - aa / n1
    ss2 = sum2 - bb / n2
    return 2.0 * dd - 2.0 * ss1 / (n1 * (n1 - 1.0)) - 2.0 * ss2 / (n2 * (n2 - 1.0))


def v_statistic_fast(cache: InnerProductCache, lower: int, upper: int, k: int) -> float:
    """``V^{(lower,upper)}(k)`` from prefix sums in O(r*S)."""
    _check_split(cache.n_obs, lower, upper, k)
    return float(_v_vectorized(cache, lower, upper, np.array([k]))[0])


def v_profile_fast(cache: InnerProductCache, lower: int, upper: int) -> tuple[np.ndarray, np.ndarray]:
    """``(ks, V(k))`` for every admissible split, from prefix sums."""
    _check_window(cache.n_obs, lower, upper)
    ks = np.arange(lower + 2, upper - 1)
    return ks, _v_vectorized(cache, lower, upper, ks)


def weight_factor(x: np.ndarray | float, alpha: float) -> np.ndarray | float:
    """``(x (1 - x))^(2 - alpha)``."""
    x = np.asarray(x, dtype=np.float64)
    out = (x * (1.0 - x)) ** (2.0 - alpha)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class WeightedEnergyProcess:
    """``0.5 n (x(1-x))^(2-alpha) V(k)`` over admissible ``k`` of a window.

    ``values`` keeps the sign of ``V``; ``max_value`` and ``argmax_k`` refer to
    the absolute values, ties going to the smallest ``k``.
    """

    alpha: float
    lower: int
    upper: int
    ks: np.ndarray
    values: np.ndarray
    argmax_k: int
    max_value: float

    @property
    def fractions(self) -> np.ndarray:
        return (self.ks - self.lower) / (self.upper - self.lower)

    def value_at(self, k: int) -> float:
        return float(self.values[k - self.lower - 2])


def weighted_process(cache: InnerProductCache, lower: int, upper: int, alpha: float) -> WeightedEnergyProcess:
    alpha = check_alpha(alpha)
    _check_window(cache.n_obs, lower, upper)
    ks = np.arange(lower + 2, upper - 1)
    n = upper - lower
    v = _v_vectorized(cache, lower, upper, ks)
    vals = 0.5 * n * weight_factor((ks - lower) / n, alpha) * v
    absvals = np.abs(vals)
    i = int(np.argmax(absvals))  # first occurrence = smallest maximizer
    for arr in (ks, vals):
        arr.setflags(write=False)
    return WeightedEnergyProcess(alpha, lower, upper, ks, vals, int(ks[i]), float(absvals[i]))


def full_process(sample: FunctionalSample, alpha: float) -> WeightedEnergyProcess:
    sample.require_min_obs()
    return weighted_process(build_cache(sample), 0, sample.n_obs, alpha)


@dataclass(frozen=True, eq=False)
class BreakdateEstimate:
    k_hat: int
    theta_hat: float
    delta_hat: np.ndarray
    delta_norm: float
    sigma2_hat: float
    n_obs: int

    def to_dict(self) -> dict:
        return {
            "k_hat": self.k_hat,
            "theta_hat": self.theta_hat,
            "delta_norm": self.delta_norm,
            "sigma2_hat": self.sigma2_hat,
        }


def estimate_breakdate(sample: FunctionalSample, process: WeightedEnergyProcess, covariance) -> BreakdateEstimate:
    """Breakdate, shift estimate and projected long-run variance.

    ``covariance`` is a :class:`fcpd.longrun.LongRunCovarianceEstimate` of the
    same sample; the projected variance is ``rho^T D rho`` integrated with the
    grid weight, where ``rho`` is the unit-norm shift direction.
    """
    if process.lower != 0 or process.upper != sample.n_obs:
        raise DomainError("breakdate estimation needs the full-sample process")
    k = process.argmax_k
    x = sample.values
    delta = x[:k].mean(axis=0) - x[k:].mean(axis=0)
    norm = float(np.sqrt(max(inner_product(delta, delta, sample.grid), 0.0)))
    if norm == 0.0:
        raise DegenerateError("estimated shift has zero norm; no confidence interval possible")
    rho = delta.ravel() / norm
    w = sample.weight
    sigma2 = float(rho @ covariance.matrix @ rho) * w * w
    return BreakdateEstimate(k, k / sample.n_obs, delta, norm, sigma2, sample.n_obs)


def export_process(process: WeightedEnergyProcess, path: str | Path) -> None:
    """Write ``k, u, weighted_value`` rows for plotting."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "u", "weighted_value"])
        for k, u, v in zip(process.ks, process.fractions, process.values):
            writer.writerow([int(k), repr(float(u)), repr(float(v))])
