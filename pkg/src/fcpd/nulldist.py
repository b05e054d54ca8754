"""Monte Carlo null law of the max statistic and breakdate confidence intervals.

The limit process is ``Delta(u) = sum_l lambda_l B_l(u)^2 - sigma^2 u(1-u)``
with independent Brownian bridges ``B_l``; critical values are empirical
quantiles of ``sup_u |Delta(u)| / (u(1-u))^alpha`` on an interior grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._rng import chunks, map_reps, stream
from .errors import ConfigError, DegenerateError
from .spectral import SpectralModel

__all__ = [
    "NullSimConfig",
    "CriticalValueTable",
    "XiAlphaModel",
    "BreakdateCI",
    "DEFAULT_LEVELS",
    "drift_levels",
    "simulate_delta_sup",
    "simulate_delta_sups",
    "p_value",
    "simulate_xi_alpha",
    "breakdate_ci",
    "export_table",
]

DEFAULT_LEVELS = (0.01, 0.05, 0.10)

_CHUNK = 256
# doubles drawn per chunk
_CHUNK_BUDGET = 2_000_000


@dataclass(frozen=True)
class NullSimConfig:
    n_grid: int = 200
    n_reps: int = 500
    alpha_weight: float = 0.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_grid < 8:
            raise ConfigError(f"n_grid must be >= 8, got {self.n_grid}")
        if self.n_reps < 100:
            raise ConfigError(f"n_reps must be >= 100, got {self.n_reps}")
        if not (0.0 <= self.alpha_weight < 1.0):
            raise ConfigError(f"alpha_weight must lie in [0, 1), got {self.alpha_weight}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")


def order_statistic_index(level: float, n: int) -> int:
    """0-based index of the ``ceil((1 - level) n)``-th order statistic."""
    # round() guards against (1 - a) * n landing a hair above an integer
    return max(math.ceil(round((1.0 - level) * n, 9)), 1) - 1


@dataclass(frozen=True, eq=False)
class CriticalValueTable:
    """Sorted simulated sup statistics and derived critical values."""

    sup_samples: np.ndarray
    levels: tuple[float, ...] = DEFAULT_LEVELS
    alpha: float = 0.0

    @property
    def n_reps(self) -> int:
        return self.sup_samples.shape[0]

    def critical_value(self, level: float) -> float:
        if not (0.0 < level < 1.0):
            raise ConfigError(f"level must lie in (0, 1), got {level}")
        return float(self.sup_samples[order_statistic_index(level, self.n_reps)])

    @property
    def critvals(self) -> tuple[float, ...]:
        return tuple(self.critical_value(a) for a in self.levels)

    def p_value(self, observed: float) -> float:
        return p_value(self, observed)

    def to_dict(self) -> dict:
        return {f"{a:g}": cv for a, cv in zip(self.levels, self.critvals)}


def _validate_model(model: SpectralModel) -> np.ndarray:
    lam = model.retained if model.m_hat is not None else model.eigenvalues
    lam = np.asarray(lam, dtype=np.float64)
    if lam.size < 1:
        raise ConfigError("need at least one retained eigenvalue")
    if np.any(lam < 0) or model.sigma0_sq < 0:
        raise ConfigError("eigenvalues and sigma0_sq must be non-negative")
    return lam


def bridges(rng: np.random.Generator, shape: tuple[int, ...], n_grid: int) -> np.ndarray:
    """Standard Brownian bridges at ``u_j = j/n_grid``, ``j = 0..n_grid`` (endpoints exactly 0).

    ``shape`` gives the leading (batch) dimensions; the last axis is time.
    """
    if isinstance(shape, int):
        shape = (shape,)
    inc = rng.standard_normal((*shape, n_grid)) / math.sqrt(n_grid)
    w = np.zeros((*shape, n_grid + 1))
    np.cumsum(inc, axis=-1, out=w[..., 1:])
    u = np.arange(n_grid + 1) / n_grid
    b = w - u * w[..., -1:]
    b[..., 0] = 0.0
    b[..., -1] = 0.0
    return b


def _chunk_size(per_rep: int) -> int:
    # fixed by the problem size only, so the stream layout never depends on worker count
    return int(max(1, min(_CHUNK, _CHUNK_BUDGET // max(per_rep, 1))))


def simulate_delta_sups(
    model: SpectralModel,
    n_grid: int,
    n_reps: int,
    alphas: Sequence[float],
    seed: int,
    workers: int = 1,
    key: Sequence[int] = (),
) -> np.ndarray:
    """Sup statistics for several weight exponents from shared bridge paths.

    Returns an ``(len(alphas), n_reps)`` array in replication order (unsorted).
    Replications are drawn in fixed-size chunks, each from its own stream;
    ``key`` adds words to the stream key (e.g. a Monte Carlo replication index).
    """
    lam = _validate_model(model)
    sig2 = float(model.sigma0_sq)
    m = lam.size
    j = np.arange(1, n_grid)
    u = j / n_grid
    uu = u * (1.0 - u)
    weights = np.stack([uu ** (-a) if a > 0 else np.ones_like(uu) for a in alphas])

    def run(ci: int, block: range) -> np.ndarray:
        b = bridges(stream(seed, "delta", ci, *key), (len(block), m), n_grid)[..., 1:-1]
        delta = np.einsum("l,clj->cj", lam, b * b) - sig2 * uu
        return np.max(np.abs(delta)[None, :, :] * weights[:, None, :], axis=2)

    blocks = chunks(n_reps, _chunk_size(m * n_grid))
    parts = map_reps(lambda i: run(i, blocks[i]), len(blocks), workers)
    sups = np.concatenate(parts, axis=1)
    if not np.all(np.isfinite(sups)):
        raise ArithmeticError("non-finite simulated sup statistic")
    return sups


def simulate_delta_sup(model: SpectralModel, config: NullSimConfig, levels: Sequence[float] = DEFAULT_LEVELS) -> CriticalValueTable:
    sups = simulate_delta_sups(model, config.n_grid, config.n_reps, [config.alpha_weight], config.seed, config.workers)[0]
    sups = np.sort(sups)
    sups.setflags(write=False)
    return CriticalValueTable(sups, tuple(levels), config.alpha_weight)


def tables_for_alphas(
    model: SpectralModel, n_grid: int, n_reps: int, alphas: Sequence[float], seed: int, workers: int = 1,
    levels: Sequence[float] = DEFAULT_LEVELS, key: Sequence[int] = (),
) -> list[CriticalValueTable]:
    sups = simulate_delta_sups(model, n_grid, n_reps, alphas, seed, workers, key)
    out = []
    for a, row in zip(alphas, sups):
        s = np.sort(row)
        s.setflags(write=False)
        out.append(CriticalValueTable(s, tuple(levels), float(a)))
    return out


def p_value(table: CriticalValueTable, observed_T: float) -> float:
    """Add-one empirical tail probability ``(1 + #{sup >= T}) / (n + 1)``."""
    s = table.sup_samples
    if s.size == 0:
        raise ConfigError("empty critical value table")
    n_ge = s.size - int(np.searchsorted(s, observed_T, side="left"))
    return (1 + n_ge) / (s.size + 1)


def export_table(table: CriticalValueTable, path: str | Path, dump_samples: bool = False) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "critical_value"])
        for a, cv in zip(table.levels, table.critvals):
            writer.writerow([repr(a), repr(cv)])
    if dump_samples:
        np.savetxt(Path(path).with_suffix(".sups.csv"), table.sup_samples, delimiter=",")


# ---------------------------------------------------------------------------
# breakdate limit law


def drift_levels(alpha: float, theta: float) -> tuple[float, float]:
    """Drift slopes of the two-sided argmax problem for ``u < 0`` and ``u > 0``."""
    left = (1.0 - alpha / 2.0) * (1.0 - theta) + alpha * theta / 2.0
    right = (1.0 - alpha / 2.0) * theta + alpha * (1.0 - theta) / 2.0
    return left, right


@dataclass(frozen=True, eq=False)
class XiAlphaModel:
    """Simulated law of ``argmax_u (W(u) - |u| m(u))``."""

    alpha: float
    theta: float
    m_alpha_left: float
    m_alpha_right: float
    samples: np.ndarray
    window: float
    step: float
    n_at_boundary: int

    def quantile(self, q: float | np.ndarray) -> float | np.ndarray:
        out = np.quantile(self.samples, q, method="inverted_cdf")
        return float(out) if np.ndim(out) == 0 else out

    @property
    def boundary_fraction(self) -> float:
        return self.n_at_boundary / self.samples.size


def simulate_xi_alpha(
    alpha: float,
    theta: float,
    n_reps: int = 10_000,
    seed: int = 0,
    *,
    window: float = 50.0,
    step: float = 0.01,
    drift_scale: float = 1.0,
    workers: int = 1,
) -> XiAlphaModel:
    """Simulate the breakdate limit variable on ``[-window, window]``.

    Each side of the two-sided Wiener path is built from independent Gaussian
    increments; the smallest maximizer over the grid is recorded.  Values at
    +-``window`` indicate truncation (see ``boundary_fraction``).
    ``drift_scale`` multiplies both drift slopes.
    """
    if not (0.0 <= alpha < 1.0):
        raise ConfigError(f"alpha must lie in [0, 1), got {alpha}")
    if not (0.0 < theta < 1.0):
        raise ConfigError(f"theta must lie in (0, 1), got {theta}")
    if n_reps < 1 or window <= 0 or step <= 0:
        raise ConfigError("n_reps, window and step must be positive")
    left, right = drift_levels(alpha, theta)
    left *= drift_scale
    right *= drift_scale
    n_side = int(round(window / step))
    u = np.arange(1, n_side + 1) * step
    sd = math.sqrt(step)

    def run(ci: int, block: range) -> np.ndarray:
        z = stream(seed, "xi", ci).standard_normal((len(block), 2, n_side))
        path = np.cumsum(z, axis=2)
        path *= sd
        path[:, 0] -= left * u
        path[:, 1] -= right * u
        vl = path[:, 0].max(axis=1)
        vr = path[:, 1].max(axis=1)
        # grid in ascending u: -u[n-1] .. -u[0], 0, u[0] .. ; ties go to the smallest u,
        # which on the left side is the last index attaining the max
        il = n_side - 1 - np.argmax(path[:, 0, ::-1], axis=1)
        ir = np.argmax(path[:, 1], axis=1)
        take_left = (vl >= 0.0) & (vl >= vr)
        take_right = ~take_left & (vr > 0.0)
        return np.where(take_left, -u[il], np.where(take_right, u[ir], 0.0))

    blocks = chunks(n_reps, _chunk_size(2 * n_side))
    samples = np.concatenate(map_reps(lambda i: run(i, blocks[i]), len(blocks), workers))
    edge = window - step / 2
    n_edge = int(np.sum(np.abs(samples) >= edge))
    samples.setflags(write=False)
    return XiAlphaModel(float(alpha), float(theta), left, right, samples, window, step, n_edge)


@dataclass(frozen=True)
class BreakdateCI:
    level: float
    lower: int
    upper: int
    raw_lower: float
    raw_upper: float
    scale: float

    def to_dict(self) -> dict:
        return {"level": self.level, "lower": self.lower, "upper": self.upper,
                "raw_lower": self.raw_lower, "raw_upper": self.raw_upper, "scale": self.scale}


def breakdate_ci(estimate, xi: XiAlphaModel, level: float = 0.95) -> BreakdateCI:
    """Confidence interval for the breakdate at confidence ``level``.

    Bounds are ``k_hat - q * sigma^2 / ||delta||^2`` for the upper and lower
    ``xi`` quantiles, rounded outward and clamped to ``[1, N]``.
    """
    if not (0.0 < level < 1.0):
        raise ConfigError(f"confidence level must lie in (0, 1), got {level}")
    if not (estimate.delta_norm > 0.0 and estimate.sigma2_hat > 0.0):
        raise DegenerateError("confidence interval needs a nonzero shift and positive projected variance")
    a = 1.0 - level
    scale = estimate.sigma2_hat / estimate.delta_norm**2
    raw_lower = estimate.k_hat - xi.quantile(1.0 - a / 2.0) * scale
    raw_upper = estimate.k_hat - xi.quantile(a / 2.0) * scale
    n = estimate.n_obs
    lower = min(max(math.floor(raw_lower), 1), n)
    upper = min(max(math.ceil(raw_upper), 1), n)
    return BreakdateCI(level, lower, upper, float(raw_lower), float(raw_upper), float(scale))
