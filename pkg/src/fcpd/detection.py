"""End-to-end test for a change in the mean of a functional time series."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .data import FunctionalSample, build_cache
from .energy import WeightedEnergyProcess, check_alpha, weighted_process
from .errors import ConfigError
from .longrun import DEMEANING, KernelSpec, LongRunCovarianceEstimate, estimate_longrun
from .nulldist import DEFAULT_LEVELS, CriticalValueTable, tables_for_alphas
from .spectral import SpectralModel, operator_eigenvalues

__all__ = ["DetectionConfig", "DetectionResult", "mean_change_test", "mean_change_tests", "null_model"]


@dataclass(frozen=True)
class DetectionConfig:
    """Settings shared by every detection entry point.

    ``n_grid=None`` simulates the null process on as many points as there are
    observations.
    """

    kernel: str = "parzen"
    bandwidth: float | None = None
    demeaning: str = "full_sample"
    cpv_threshold: float = 0.95
    n_reps: int = 500
    n_grid: int | None = None
    seed: int = 0
    level: float = 0.05
    levels: tuple[float, ...] = DEFAULT_LEVELS
    workers: int = 1

    def __post_init__(self) -> None:
        KernelSpec(self.kernel)
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError("bandwidth must be positive")
        if self.demeaning not in DEMEANING:
            raise ConfigError(f"demeaning must be one of {DEMEANING}")
        if not (0.0 < self.cpv_threshold <= 1.0):
            raise ConfigError("cpv_threshold must lie in (0, 1]")
        if self.n_reps < 100:
            raise ConfigError("n_reps must be >= 100")
        if self.n_grid is not None and self.n_grid < 8:
            raise ConfigError("n_grid must be >= 8")
        if not (0.0 < self.level < 1.0) or not all(0.0 < a < 1.0 for a in self.levels):
            raise ConfigError("levels must lie in (0, 1)")
        object.__setattr__(self, "levels", tuple(sorted(set(self.levels) | {self.level})))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d


@dataclass(frozen=True, eq=False)
class DetectionResult:
    statistic: float
    alpha: float
    k_hat: int
    n_obs: int
    level: float
    table: CriticalValueTable
    spectral: SpectralModel
    covariance: LongRunCovarianceEstimate
    process: WeightedEnergyProcess

    @property
    def theta_hat(self) -> float:
        return self.k_hat / self.n_obs

    @property
    def critical_value(self) -> float:
        return self.table.critical_value(self.level)

    @property
    def p_value(self) -> float:
        return self.table.p_value(self.statistic)

    @property
    def rejected(self) -> bool:
        return self.statistic > self.critical_value

    def to_dict(self, n_eigen: int = 10) -> dict:
        lam = self.spectral.eigenvalues
        return {
            "statistic": self.statistic,
            "alpha": self.alpha,
            "n_obs": self.n_obs,
            "k_hat": self.k_hat,
            "theta_hat": self.theta_hat,
            "level": self.level,
            "critical_values": self.table.to_dict(),
            "p_value": self.p_value,
            "rejected": self.rejected,
            "bandwidth": self.covariance.bandwidth,
            "kernel": self.covariance.kernel.name,
            "demeaning": self.covariance.demeaning,
            "m_hat": self.spectral.m_hat,
            "eigenvalues": [float(x) for x in lam[:n_eigen]],
            "eigen_min_gap": self.spectral.min_gap(),
            "sigma2": self.spectral.sigma0_sq,
            "null_reps": self.table.n_reps,
        }


def null_model(
    sample: FunctionalSample, config: DetectionConfig, k_hat: int | None = None
) -> tuple[LongRunCovarianceEstimate, SpectralModel]:
    """Long-run covariance and truncated spectral model used to simulate the null law."""
    cov = estimate_longrun(
        sample,
        KernelSpec(config.kernel),
        config.bandwidth,
        config.demeaning,
        k_hat if config.demeaning == "split_at_khat" else None,
    )
    model = operator_eigenvalues(cov)
    if not np.any(model.eigenvalues > 0):
        # constant data: nothing to simulate beyond a degenerate zero law
        model = replace(model, eigenvalues=np.zeros(1), m_hat=1, cpv_threshold=config.cpv_threshold)
    else:
        model = model.with_m(config.cpv_threshold)
    return cov, model


def mean_change_tests(
    sample: FunctionalSample,
    alphas: Sequence[float],
    config: DetectionConfig = DetectionConfig(),
    key: Sequence[int] = (),
) -> list[DetectionResult]:
    """Run the test for several weight exponents, sharing covariance and null paths where possible.

    ``key`` is appended to the null-simulation stream key so that, e.g., each
    Monte Carlo replication gets its own bridge paths under one master seed.
    """
    sample.require_min_obs()
    alphas = [check_alpha(a) for a in alphas]
    cache = build_cache(sample)
    n = sample.n_obs
    procs = [weighted_process(cache, 0, n, a) for a in alphas]
    n_grid = config.n_grid or max(n, 8)

    # group exponents by the covariance they need (only split demeaning depends on k_hat)
    groups: dict[int | None, list[int]] = {}
    for i, p in enumerate(procs):
        split = p.argmax_k if config.demeaning == "split_at_khat" else None
        groups.setdefault(split, []).append(i)

    results: list[DetectionResult | None] = [None] * len(alphas)
    for split, idx in groups.items():
        cov, model = null_model(sample, config, split)
        tables = tables_for_alphas(
            model, n_grid, config.n_reps, [alphas[i] for i in idx], config.seed, config.workers, config.levels, key
        )
        for i, table in zip(idx, tables):
            p = procs[i]
            results[i] = DetectionResult(p.max_value, alphas[i], p.argmax_k, n, config.level, table, model, cov, p)
    return results  # type: ignore[return-value]


def mean_change_test(
    sample: FunctionalSample, alpha: float = 0.5, config: DetectionConfig = DetectionConfig(), key: Sequence[int] = ()
) -> DetectionResult:
    """Weighted energy test of a constant mean against at least one change."""
    return mean_change_tests(sample, [alpha], config, key)[0]
