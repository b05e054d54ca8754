"""Synthetic functional time series and Monte Carlo size/power/segmentation studies.

Curves follow a truncated Karhunen-Loeve model on ``[0, 1]``::

    X_i(t) = mu_i(t) + sum_l lambda_l^(1/2) Z_{l,i} phi_l(t) + nu_i(t)

with a Fourier basis ``phi_l``, eigenvalues ``lambda_l = exp(-(l-1)/2)``,
AR(1) scores and Gaussian measurement error.  Break positions count the
observations before the change: a break at ``k`` alters observations
``k+1, k+2, ...`` (1-based).
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ._rng import map_reps, stream
from .charfunc import char_transform, estimate_pca
from .data import FunctionalSample, Grid
from .detection import DetectionConfig, mean_change_tests
from .errors import ConfigError
from .segmentation import ThresholdRule, binary_segment

__all__ = [
    "BreakSpec",
    "DgpSpec",
    "McReport",
    "BREAK_KINDS",
    "fourier_basis",
    "exp_decay_eigenvalues",
    "generate",
    "run_size_power_study",
    "run_segmentation_study",
]

BREAK_KINDS = ("none", "amoc", "multi", "dist_mean", "dist_var", "dist_tail", "epidemic")
SCORE_MODES = ("literal", "unit_variance")

# number of break indices / shift levels each kind expects
_ARITY = {
    "none": (0, 0),
    "amoc": (1, 1),
    "multi": (None, None),
    "dist_mean": (1, 1),
    "dist_var": (1, 0),
    "dist_tail": (1, 0),
    "epidemic": (2, 0),
}


@dataclass(frozen=True)
class BreakSpec:
    """Where and how the data change.

    ``amoc``/``dist_mean``: constant shift ``shifts[0]`` after ``breaks[0]``.
    ``multi``: piecewise constant mean with levels ``shifts`` between
    ``breaks`` (one more level than breaks).  ``dist_var``: scores doubled in
    scale after the break.  ``dist_tail``: t(3) scores after the break.
    ``epidemic``: t(3) scores between ``breaks[0]`` and ``breaks[1]``.
    """

    kind: str = "none"
    breaks: tuple[int, ...] = ()
    shifts: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in BREAK_KINDS:
            raise ConfigError(f"unknown break kind {self.kind!r}; choose from {BREAK_KINDS}")
        breaks = tuple(int(b) for b in self.breaks)
        shifts = tuple(float(s) for s in self.shifts)
        nb, ns = _ARITY[self.kind]
        if self.kind == "multi":
            if not breaks or len(shifts) != len(breaks) + 1:
                raise ConfigError("multi breaks need len(shifts) == len(breaks) + 1 >= 2")
        elif len(breaks) != nb or len(shifts) != ns:
            raise ConfigError(f"{self.kind} needs {nb} break(s) and {ns} shift(s)")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ConfigError("breaks must be strictly increasing")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "shifts", shifts)

    @classmethod
    def amoc(cls, k: int, delta: float) -> BreakSpec:
        return cls("amoc", (k,), (delta,))

    @classmethod
    def mean_seg(cls, n_obs: int, levels: Sequence[float] = (0.0, 2.0, 3.0)) -> BreakSpec:
        """Two mean changes at ``floor(0.35 N)`` and ``floor(0.7 N)``."""
        return cls("multi", (math.floor(0.35 * n_obs), math.floor(0.7 * n_obs)), tuple(levels))

    @classmethod
    def epidemic(cls, n_obs: int) -> BreakSpec:
        """Heavy-tailed regime between ``floor(0.35 N)`` and ``floor(0.7 N)``."""
        return cls("epidemic", (math.floor(0.35 * n_obs), math.floor(0.7 * n_obs)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "breaks": list(self.breaks), "shifts": list(self.shifts)}


@dataclass(frozen=True)
class DgpSpec:
    """Data-generating process for one Monte Carlo cell.

    ``score_mode="literal"`` runs ``Z_i = rho Z_{i-1} + e_i`` with unit
    innovations (stationary variance ``1/(1-rho^2)``); ``unit_variance``
    scales the innovations by ``sqrt(1-rho^2)``.  Measurement error is
    pointwise ``N(0, sigma_nu_sq / (w S))`` so that ``E||nu||^2 = sigma_nu_sq``.
    """

    n_obs: int
    n_points: int = 128
    n_basis: int = 40
    rho: float = 0.0
    sigma_nu_sq: float = 0.0
    breaks: BreakSpec = field(default_factory=BreakSpec)
    eigen_law: str = "exp_decay"
    score_mode: str = "literal"
    burn_in: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.breaks, dict):
            object.__setattr__(self, "breaks", BreakSpec(**self.breaks))
        if self.n_obs < 5 or self.n_points < 2 or self.n_basis < 1:
            raise ConfigError("need n_obs >= 5, n_points >= 2 and n_basis >= 1")
        if not (-1.0 < self.rho < 1.0):
            raise ConfigError("rho must lie in (-1, 1)")
        if not (self.sigma_nu_sq >= 0.0):
            raise ConfigError("sigma_nu_sq must be non-negative")
        if 2 * (self.n_basis // 2) >= self.n_points:
            raise ConfigError(f"{self.n_basis} Fourier functions need more than {2 * (self.n_basis // 2)} grid points")
        if self.eigen_law != "exp_decay":
            raise ConfigError("only the exp_decay eigenvalue law is available")
        if self.score_mode not in SCORE_MODES:
            raise ConfigError(f"score_mode must be one of {SCORE_MODES}")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")
        if any(not (2 < b < self.n_obs - 2) for b in self.breaks.breaks):
            raise ConfigError(f"break indices must lie strictly between 2 and N-2 = {self.n_obs - 2}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["breaks"] = self.breaks.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DgpSpec:
        d = dict(d)
        if "breaks" in d and isinstance(d["breaks"], dict):
            d["breaks"] = BreakSpec(**d["breaks"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"invalid DGP specification: {exc}") from exc


def exp_decay_eigenvalues(m: int) -> np.ndarray:
    return np.exp(-np.arange(m) / 2.0)


def fourier_basis(m: int, n_points: int) -> np.ndarray:
    """``(m, S)`` orthonormal Fourier functions on the left-endpoint grid ``j/S``.

    ``phi_1 = 1``, ``phi_{2j} = sqrt(2) sin(2 pi j t)``,
    ``phi_{2j+1} = sqrt(2) cos(2 pi j t)``; exactly orthonormal under the
    Riemann sum as long as the highest frequency stays below ``S/2``.
    """
    if 2 * (m // 2) >= n_points:
        raise ConfigError(f"{m} Fourier functions are not orthonormal on {n_points} grid points")
    t = np.arange(n_points) / n_points
    out = np.empty((m, n_points))
    out[0] = 1.0
    for idx in range(1, m):
        j = (idx + 1) // 2
        f = np.sin if idx % 2 == 1 else np.cos
        out[idx] = math.sqrt(2.0) * f(2.0 * math.pi * j * t)
    return out


def _mean_levels(spec: DgpSpec) -> np.ndarray:
    n = spec.n_obs
    b = spec.breaks
    mu = np.zeros(n)
    if b.kind in ("amoc", "dist_mean"):
        mu[b.breaks[0]:] = b.shifts[0]
    elif b.kind == "multi":
        edges = (0, *b.breaks, n)
        for lvl, lo, hi in zip(b.shifts, edges[:-1], edges[1:]):
            mu[lo:hi] = lvl
    return mu


def generate(spec: DgpSpec, rep: int = 0) -> FunctionalSample:
    """Replication ``rep`` of the DGP; bitwise reproducible for fixed ``(spec, rep)``."""
    rng = stream(spec.seed, "dgp", rep)
    n, m, s = spec.n_obs, spec.n_basis, spec.n_points
    b = spec.breaks
    total = spec.burn_in + n
    innov = rng.standard_normal((total, m))
    tails = rng.standard_t(3, size=(n, m)) if b.kind in ("dist_tail", "epidemic") else None
    if tails is not None:
        lo, hi = (b.breaks[0], n) if b.kind == "dist_tail" else b.breaks
        innov[spec.burn_in + lo: spec.burn_in + hi] = tails[lo:hi]
    if b.kind == "dist_var":
        innov[spec.burn_in + b.breaks[0]:] *= 2.0
    scale = math.sqrt(1.0 - spec.rho**2) if spec.score_mode == "unit_variance" else 1.0
    if spec.rho == 0.0:
        z = innov[spec.burn_in:] * scale
    else:
        z = np.empty_like(innov)
        prev = np.zeros(m)
        for i in range(total):
            prev = spec.rho * prev + scale * innov[i]
            z[i] = prev
        z = z[spec.burn_in:]
    lam = exp_decay_eigenvalues(m)
    basis = fourier_basis(m, s)
    grid = Grid.unit(s)
    x = (z * np.sqrt(lam)) @ basis
    x += _mean_levels(spec)[:, None]
    if spec.sigma_nu_sq > 0:
        sd = math.sqrt(spec.sigma_nu_sq / (grid.weight * s))
        x += sd * rng.standard_normal((n, s))
    return FunctionalSample(x, grid)


# ---------------------------------------------------------------------------
# Monte Carlo drivers


def _summary(values: Sequence[float]) -> dict | None:
    if len(values) == 0:
        return None
    a = np.asarray(values, dtype=np.float64)
    return {"median": float(np.median(a)), "mean": float(a.mean()), "min": float(a.min()), "max": float(a.max())}


@dataclass(frozen=True)
class McReport:
    """Aggregated Monte Carlo results plus the per-replication records."""

    config: dict
    n_reps: int
    kind: str
    summary: dict
    records: tuple[dict, ...]
    runtime: float = 0.0

    def to_dict(self, include_runtime: bool = False, include_records: bool = False) -> dict:
        d = {"config": self.config, "n_reps": self.n_reps, "kind": self.kind, "summary": self.summary}
        if include_runtime:
            d["runtime"] = self.runtime
        if include_records:
            d["records"] = list(self.records)
        return d

    def save(self, path: str | Path, include_runtime: bool = False) -> None:
        text = json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True)
        Path(path).write_text(text + "\n", encoding="utf-8")

    def save_records(self, path: str | Path) -> None:
        if not self.records:
            return
        keys = sorted(self.records[0])
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for rec in self.records:
                writer.writerow({k: json.dumps(v) if isinstance(v, (list, tuple)) else v for k, v in rec.items()})


def _as_char(sample: FunctionalSample, d: int, n_points: int) -> FunctionalSample:
    return char_transform(estimate_pca(sample, d), n_points)


def run_size_power_study(
    spec: DgpSpec,
    alphas: Sequence[float],
    config: DetectionConfig = DetectionConfig(),
    n_reps: int = 1000,
    *,
    mode: str = "mean",
    d: int = 1,
    n_char_points: int = 64,
    workers: int = 1,
) -> McReport:
    """Rejection frequencies and breakdate summaries over ``n_reps`` replications.

    ``mode="dist"`` runs the distributional test (PCA + characteristic
    function) instead of the mean test.  Breakdate summaries use rejected
    replications only.
    """
    if mode not in ("mean", "dist"):
        raise ConfigError("mode must be 'mean' or 'dist'")
    if n_reps < 1:
        raise ConfigError("n_reps must be positive")
    alphas = [float(a) for a in alphas]
    inner = replace(config, workers=1)

    def one(rep: int) -> dict:
        sample = generate(spec, rep)
        if mode == "dist":
            sample = _as_char(sample, d, n_char_points)
        res = mean_change_tests(sample, alphas, inner, key=(rep,))
        return {
            "rep": rep,
            "statistic": [r.statistic for r in res],
            "k_hat": [r.k_hat for r in res],
            "p_value": [r.p_value for r in res],
            "rejected": [[r.statistic > r.table.critical_value(a) for a in inner.levels] for r in res],
        }

    t0 = time.perf_counter()
    records = map_reps(one, n_reps, workers)
    runtime = time.perf_counter() - t0

    summary: dict = {}
    for ia, a in enumerate(alphas):
        rej = {f"{lv:g}": float(np.mean([rec["rejected"][ia][il] for rec in records])) for il, lv in enumerate(inner.levels)}
        il = inner.levels.index(inner.level)
        kh = [rec["k_hat"][ia] for rec in records if rec["rejected"][ia][il]]
        summary[f"{a:g}"] = {
            "rejection_frequency": rej,
            "k_hat_rejected": _summary(kh),
            "k_hat_all": _summary([rec["k_hat"][ia] for rec in records]),
        }
    cfg = {"dgp": spec.to_dict(), "detection": inner.to_dict(), "alphas": alphas, "mode": mode}
    if mode == "dist":
        cfg.update(d=d, n_char_points=n_char_points)
    return McReport(cfg, n_reps, "size_power", summary, tuple(records), runtime)


def run_segmentation_study(
    spec: DgpSpec,
    alpha: float,
    rule: ThresholdRule = ThresholdRule(),
    config: DetectionConfig = DetectionConfig(),
    n_reps: int = 500,
    *,
    mode: str = "mean",
    d: int = 1,
    n_char_points: int = 64,
    cov_policy: str = "per_segment",
    min_segment: int = 5,
    workers: int = 1,
) -> McReport:
    """Distribution of the estimated number of changepoints and of their positions.

    Breakdate medians are taken over replications that found exactly as many
    changepoints as the DGP has.
    """
    if mode not in ("mean", "dist"):
        raise ConfigError("mode must be 'mean' or 'dist'")
    inner = replace(config, workers=1)
    n_true = len(spec.breaks.breaks) if spec.breaks.kind in ("multi", "epidemic") else (0 if spec.breaks.kind == "none" else 1)

    def one(rep: int) -> dict:
        sample = generate(spec, rep)
        if mode == "dist":
            sample = _as_char(sample, d, n_char_points)
        res = binary_segment(
            sample, alpha, rule, inner, cov_policy=cov_policy, min_segment=min_segment, key=(rep,)
        )
        return {"rep": rep, "R_hat": res.R_hat, "changepoints": list(res.changepoints)}

    t0 = time.perf_counter()
    records = map_reps(one, n_reps, workers)
    runtime = time.perf_counter() - t0

    r_hat = [rec["R_hat"] for rec in records]
    exact = [rec["changepoints"] for rec in records if rec["R_hat"] == n_true]
    counts = {str(k): int(v) for k, v in zip(*np.unique(r_hat, return_counts=True))}
    summary = {
        "R_hat": _summary(r_hat),
        "R_hat_counts": counts,
        "n_exact": len(exact),
        "median_breakdates": [float(x) for x in np.median(np.asarray(exact), axis=0)] if exact and n_true else [],
    }
    cfg = {
        "dgp": spec.to_dict(),
        "detection": inner.to_dict(),
        "alpha": float(alpha),
        "rule": rule.to_dict(),
        "mode": mode,
        "cov_policy": cov_policy,
        "min_segment": min_segment,
    }
    if mode == "dist":
        cfg.update(d=d, n_char_points=n_char_points)
    return McReport(cfg, n_reps, "segmentation", summary, tuple(records), runtime)
