"""Binary segmentation with the weighted energy statistic.

Each segment ``(lower, upper)`` is tested with the maximum of its weighted
subsample process against a threshold ``tau`` that grows slowly with the
segment length; on rejection the segment is split at the smallest maximizer
and both halves are visited, left first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import FunctionalSample, build_cache, descriptive_stats, sample_variance
from .detection import DetectionConfig, null_model
from .energy import check_alpha, weighted_process
from .errors import ConfigError, DegenerateError
from .nulldist import tables_for_alphas

__all__ = [
    "ThresholdRule",
    "SplitRecord",
    "SegmentSummary",
    "SegmentationResult",
    "COV_POLICIES",
    "threshold",
    "binary_segment",
    "summarize_segment",
]

RULE_KINDS = ("cv_sqrt_log", "cv_loglog", "cv_log", "fixed")
COV_POLICIES = ("per_segment", "global")

# shortest segment that can still be split; u - l <= 4 stops
_MIN_SPLITTABLE = 5
# ln ln n > 0 needs n > e^e; the rule is only used from 16 on
_LOGLOG_MIN = 16


@dataclass(frozen=True)
class ThresholdRule:
    """How ``tau`` is formed from the segment length ``n`` and a critical value ``c_a``.

    ``cv_sqrt_log``: ``c_a sqrt(ln n)``; ``cv_loglog``: ``c_a ln ln n``;
    ``cv_log``: ``c_a ln n``; ``fixed``: ``fixed_value``.
    """

    kind: str = "cv_loglog"
    level: float = 0.05
    fixed_value: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in RULE_KINDS:
            raise ConfigError(f"unknown threshold rule {self.kind!r}; choose from {RULE_KINDS}")
        if not (0.0 < self.level < 1.0):
            raise ConfigError("threshold level must lie in (0, 1)")
        if self.kind == "fixed":
            if self.fixed_value is None or math.isnan(self.fixed_value):
                raise ConfigError("fixed threshold rule needs fixed_value")

    @property
    def min_length(self) -> int:
        return _LOGLOG_MIN if self.kind == "cv_loglog" else _MIN_SPLITTABLE

    def to_dict(self) -> dict:
        return {"kind": self.kind, "level": self.level, "fixed_value": self.fixed_value}


def threshold(rule: ThresholdRule, n: int, critval: Callable[[], float] | float) -> float:
    """Threshold for a segment of length ``n``.

    ``critval`` is the critical value ``c_a`` or a callable producing it; it is
    not evaluated for the fixed rule.
    """
    if n <= 4:
        raise ConfigError(f"segment length must exceed 4, got {n}")
    if rule.kind == "fixed":
        return float(rule.fixed_value)
    if rule.kind == "cv_loglog" and n < _LOGLOG_MIN:
        raise ConfigError(f"cv_loglog threshold needs n >= {_LOGLOG_MIN}, got {n}")
    c = float(critval() if callable(critval) else critval)
    if rule.kind == "cv_sqrt_log":
        return c * math.sqrt(math.log(n))
    if rule.kind == "cv_loglog":
        return c * math.log(math.log(n))
    return c * math.log(n)


@dataclass(frozen=True)
class SplitRecord:
    """One visited segment.  ``decision`` is ``split``, ``stop`` or ``too_short``."""

    lower: int
    upper: int
    depth: int
    decision: str
    max_stat: float | None = None
    k_hat: int | None = None
    tau: float | None = None
    critval: float | None = None

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "depth": self.depth,
            "decision": self.decision,
            "max_stat": self.max_stat,
            "k_hat": self.k_hat,
            "tau": self.tau,
            "critval": self.critval,
        }


@dataclass(frozen=True)
class SegmentSummary:
    """Descriptive statistics of one estimated regime, observations ``start+1 .. end``."""

    start: int
    end: int
    mean_level: float
    mean_norm: float
    sigma2: float
    skewness: float | None
    kurtosis: float | None

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "mean_summary": {"level": self.mean_level, "norm": self.mean_norm},
            "sigma2": self.sigma2,
            "skew": self.skewness,
            "kurt": self.kurtosis,
        }


@dataclass(frozen=True)
class SegmentationResult:
    changepoints: tuple[int, ...]
    trace: tuple[SplitRecord, ...]
    segments: tuple[SegmentSummary, ...]
    alpha: float
    rule: ThresholdRule
    cov_policy: str
    n_obs: int

    @property
    def R_hat(self) -> int:
        return len(self.changepoints)

    def to_dict(self) -> dict:
        return {
            "changepoints": list(self.changepoints),
            "R_hat": self.R_hat,
            "n_obs": self.n_obs,
            "alpha": self.alpha,
            "rule": self.rule.to_dict(),
            "cov_policy": self.cov_policy,
            "trace": [r.to_dict() for r in self.trace],
            "segments": [s.to_dict() for s in self.segments],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def summarize_segment(sample: FunctionalSample, start: int, end: int) -> SegmentSummary:
    seg = sample.subsample(start, end)
    mean = seg.values.mean(axis=0)
    level = float(mean.mean())
    norm = float(math.sqrt(max(float(np.sum(mean * mean)) * sample.weight, 0.0)))
    var = sample_variance(seg)
    skew = kurt = None
    try:
        st = descriptive_stats(seg)
        skew, kurt = st.skewness, st.kurtosis
    except (DegenerateError, ValueError):
        pass
    return SegmentSummary(start, end, level, norm, var, skew, kurt)


def binary_segment(
    sample: FunctionalSample,
    alpha: float = 0.5,
    rule: ThresholdRule = ThresholdRule(),
    config: DetectionConfig = DetectionConfig(),
    *,
    cov_policy: str = "per_segment",
    min_segment: int = _MIN_SPLITTABLE,
    allow_alpha_zero: bool = False,
    key: Sequence[int] = (),
) -> SegmentationResult:
    """Estimate multiple changepoints by recursive splitting.

    Args:
        alpha: weight exponent; must be positive unless ``allow_alpha_zero``.
        rule: threshold rule; its ``level`` picks the critical value ``c_a``.
        config: covariance, spectral and simulation settings for ``c_a``.
            The null law of a segment is simulated on as many grid points as
            the segment holds; ``split_at_khat`` demeaning splits each
            segment at its own maximizer.
        cov_policy: ``per_segment`` re-estimates the long-run covariance on
            every segment; ``global`` uses the full-sample estimate throughout.
        min_segment: segments shorter than this are not tested (never below 5).
        key: extra stream-key words for the null simulations.
    """
    alpha = check_alpha(alpha)
    if alpha == 0.0 and not allow_alpha_zero:
        raise ConfigError("binary segmentation needs alpha > 0 (pass allow_alpha_zero to override)")
    if cov_policy not in COV_POLICIES:
        raise ConfigError(f"cov_policy must be one of {COV_POLICIES}")
    sample.require_min_obs()
    floor = max(int(min_segment), _MIN_SPLITTABLE, rule.min_length)
    cache = build_cache(sample)
    split_demean = config.demeaning == "split_at_khat"
    global_model = None
    if cov_policy == "global" and rule.kind != "fixed":
        k_full = weighted_process(cache, 0, sample.n_obs, alpha).argmax_k if split_demean else None
        global_model = null_model(sample, config, k_full)[1]

    def critval(lower: int, upper: int, k: int) -> float:
        n = upper - lower
        if global_model is not None:
            model = global_model
        else:
            # split demeaning uses the segment's own candidate break
            model = null_model(sample.subsample(lower, upper), config, k - lower if split_demean else None)[1]
        table = tables_for_alphas(
            model, max(n, 8), config.n_reps, [alpha], config.seed, config.workers, (rule.level,), (*key, lower, upper)
        )[0]
        return table.critical_value(rule.level)

    found: list[int] = []
    trace: list[SplitRecord] = []
    stack: list[tuple[int, int, int]] = [(0, sample.n_obs, 0)]
    while stack:
        lower, upper, depth = stack.pop()
        n = upper - lower
        if n < floor:
            trace.append(SplitRecord(lower, upper, depth, "too_short"))
            continue
        proc = weighted_process(cache, lower, upper, alpha)
        cv = None if rule.kind == "fixed" else critval(lower, upper, proc.argmax_k)
        tau = threshold(rule, n, 0.0 if cv is None else cv)
        split = proc.max_value > tau
        trace.append(
            SplitRecord(lower, upper, depth, "split" if split else "stop", proc.max_value, proc.argmax_k, tau, cv)
        )
        if split:
            k = proc.argmax_k
            found.append(k)
            # push right first so the left child is visited next
            stack.append((k, upper, depth + 1))
            stack.append((lower, k, depth + 1))

    cps = tuple(sorted(found))
    bounds = (0, *cps, sample.n_obs)
    segments = tuple(summarize_segment(sample, a, b) for a, b in zip(bounds[:-1], bounds[1:]))
    return SegmentationResult(cps, tuple(trace), segments, alpha, rule, cov_policy, sample.n_obs)
