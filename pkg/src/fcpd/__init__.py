"""Changepoint detection for functional time series with weighted energy statistics."""

from __future__ import annotations

__version__ = "0.1.0"

from .charfunc import PcaProjection, char_transform, dist_change_test, estimate_pca
from .data import (
    DescriptiveStats,
    FunctionalSample,
    Grid,
    InnerProductCache,
    build_cache,
    descriptive_stats,
    inner_product,
    load_sample,
    save_sample,
)
from .detection import DetectionConfig, DetectionResult, mean_change_test, mean_change_tests
from .energy import (
    BreakdateEstimate,
    WeightedEnergyProcess,
    estimate_breakdate,
    full_process,
    v_profile_fast,
    v_profile_pairwise,
    v_statistic_fast,
    v_statistic_pairwise,
    weighted_process,
)
from .errors import ConfigError, DataError, DegenerateError, DomainError, FcpdError, FormatError
from .longrun import KernelSpec, LongRunCovarianceEstimate, andrews_bandwidth, estimate_longrun
from .nulldist import (
    BreakdateCI,
    CriticalValueTable,
    NullSimConfig,
    XiAlphaModel,
    breakdate_ci,
    p_value,
    simulate_delta_sup,
    simulate_xi_alpha,
)
from .segmentation import SegmentationResult, ThresholdRule, binary_segment, threshold
from .simulation import BreakSpec, DgpSpec, McReport, generate, run_segmentation_study, run_size_power_study
from .spectral import SpectralModel, eigen_decompose, operator_eigenvalues, select_m

__all__ = [
    "__version__",
    "BreakSpec",
    "BreakdateCI",
    "BreakdateEstimate",
    "ConfigError",
    "CriticalValueTable",
    "DataError",
    "DegenerateError",
    "DescriptiveStats",
    "DetectionConfig",
    "DetectionResult",
    "DgpSpec",
    "DomainError",
    "FcpdError",
    "FormatError",
    "FunctionalSample",
    "Grid",
    "InnerProductCache",
    "KernelSpec",
    "LongRunCovarianceEstimate",
    "McReport",
    "NullSimConfig",
    "PcaProjection",
    "SegmentationResult",
    "SpectralModel",
    "ThresholdRule",
    "WeightedEnergyProcess",
    "XiAlphaModel",
    "andrews_bandwidth",
    "binary_segment",
    "breakdate_ci",
    "build_cache",
    "char_transform",
    "descriptive_stats",
    "dist_change_test",
    "eigen_decompose",
    "estimate_breakdate",
    "estimate_longrun",
    "estimate_pca",
    "full_process",
    "generate",
    "inner_product",
    "load_sample",
    "mean_change_test",
    "mean_change_tests",
    "operator_eigenvalues",
    "p_value",
    "run_segmentation_study",
    "run_size_power_study",
    "save_sample",
    "select_m",
    "simulate_delta_sup",
    "simulate_xi_alpha",
    "threshold",
    "v_profile_fast",
    "v_profile_pairwise",
    "v_statistic_fast",
    "v_statistic_pairwise",
    "weighted_process",
]
