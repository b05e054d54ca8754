"""Distributional change via characteristic functions of principal-component scores.

Scalar curves are projected on their leading ``d`` principal components and
each score vector ``xi`` is mapped to the curve ``t -> exp(i <t, xi>)`` on
``[-1, 1]^d``.  A change in the distribution of the scores becomes a change in
the mean of these R^2-valued curves, which the mean-change test detects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import FunctionalSample, Grid
from .detection import DetectionConfig, DetectionResult, mean_change_test
from .errors import ConfigError, DataError
from .spectral import eigen_decompose

__all__ = [
    "PcaProjection",
    "MAX_DIM",
    "estimate_pca",
    "char_grid",
    "char_values",
    "char_transform",
    "dist_change_test",
]

# tensor grids grow like S'^d
MAX_DIM = 3


@dataclass(frozen=True, eq=False)
class PcaProjection:
    """Leading eigenpairs of the sample covariance and the resulting scores.

    Attributes:
        psi_hat: ``(d, S)`` eigenfunctions with ``w * sum(psi**2) == 1``.
        chi_hat: ``(d,)`` eigenvalues, nonincreasing.
        xi_hat: ``(N, d)`` scores.
        centered: whether scores were computed from demeaned curves.
    """

    psi_hat: np.ndarray
    chi_hat: np.ndarray
    xi_hat: np.ndarray
    centered: bool = True

    @property
    def d(self) -> int:
        return self.psi_hat.shape[0]

    @property
    def n_obs(self) -> int:
        return self.xi_hat.shape[0]


def estimate_pca(sample: FunctionalSample, d: int = 1, *, centered: bool = True) -> PcaProjection:
    """Functional PCA of a scalar sample by eigen-decomposition of ``w * C_N``.

    With ``centered=False`` the scores integrate the raw curves against the
    eigenfunctions instead of the demeaned ones.
    """
    if sample.n_components != 1:
        raise DataError("principal components need scalar curves (r = 1)")
    if d < 1:
        raise ConfigError("d must be a positive integer")
    if sample.n_obs < d + 2:
        raise DataError(f"need at least d + 2 = {d + 2} observations, got {sample.n_obs}")
    y = sample.values[:, 0, :]
    dev = y - y.mean(axis=0)
    cov = dev.T @ dev / sample.n_obs
    model = eigen_decompose(cov, sample.weight, vectors=True)
    lam = model.eigenvalues
    tol = 1e-12 * max(float(lam[0]), 1e-300)
    n_pos = int(np.sum(lam > tol))
    if d > n_pos:
        raise ConfigError(f"d = {d} exceeds the {n_pos} positive covariance eigenvalues")
    psi = np.ascontiguousarray(model.eigenvectors[:, :d].T)
    src = dev if centered else y
    scores = src @ psi.T * sample.weight
    for arr in (psi, scores):
        arr.setflags(write=False)
    return PcaProjection(psi, lam[:d].copy(), scores, centered)


def char_grid(n_points: int, d: int = 1) -> Grid:
    """``n_points`` per axis on ``[-1, 1)``: ``t_j = -1 + 2j/n_points``."""
    if n_points < 8:
        raise ConfigError("the characteristic-function grid needs at least 8 points per axis")
    if not (1 <= d <= MAX_DIM):
        raise ConfigError(f"d must lie in 1..{MAX_DIM}")
    return Grid((n_points,) * d, (2.0 / n_points,) * d, (-1.0,) * d)


def char_values(scores: np.ndarray, t_points: np.ndarray) -> np.ndarray:
    """``(cos <t, xi>, sin <t, xi>)`` as an ``(N, 2, P)`` array for ``(P, d)`` points."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    t = np.asarray(t_points, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    if t.shape[1] != scores.shape[1]:
        raise DataError("t points and scores have different dimensions")
    phase = scores @ t.T
    return np.stack([np.cos(phase), np.sin(phase)], axis=1)


def char_transform(projection: PcaProjection, n_points: int = 64) -> FunctionalSample:
    """Characteristic-function curves of the scores on the tensor grid of ``[-1, 1]^d``."""
    grid = char_grid(n_points, projection.d)
    return FunctionalSample(char_values(projection.xi_hat, grid.points()), grid)


def dist_change_test(
    sample: FunctionalSample,
    d: int = 1,
    alpha: float = 0.5,
    config: DetectionConfig = DetectionConfig(),
    *,
    n_points: int = 64,
    centered: bool = True,
    key: Sequence[int] = (),
) -> DetectionResult:
    """Test for a change in distribution of scalar curves."""
    proj = estimate_pca(sample, d, centered=centered)
    return mean_change_test(char_transform(proj, n_points), alpha, config, key)
