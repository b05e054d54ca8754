"""Eigen-decomposition of discretized covariance operators and CPV truncation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DegenerateError

__all__ = ["SpectralModel", "MAX_DIM", "eigen_decompose", "operator_eigenvalues", "select_m", "export_eigenvalues"]

# dense solver guard on r*S
MAX_DIM = 2048


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Eigenvalues (nonincreasing, clipped at zero) of an integral operator.

    Attributes:
        eigenvalues: clipped, sorted eigenvalues.
        raw_eigenvalues: the same before clipping (sum equals ``w * trace``).
        eigenvectors: columns sampled on the grid, normalized so that
            ``w * sum(v**2) == 1``; ``None`` when not requested.
        m_hat: number of retained eigenvalues (``None`` until selected).
        cpv_threshold: threshold used to pick ``m_hat``.
        sigma0_sq: mean squared norm of the demeaned curves.
    """

    eigenvalues: np.ndarray
    raw_eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    sigma0_sq: float
    m_hat: int | None = None
    cpv_threshold: float | None = None

    @property
    def retained(self) -> np.ndarray:
        if self.m_hat is None:
            raise ConfigError("m_hat has not been selected")
        return self.eigenvalues[: self.m_hat]

    def cpv(self) -> np.ndarray:
        cs = np.cumsum(self.eigenvalues)
        total = cs[-1] if cs.size else 0.0
        return cs / total if total > 0 else np.zeros_like(cs)

    def min_gap(self) -> float | None:
        """Smallest gap among the leading ``m_hat + 1`` eigenvalues (separation diagnostic)."""
        m = (self.m_hat or 1) + 1
        lead = self.eigenvalues[:m]
        return float(np.min(-np.diff(lead))) if lead.size > 1 else None

    def with_m(self, threshold: float) -> SpectralModel:
        return replace(self, m_hat=select_m(self, threshold), cpv_threshold=float(threshold))

    @classmethod
    def from_eigenvalues(cls, eigenvalues, sigma0_sq: float, m_hat: int | None = None) -> SpectralModel:
        """Model built directly from known eigenvalues (e.g. for null-law studies)."""
        lam = np.sort(np.asarray(eigenvalues, dtype=np.float64))[::-1]
        clipped = np.clip(lam, 0.0, None)
        return cls(clipped, lam, None, float(sigma0_sq), len(lam) if m_hat is None else m_hat)


def eigen_decompose(
    matrix: np.ndarray, weight: float, sigma0_sq: float = 0.0, *, vectors: bool = False, sym_tol: float = 1e-8
) -> SpectralModel:
    """Nyström eigenpairs of the operator with kernel ``matrix`` and cell weight ``weight``."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"covariance matrix must be square, got {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise DataError(f"operator dimension {a.shape[0]} exceeds {MAX_DIM}; subsample the grid")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0 and float(np.max(np.abs(a - a.T))) > sym_tol * scale:
        raise DataError("covariance matrix is not symmetric")
    aw = 0.5 * (a + a.T) * weight
    if vectors:
        lam, vec = np.linalg.eigh(aw)
        order = np.argsort(lam)[::-1]
        lam = lam[order]
        vec = vec[:, order] / np.sqrt(weight)
    else:
        lam = np.linalg.eigvalsh(aw)[::-1]
        vec = None
    raw = lam.copy()
    clipped = np.clip(lam, 0.0, None)
    return SpectralModel(clipped, raw, vec, float(sigma0_sq))


def operator_eigenvalues(cov, *, vectors: bool = False) -> SpectralModel:
    """Eigenvalues of ``phi -> int D(., s) phi(s) ds`` for a long-run covariance estimate."""
    return eigen_decompose(cov.matrix, cov.quad_weight, cov.sigma0_sq, vectors=vectors)


def select_m(model: SpectralModel, cpv_threshold: float) -> int:
    """Smallest ``M`` whose leading eigenvalues explain ``cpv_threshold`` of the total."""
    thr = float(cpv_threshold)
    if not (0.0 < thr <= 1.0):
        raise ConfigError(f"CPV threshold must lie in (0, 1], got {thr}")
    lam = model.eigenvalues
    cs = np.cumsum(lam)
    total = cs[-1] if cs.size else 0.0
    if not total > 0.0:
        raise DegenerateError("all eigenvalues are zero")
    return int(np.argmax(cs / total >= thr)) + 1


def export_eigenvalues(model: SpectralModel, path: str | Path) -> None:
    """Scree data: ``index, eigenvalue, cpv``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue", "cpv"])
        for i, (lam, c) in enumerate(zip(model.eigenvalues, model.cpv()), start=1):
            writer.writerow([i, repr(float(lam)), repr(float(c))])
