"""Discretized functional samples, file ingestion and basic summaries.

A curve is stored as an ``(r, S)`` array: ``r`` components sampled on the
``S`` points of a rectangular grid (flattened in row-major order when the
domain has more than one axis).  Integrals are left-Riemann sums with the
uniform weight ``w = prod(spacing)``, so every statistic in the package only
ever sees the data through :func:`inner_product`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, DegenerateError, FormatError

__all__ = [
    "Grid",
    "FunctionalSample",
    "InnerProductCache",
    "DescriptiveStats",
    "MIN_OBS",
    "load_sample",
    "save_sample",
    "inner_product",
    "build_cache",
    "sample_variance",
    "descriptive_stats",
]

# smallest sample for which a subsample split 2 <= k <= N-2 exists
MIN_OBS = 5


@dataclass(frozen=True)
class Grid:
    """Rectangular sampling grid.

    Attributes:
        points_per_axis: Number of sampling points along each axis.
        spacing: Distance between neighbouring points along each axis.
        origin: Coordinate of the first point along each axis.
    """

    points_per_axis: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        ppa = tuple(int(p) for p in self.points_per_axis)
        sp = tuple(float(s) for s in self.spacing)
        if not ppa or len(ppa) != len(sp):
            raise DataError("points_per_axis and spacing must be non-empty and of equal length")
        if any(p < 1 for p in ppa):
            raise DataError("points_per_axis must be positive")
        if any(not (math.isfinite(s) and s > 0) for s in sp):
            raise DataError("grid spacings must be finite and strictly positive")
        if math.prod(ppa) < 2:
            raise DataError("a grid needs at least two points")
        org = (0.0,) * len(ppa) if self.origin is None else tuple(float(o) for o in self.origin)
        if len(org) != len(ppa):
            raise DataError("origin must have one entry per axis")
        object.__setattr__(self, "points_per_axis", ppa)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "origin", org)

    @classmethod
    def unit(cls, n_points: int, dim: int = 1) -> Grid:
        """Uniform grid on ``[0, 1]^dim`` with ``n_points`` per axis."""
        return cls((n_points,) * dim, (1.0 / n_points,) * dim)

    @property
    def dim(self) -> int:
        return len(self.points_per_axis)

    @property
    def size(self) -> int:
        return math.prod(self.points_per_axis)

    @property
    def weight(self) -> float:
        """Quadrature weight of a single grid cell."""
        return math.prod(self.spacing)

    def axes(self) -> list[np.ndarray]:
        return [o + s * np.arange(p) for p, s, o in zip(self.points_per_axis, self.spacing, self.origin)]

    def points(self) -> np.ndarray:
        """Coordinates of all grid points, shape ``(S, dim)``, row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points_per_axis": list(self.points_per_axis),
            "spacing": list(self.spacing),
            "origin": list(self.origin),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Grid:
        try:
            ppa = [int(p) for p in d["points_per_axis"]]
            sp = [float(s) for s in d["spacing"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"invalid grid metadata: {exc}") from exc
        if "dim" in d and int(d["dim"]) != len(ppa):
            raise FormatError("grid.dim disagrees with points_per_axis")
        return cls(tuple(ppa), tuple(sp), tuple(d["origin"]) if d.get("origin") is not None else None)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``N`` curves with ``r`` components sampled on a common grid.

    ``values`` has shape ``(N, r, S)``.  The array is copied and made
    read-only on construction.
    """

    values: np.ndarray
    grid: Grid
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim == 2:
            vals = vals[:, None, :]
        if vals.ndim != 3:
            raise DataError(f"values must have shape (N, r, S), got {vals.shape}")
        if vals.shape[2] != self.grid.size:
            raise DataError(f"curves have {vals.shape[2]} points but the grid has {self.grid.size}")
        if vals.shape[0] < 1 or vals.shape[1] < 1:
            raise DataError("sample must contain at least one curve with one component")
        if not np.all(np.isfinite(vals)):
            bad = int(np.argwhere(~np.isfinite(vals))[0, 0])
            raise DataError(f"non-finite value in observation {bad}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != vals.shape[0]:
                raise DataError("labels must have one entry per observation")
            object.__setattr__(self, "labels", labels)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    @property
    def n_points(self) -> int:
        return self.values.shape[2]

    @property
    def weight(self) -> float:
        return self.grid.weight

    def flat(self) -> np.ndarray:
        """Curves as an ``(N, r*S)`` matrix (component-major)."""
        return self.values.reshape(self.n_obs, -1)

    def require_min_obs(self, n: int = MIN_OBS) -> None:
        if self.n_obs < n:
            raise DataError(f"need at least {n} observations, got {self.n_obs}")

    def subsample(self, start: int, stop: int) -> FunctionalSample:
        """Observations ``start+1 .. stop`` (1-based), i.e. ``values[start:stop]``."""
        labels = None if self.labels is None else self.labels[start:stop]
        return FunctionalSample(self.values[start:stop], self.grid, labels)

    def with_values(self, values: np.ndarray) -> FunctionalSample:
        return FunctionalSample(values, self.grid, self.labels)


def inner_product(x: np.ndarray, y: np.ndarray, grid: Grid) -> float:
    """Quadrature inner product ``sum_c sum_j x[c, j] y[c, j] * w``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.shape[-1] != grid.size:
        raise DataError(f"curve has {x.shape[-1]} points but the grid has {grid.size}")
    return float(np.dot(x.ravel(), y.ravel()) * grid.weight)


@dataclass(frozen=True, eq=False)
class InnerProductCache:
    """Prefix sums that make every ``V^{(l,u)}(k)`` an O(r*S) computation.

    Attributes:
        squared_norms: ``||X_i||^2`` for each observation, shape ``(N,)``.
        prefix_sums: ``S_k = X_1 + ... + X_k`` with ``S_0 = 0``, shape ``(N+1, r*S)``.
        prefix_sq_norms: running sums of ``squared_norms``, shape ``(N+1,)``.
        weight: quadrature weight of the grid.
    """

    squared_norms: np.ndarray
    prefix_sums: np.ndarray
    prefix_sq_norms: np.ndarray
    weight: float

    @property
    def n_obs(self) -> int:
        return self.squared_norms.shape[0]


def _compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Neumaier-compensated running sum along axis 0, with a leading zero row."""
    out = np.zeros((x.shape[0] + 1,) + x.shape[1:])
    s = np.zeros(x.shape[1:])
    c = np.zeros(x.shape[1:])
    for i in range(x.shape[0]):
        xi = x[i]
        t = s + xi
        big = np.abs(s) >= np.abs(xi)
        c += np.where(big, (s - t) + xi, (xi - t) + s)
        s = t
        out[i + 1] = s + c
    return out


def build_cache(sample: FunctionalSample) -> InnerProductCache:
    flat = sample.flat()
    w = sample.weight
    sq = np.einsum("ij,ij->i", flat, flat) * w
    prefix = _compensated_cumsum(flat)
    prefix_sq = _compensated_cumsum(sq)
    for arr in (sq, prefix, prefix_sq):
        arr.setflags(write=False)
    return InnerProductCache(sq, prefix, prefix_sq, w)


def sample_variance(sample: FunctionalSample) -> float:
    """``N^-1 sum ||X_i - mean||^2``."""
    flat = sample.flat()
    dev = flat - flat.mean(axis=0)
    return float(np.einsum("ij,ij->", dev, dev) * sample.weight / sample.n_obs)


@dataclass(frozen=True)
class DescriptiveStats:
    variance: float
    skewness: float | None
    kurtosis: float | None

    def to_dict(self) -> dict:
        return {"sigma2": self.variance, "skewness": self.skewness, "kurtosis": self.kurtosis}


def descriptive_stats(sample: FunctionalSample) -> DescriptiveStats:
    """Variance plus grid-averaged pointwise skewness and kurtosis.

    Skewness and kurtosis are only defined for scalar curves (``r = 1``) and
    are reported as ``None`` otherwise.

    Raises:
        DataError: fewer than three observations.
        DegenerateError: some grid point has zero sample variance; the
            variance is still available as ``err.partial["variance"]``.
    """
    if sample.n_obs < 3:
        raise DataError("descriptive statistics need at least 3 observations")
    var = sample_variance(sample)
    if sample.n_components != 1:
        return DescriptiveStats(var, None, None)
    y = sample.values[:, 0, :]
    dev = y - y.mean(axis=0)
    m2 = np.mean(dev**2, axis=0)
    scale = np.max(np.abs(y), axis=0)
    if np.any(m2 <= (1e-12 * np.maximum(scale, 1e-300)) ** 2):
        raise DegenerateError("zero pointwise variance; skewness/kurtosis undefined", variance=var)
    skew = float(np.mean(np.mean(dev**3, axis=0) / m2**1.5))
    kurt = float(np.mean(np.mean(dev**4, axis=0) / m2**2))
    return DescriptiveStats(var, skew, kurt)


# ---------------------------------------------------------------------------
# file formats


def _parse_float(tok: str, row: int, col: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"row {row}, column {col}: cannot parse {tok!r} as a number") from None


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _finish(values: np.ndarray, grid: Grid, labels: Sequence[str] | None, min_obs: int) -> FunctionalSample:
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0, 0])
        raise DataError(f"non-finite value in observation {bad}")
    sample = FunctionalSample(values, grid, tuple(labels) if labels is not None else None)
    sample.require_min_obs(min_obs)
    return sample


def _load_csv(path: Path, n_components: int, has_labels: bool | None, min_obs: int) -> FunctionalSample:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(tok.strip() for tok in r)]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    rows = [[tok.strip() for tok in r] for r in rows]
    if has_labels is None:
        # the last row is never a header; a non-numeric first field marks a label column
        has_labels = not _is_number(rows[-1][0])
    start = 1 if has_labels else 0
    if not all(_is_number(t) for t in rows[0][start:]):
        rows = rows[1:]  # header
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(rows[0])
    labels: list[str] | None = [] if has_labels else None
    data = []
    for i, r in enumerate(rows):
        if len(r) != width:
            raise FormatError(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
        if labels is not None:
            labels.append(r[0])
        data.append([_parse_float(t, i + 1, j) for j, t in enumerate(r[start:], start=start)])
    arr = np.asarray(data, dtype=np.float64)
    n_cols = arr.shape[1]
    if n_cols % n_components:
        raise FormatError(f"{path}: {n_cols} value columns not divisible by r={n_components}")
    s = n_cols // n_components
    return _finish(arr.reshape(len(data), n_components, s), Grid.unit(s), labels, min_obs)


def _load_json(path: Path, min_obs: int) -> FunctionalSample:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "values" not in doc:
        raise FormatError(f"{path}: expected an object with a 'values' field")
    r = int(doc.get("r", 1))
    raw = doc["values"]
    if not isinstance(raw, list) or not raw:
        raise FormatError(f"{path}: 'values' must be a non-empty list")
    try:
        if isinstance(raw[0], list) and raw[0] and isinstance(raw[0][0], list):
            if any(len(obs) != r for obs in raw) or len({len(c) for obs in raw for c in obs}) != 1:
                raise FormatError(f"{path}: ragged nested values")
            arr = np.asarray(raw, dtype=np.float64)
        else:
            widths = {len(obs) for obs in raw}
            if len(widths) != 1:
                raise FormatError(f"{path}: ragged rows in 'values'")
            flat = np.asarray(raw, dtype=np.float64)
            if flat.shape[1] % r:
                raise FormatError(f"{path}: row length {flat.shape[1]} not divisible by r={r}")
            arr = flat.reshape(flat.shape[0], r, -1)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: non-numeric entry in 'values' ({exc})") from exc
    grid = Grid.from_dict(doc["grid"]) if doc.get("grid") else Grid.unit(arr.shape[2])
    return _finish(arr, grid, doc.get("labels"), min_obs)


def load_sample(
    path: str | Path,
    format: str | None = None,
    *,
    n_components: int = 1,
    has_labels: bool | None = None,
    min_obs: int = MIN_OBS,
) -> FunctionalSample:
    """Read a sample from ``csv_rows`` or ``json`` format.

    CSV files carry one curve per row with ``r*S`` component-major columns,
    an optional header and an optional leading label column.  Without grid
    metadata the domain is ``[0, 1]`` with spacing ``1/S``.  ``format`` is
    inferred from the file suffix when omitted.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv_rows"
    if format == "csv_rows":
        return _load_csv(path, n_components, has_labels, min_obs)
    if format == "json":
        return _load_json(path, min_obs)
    raise FormatError(f"unknown sample format {format!r}")


def save_sample(sample: FunctionalSample, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv_rows"
    if format == "json":
        doc = {
            "grid": sample.grid.to_dict(),
            "r": sample.n_components,
            "values": sample.flat().tolist(),
        }
        if sample.labels is not None:
            doc["labels"] = list(sample.labels)
        path.write_text(json.dumps(doc), encoding="utf-8")
    elif format == "csv_rows":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for i, row in enumerate(sample.flat()):
                cells = [repr(float(v)) for v in row]
                writer.writerow(([sample.labels[i]] if sample.labels else []) + cells)
    else:
        raise FormatError(f"unknown sample format {format!r}")
