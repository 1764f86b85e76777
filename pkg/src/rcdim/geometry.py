"""Point clouds, neighbour counting at a radius, and correlation-integral baselines.

All distance work goes through squared Euclidean distances accumulated one
coordinate at a time, so every code path (brute force, grid, pair counting)
produces bit-identical distances for the same pair of points.
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from rcdim.errors import (
    DegenerateCloud,
    DegenerateGraph,
    IndexOutOfRange,
    InvalidParameter,
    InvalidRadius,
    SaturatedGraph,
)

# rows x points block size for the brute-force kernel
_BLOCK_ELEMS = 1 << 21
_GRID_PAD = 1e-7
_GRID_MAX_CELLS = 10**7
_GRID_MIN_ROWS = 512


@dataclass(frozen=True)
class Metric:
    """Distance used to build the neighbourhood graphs. Only Euclidean exists."""

    kind: str = "euclidean"

    def __post_init__(self):
        if self.kind != "euclidean":
            raise InvalidParameter(f"unsupported metric {self.kind!r}")

    def distance(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return math.sqrt(float(np.sum((x - y) ** 2)))


EUCLIDEAN = Metric()


class PointCloud:
    """``n`` design points in ``R^D`` stored as a read-only ``(n, D)`` float array."""

    def __init__(self, points):
        arr = np.array(points, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise InvalidParameter("points must form an (n, D) array with D >= 1")
        if arr.shape[0] < 1:
            raise InvalidParameter("a point cloud needs at least one point")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter("coordinates must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"PointCloud(n={self.n}, D={self.dim})"

    def scaled(self, factor: float) -> "PointCloud":
        return PointCloud(self._points * factor)

    def permuted(self, perm) -> "PointCloud":
        return PointCloud(self._points[np.asarray(perm)])


@dataclass(frozen=True)
class DegreeProfile:
    """Neighbour counts of the sampled rows at one radius."""

    radius: float
    rows: np.ndarray
    degrees: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class AdjacencyRows:
    """Sorted neighbour index lists of the sampled rows at one radius."""

    radius: float
    rows: np.ndarray
    neighbors: list

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)


def _as_cloud(cloud) -> PointCloud:
    return cloud if isinstance(cloud, PointCloud) else PointCloud(cloud)


def _check_radius(radius) -> float:
    try:
        r = float(radius)
    except (TypeError, ValueError):
        raise InvalidRadius(f"radius must be a real number, got {radius!r}") from None
    if not math.isfinite(r) or r <= 0:
        raise InvalidRadius(f"radius must be positive and finite, got {radius!r}")
    return r


def _check_rows(rows, n: int) -> np.ndarray:
    if rows is None:
        return np.arange(n, dtype=np.int64)
    rows = np.asarray(rows)
    if rows.ndim != 1:
        raise InvalidParameter("rows must be a flat list of vertex indices")
    if rows.size and not np.issubdtype(rows.dtype, np.integer):
        if not np.all(np.equal(np.mod(rows, 1), 0)):
            raise InvalidParameter("row indices must be integers")
    rows = rows.astype(np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= n):
        bad = rows[(rows < 0) | (rows >= n)][0]
        raise IndexOutOfRange(f"row index {bad} outside [0, {n})")
    if np.unique(rows).size != rows.size:
        raise InvalidParameter("row indices must be distinct")
    return rows


def _check_metric(metric) -> Metric:
    if metric is None:
        return EUCLIDEAN
    if isinstance(metric, str):
        return Metric(metric)
    return metric


def squared_distances(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Squared distances between ``queries`` (q, D) and ``points`` (p, D) as a (q, p) array."""
    out = np.zeros((queries.shape[0], points.shape[0]), dtype=np.float64)
    for k in range(points.shape[1]):
        diff = points[None, :, k] - queries[:, k, None]
        diff *= diff
        out += diff
    return out


# -- brute force ------------------------------------------------------------

def _brute_counts(points, rows, radii_sq):
    n = points.shape[0]
    counts = np.zeros((len(radii_sq), len(rows)), dtype=np.int64)
    if len(rows) == 0:
        return counts
    row_batch = max(1, min(len(rows), _BLOCK_ELEMS // max(n, 1)))
    col_batch = max(1, _BLOCK_ELEMS // row_batch)
    for r0 in range(0, len(rows), row_batch):
        q = points[rows[r0:r0 + row_batch]]
        for c0 in range(0, n, col_batch):
            d2 = squared_distances(points[c0:c0 + col_batch], q)
            for a, rsq in enumerate(radii_sq):
                counts[a, r0:r0 + len(q)] += np.count_nonzero(d2 <= rsq, axis=1)
    # the row itself sits at distance 0
    counts -= 1
    return counts


def _brute_neighbors(points, rows, radius_sq):
    n = points.shape[0]
    col_batch = max(1, _BLOCK_ELEMS)
    out = []
    for i in rows:
        parts = []
        for c0 in range(0, n, col_batch):
            d2 = squared_distances(points[c0:c0 + col_batch], points[i:i + 1])[0]
            idx = np.flatnonzero(d2 <= radius_sq) + c0
            parts.append(idx)
        idx = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        out.append(idx[idx != i].astype(np.int64))
    return out


# -- uniform grid -----------------------------------------------------------

class _Grid:
    """Uniform bucketing with cells slightly wider than the largest query radius.

    Only prunes candidates; every candidate is re-checked by exact distance.
    """

    def __init__(self, points: np.ndarray, width: float):
        self.points = points
        self.width = width * (1.0 + _GRID_PAD)
        self.origin = points.min(axis=0)
        cells = np.floor((points - self.origin) / self.width).astype(np.int64)
        # pad by one cell on each side so neighbour offsets never go negative
        self.shape = cells.max(axis=0) + 3
        keys = np.ravel_multi_index((cells + 1).T, self.shape)
        self.order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[self.order]
        self.cells = cells
        dim = points.shape[1]
        self.offsets = np.array(list(itertools.product((-1, 0, 1), repeat=dim)), dtype=np.int64)

    @staticmethod
    def feasible(points: np.ndarray, width: float) -> bool:
        if width <= 0:
            return False
        span = points.max(axis=0) - points.min(axis=0)
        ncell = np.floor(span / (width * (1.0 + _GRID_PAD))) + 3
        if np.any(ncell > _GRID_MAX_CELLS):
            return False
        return float(np.prod(ncell)) < 2.0**62

    def candidates(self, row: int) -> np.ndarray:
        nb = self.cells[row] + 1 + self.offsets
        keys = np.ravel_multi_index(nb.T, self.shape)
        lo = np.searchsorted(self.sorted_keys, keys, side="left")
        hi = np.searchsorted(self.sorted_keys, keys, side="right")
        parts = [self.order[a:b] for a, b in zip(lo, hi) if b > a]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))

    def counts(self, rows, radii_sq):
        counts = np.zeros((len(radii_sq), len(rows)), dtype=np.int64)
        for k, i in enumerate(rows):
            cand = self.candidates(i)
            d2 = squared_distances(self.points[cand], self.points[i:i + 1])[0]
            for a, rsq in enumerate(radii_sq):
                counts[a, k] = np.count_nonzero(d2 <= rsq) - 1
        return counts

    def neighbors(self, rows, radius_sq):
        out = []
        for i in rows:
            cand = self.candidates(i)
            d2 = squared_distances(self.points[cand], self.points[i:i + 1])[0]
            idx = cand[d2 <= radius_sq]
            out.append(idx[idx != i])
        return out


def _pick_method(method, cloud: PointCloud, metric: Metric, nrows: int, width: float) -> str:
    if method not in ("auto", "brute", "grid"):
        raise InvalidParameter(f"unknown neighbour search method {method!r}")
    if method == "auto":
        # building the grid costs a sort of all n points, which only pays off
        # when many rows are queried; O(log n) rows are faster by brute force
        if (metric.kind == "euclidean" and cloud.dim <= 3 and nrows >= _GRID_MIN_ROWS
                and cloud.n * nrows >= 2_000_000 and _Grid.feasible(cloud.points, width)):
            return "grid"
        return "brute"
    if method == "grid":
        if metric.kind != "euclidean":
            raise InvalidParameter("grid search requires the Euclidean metric")
        if not _Grid.feasible(cloud.points, width):
            return "brute"
    return method


def _split(rows: np.ndarray, workers: int):
    workers = max(1, int(workers))
    if workers == 1 or len(rows) < 2:
        return [rows]
    return [part for part in np.array_split(rows, min(workers, len(rows))) if len(part)]


def count_neighbors(cloud, rows, radii, metric=None, workers: int = 1,
                    method: str = "auto") -> np.ndarray:
    """Degrees of ``rows`` at each radius in ``radii`` as a ``(len(radii), len(rows))`` array.

    Counts are exact integers, so the result does not depend on ``workers``
    or ``method``.
    """
    cloud = _as_cloud(cloud)
    metric = _check_metric(metric)
    radii = [_check_radius(r) for r in np.atleast_1d(radii)]
    if cloud.n < 2:
        raise InvalidParameter("neighbour counting needs n >= 2")
    rows = _check_rows(rows, cloud.n)
    radii_sq = [r * r for r in radii]
    method = _pick_method(method, cloud, metric, len(rows), max(radii))
    if method == "grid":
        grid = _Grid(cloud.points, max(radii))
        kernel = lambda part: grid.counts(part, radii_sq)  # noqa: E731
    else:
        kernel = lambda part: _brute_counts(cloud.points, part, radii_sq)  # noqa: E731
    parts = _split(rows, workers)
    if len(parts) == 1:
        return kernel(rows)
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        results = list(pool.map(kernel, parts))
    return np.concatenate(results, axis=1)


def compute_degrees(cloud, metric=None, radius: float = 1.0, rows=None,
                    workers: int = 1, method: str = "auto") -> DegreeProfile:
    """Number of other points within ``radius`` (inclusive) of each sampled row."""
    cloud = _as_cloud(cloud)
    radius = _check_radius(radius)
    if cloud.n < 2:
        raise InvalidParameter("neighbour counting needs n >= 2")
    rows_arr = _check_rows(rows, cloud.n)
    degrees = count_neighbors(cloud, rows_arr, [radius], metric, workers, method)[0]
    return DegreeProfile(radius=radius, rows=rows_arr, degrees=degrees, n=cloud.n)


def compute_adjacency_rows(cloud, metric=None, radius: float = 1.0, rows=None,
                           method: str = "auto") -> AdjacencyRows:
    """Sorted neighbour lists (self excluded) of the sampled rows."""
    cloud = _as_cloud(cloud)
    metric = _check_metric(metric)
    radius = _check_radius(radius)
    if cloud.n < 2:
        raise InvalidParameter("adjacency needs n >= 2")
    rows = _check_rows(rows, cloud.n)
    method = _pick_method(method, cloud, metric, len(rows), radius)
    if method == "grid":
        nbrs = _Grid(cloud.points, radius).neighbors(rows, radius * radius)
    else:
        nbrs = _brute_neighbors(cloud.points, rows, radius * radius)
    return AdjacencyRows(radius=radius, rows=rows, neighbors=nbrs)


def pair_count(cloud, radius: float, metric=None) -> int:
    """Number of unordered pairs ``i < j`` at distance at most ``radius``."""
    cloud = _as_cloud(cloud)
    _check_metric(metric)
    rsq = _check_radius(radius) ** 2
    pts = cloud.points
    n = cloud.n
    total = 0
    step = max(1, _BLOCK_ELEMS // max(n, 1))
    for a in range(0, n - 1, step):
        b = min(n - 1, a + step)
        d2 = squared_distances(pts[a:], pts[a:b])
        # keep strictly upper-triangular entries j > i
        upper = np.arange(d2.shape[1])[None, :] > np.arange(b - a)[:, None]
        total += int(np.count_nonzero((d2 <= rsq) & upper))
    return total


def correlation_integral(cloud, metric=None, radius: float = 1.0) -> float:
    """Fraction of point pairs at distance at most ``radius``."""
    cloud = _as_cloud(cloud)
    n = cloud.n
    if n < 2:
        raise InvalidParameter("the correlation integral needs n >= 2")
    return 2 * pair_count(cloud, radius, metric) / (n * (n - 1))


def kegl_dimension(cloud, metric=None, eps1: float = 0.5, eps2: float = 1.0) -> float:
    """Scale-dependent correlation dimension from two correlation integrals.

    Raises:
        DegenerateGraph: if either correlation integral is zero.
    """
    eps1 = _check_radius(eps1)
    eps2 = _check_radius(eps2)
    if not eps1 < eps2:
        raise InvalidRadius("kegl_dimension requires eps1 < eps2")
    c1 = correlation_integral(cloud, metric, eps1)
    c2 = correlation_integral(cloud, metric, eps2)
    if c1 == 0 or c2 == 0:
        raise DegenerateGraph("empty graph at one of the two radii")
    if c1 == c2:
        if c1 == 1:
            warnings.warn("both graphs are complete; dimension 0 is uninformative",
                          SaturatedGraph, stacklevel=2)
        return 0.0
    return (math.log(c2) - math.log(c1)) / (math.log(eps2) - math.log(eps1))


def default_epsilon(cloud) -> float:
    """Pooled coordinate standard deviation divided by ``sqrt(log(n + 1))``."""
    cloud = _as_cloud(cloud)
    if cloud.n < 2:
        raise InvalidParameter("default_epsilon needs n >= 2")
    sd = float(np.std(cloud.points.reshape(-1), ddof=1))
    if not sd > 0:
        raise DegenerateCloud("all coordinates are equal; cannot pick a scale")
    return sd / math.sqrt(math.log(cloud.n + 1))
