"""Seeded samplers for synthetic design points.

Every sampler draws its points in fixed chunks of ``CHUNK`` rows, and chunk
``c`` uses the substream ``default_rng([seed, c])``. The output therefore
depends only on the arguments and the seed, never on ``workers``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rcdim.errors import InvalidCount, InvalidParameter, InvalidS, UsageError
from rcdim.geometry import PointCloud

CHUNK = 65536

# columns are the eight non-central cells of the carpet, drawn as a diamond
SIERPINSKI_C = np.array([
    [0.0, 0.5, 1.0, 0.5, 0.0, -0.5, -1.0, -0.5],
    [1.0, 0.5, 0.0, -0.5, -1.0, -0.5, 0.0, 0.5],
])


def _check_count(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidCount(f"n must be a positive integer, got {n!r}")
    return int(n)


def _check_dim(d, name="d") -> int:
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidParameter(f"{name} must be a positive integer, got {d!r}")
    return int(d)


def _chunked(n: int, seed: int, draw: Callable[[np.random.Generator, int], np.ndarray],
             workers: int = 1) -> np.ndarray:
    sizes = [min(CHUNK, n - c0) for c0 in range(0, n, CHUNK)]

    def run(c):
        return draw(np.random.default_rng([int(seed), c]), sizes[c])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    return np.concatenate(parts, axis=0)


def _standardize(points: np.ndarray) -> np.ndarray:
    """Center every coordinate and rescale so the pooled entry sd is 1."""
    centered = points - points.mean(axis=0)
    if points.shape[0] < 2:
        return centered
    sd = np.std(centered.ravel(), ddof=1)
    return centered / sd if sd > 0 else centered


def sierpinski(n: int, depth: int = 100, seed: int = 0, workers: int = 1) -> PointCloud:
    """Uniform points on the Sierpinski carpet, truncated after ``depth`` digits.

    A point is ``C @ sum_j 3**-j e_{i_j}`` with independent digits ``i_j``
    uniform on the eight columns of ``SIERPINSKI_C``.
    """
    n = _check_count(n)
    depth = _check_dim(depth, "depth")
    weights = 3.0 ** -np.arange(1, depth + 1)

    def draw(rng, size):
        digits = rng.integers(0, 8, size=(size, depth))
        x = SIERPINSKI_C[0][digits] @ weights
        y = SIERPINSKI_C[1][digits] @ weights
        return np.column_stack([x, y])

    return PointCloud(_chunked(n, seed, draw, workers))


def gaussian_iso(n: int, d: int, seed: int = 0, workers: int = 1) -> PointCloud:
    """Standard normal points in ``R^d``."""
    n, d = _check_count(n), _check_dim(d)
    return PointCloud(_chunked(n, seed, lambda rng, size: rng.standard_normal((size, d)), workers))


def anisotropic_gaussian(n: int, s: int, snr: float, seed: int = 0, workers: int = 1) -> PointCloud:
    """Five-dimensional Gaussian with ``s`` unit-sd signal axes and noise sd ``1/sqrt(snr)``."""
    n = _check_count(n)
    if isinstance(s, bool) or int(s) != s or not 1 <= s <= 5:
        raise InvalidS(f"s must be one of 1..5, got {s!r}")
    if not (math.isfinite(snr) and snr > 0):
        raise InvalidParameter(f"snr must be positive, got {snr!r}")
    scale = np.full(5, 1.0 / math.sqrt(snr))
    scale[: int(s)] = 1.0
    return PointCloud(_chunked(n, seed, lambda rng, size: rng.standard_normal((size, 5)) * scale, workers))


def uniform_sphere(n: int, d: int, seed: int = 0, workers: int = 1) -> PointCloud:
    """Uniform points on the unit sphere of intrinsic dimension ``d`` inside ``R^(d+1)``."""
    n, d = _check_count(n), _check_dim(d)

    def draw(rng, size):
        z = rng.standard_normal((size, d + 1))
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    return PointCloud(_chunked(n, seed, draw, workers))


def uniform_cube(n: int, d: int, seed: int = 0, workers: int = 1) -> PointCloud:
    """Uniform points on ``[0, 1]^d``."""
    n, d = _check_count(n), _check_dim(d)
    return PointCloud(_chunked(n, seed, lambda rng, size: rng.random((size, d)), workers))


def helix_raw(n: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Helix ``(cos t, sin t, t / 2 pi)`` with ``t`` uniform on ``[0, 4 pi]``, unscaled."""
    n = _check_count(n)

    def draw(rng, size):
        t = rng.uniform(0.0, 4 * math.pi, size)
        return np.column_stack([np.cos(t), np.sin(t), t / (2 * math.pi)])

    return _chunked(n, seed, draw, workers)


def helix(n: int, seed: int = 0, workers: int = 1) -> PointCloud:
    """Helix points, centered and scaled to pooled sd 1."""
    return PointCloud(_standardize(helix_raw(n, seed, workers)))


def swiss_roll_raw(n: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Swiss roll ``(t cos t, h, t sin t)``, ``t ~ U[3 pi/2, 9 pi/2]``, ``h ~ U[0, 20]``, unscaled."""
    n = _check_count(n)

    def draw(rng, size):
        t = rng.uniform(1.5 * math.pi, 4.5 * math.pi, size)
        h = rng.uniform(0.0, 20.0, size)
        return np.column_stack([t * np.cos(t), h, t * np.sin(t)])

    return _chunked(n, seed, draw, workers)


def swiss_roll(n: int, seed: int = 0, workers: int = 1) -> PointCloud:
    """Swiss roll points, centered and scaled to pooled sd 1."""
    return PointCloud(_standardize(swiss_roll_raw(n, seed, workers)))


def noisy_torus(n: int, R: float = 2.0, r_tube: float = 1.0, sigma: float = 0.0,
                seed: int = 0, workers: int = 1) -> PointCloud:
    """Area-uniform points on a torus in ``R^3`` plus isotropic Gaussian noise of sd ``sigma``.

    The tube angle is drawn by rejection against the area element
    ``R + r_tube cos(phi)``.
    """
    n = _check_count(n)
    if not (math.isfinite(R) and R > 0) or not (math.isfinite(r_tube) and r_tube > 0):
        raise InvalidParameter("R and r_tube must be positive")
    if not (math.isfinite(sigma) and sigma >= 0):
        raise InvalidParameter("sigma must be nonnegative")

    def draw(rng, size):
        phi = np.empty(0)
        while phi.size < size:
            cand = rng.uniform(0.0, 2 * math.pi, 2 * size)
            keep = rng.random(2 * size) * (R + r_tube) < R + r_tube * np.cos(cand)
            phi = np.concatenate([phi, cand[keep]])
        phi = phi[:size]
        theta = rng.uniform(0.0, 2 * math.pi, size)
        ring = R + r_tube * np.cos(phi)
        pts = np.column_stack([ring * np.cos(theta), ring * np.sin(theta), r_tube * np.sin(phi)])
        if sigma > 0:
            pts = pts + sigma * rng.standard_normal(pts.shape)
        return pts

    return PointCloud(_chunked(n, seed, draw, workers))


_GENERATORS = {
    "sierpinski": (sierpinski, ("depth",)),
    "gaussian": (gaussian_iso, ("d",)),
    "anisotropic": (anisotropic_gaussian, ("s", "snr")),
    "sphere": (uniform_sphere, ("d",)),
    "cube": (uniform_cube, ("d",)),
    "helix": (helix, ()),
    "swiss_roll": (swiss_roll, ()),
    "torus": (noisy_torus, ("R", "r_tube", "sigma")),
}
_KIND_ALIASES = {
    "gaussian_iso": "gaussian", "normal": "gaussian", "anisotropic_gaussian": "anisotropic",
    "uniform_sphere": "sphere", "uniform_cube": "cube", "swissroll": "swiss_roll",
    "swiss-roll": "swiss_roll", "noisy_torus": "torus",
}
GENERATOR_KINDS = tuple(_GENERATORS)


@dataclass(frozen=True)
class GeneratorSpec:
    """A named generator with its parameters, point count and seed."""

    kind: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in _GENERATORS:
            raise UsageError(f"unknown generator {self.kind!r}; choose from {', '.join(GENERATOR_KINDS)}")
        object.__setattr__(self, "kind", kind)
        _check_count(self.n)
        allowed = _GENERATORS[kind][1]
        extra = set(self.params) - set(allowed)
        if extra:
            raise UsageError(f"generator {kind!r} does not take {', '.join(sorted(extra))}")

    @property
    def true_dimension(self):
        """The intrinsic dimension when it is known, otherwise ``None``."""
        p = self.params
        if self.kind == "sierpinski":
            return math.log(8) / math.log(3)
        if self.kind in ("gaussian", "cube", "sphere"):
            return p.get("d")
        if self.kind == "helix":
            return 1
        if self.kind == "swiss_roll":
            return 2
        if self.kind == "torus" and p.get("sigma", 0.0) == 0:
            return 2
        return None

    def generate(self, workers: int = 1) -> PointCloud:
        fn = _GENERATORS[self.kind][0]
        return fn(self.n, seed=self.seed, workers=workers, **self.params)


def generate(kind: str, n: int, seed: int = 0, workers: int = 1, **params) -> PointCloud:
    """Build a :class:`GeneratorSpec` and sample it."""
    return GeneratorSpec(kind, n, seed, params).generate(workers)
