"""Population quantities of the random connection model and asymptotic variances.

The connection probabilities are expectations over independent design
points, so they are computed by seeded Monte Carlo in fixed-size chunks
(chunk ``c`` draws from substream ``(seed, c)``). Three estimators of the
same expectations are available:

``indicator``
    raw indicator products on independent triples ``(X, Y, Z)``;
``ball``
    conditions on the centre ``Z`` and integrates the density over a ball,
    ``p_eps(z) = vol(B_eps) * E f(z + eps U)`` with ``U`` uniform in the unit
    ball; usable for every law with a density and far less noisy when the
    connection probabilities are tiny;
``conditional``
    Gaussian designs only, with ``p_eps(z)`` evaluated exactly through the
    noncentral chi-square distribution.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from rcdim.errors import DegenerateProbability, InvalidParameter, InvalidSampleCount, UsageError
from rcdim.estimator import CANONICAL, LOG2, ScaleFunction

CHUNK = 65536
MIN_SAMPLES = 10_000

_BETA_SD = math.sqrt(2 * 5 / ((2 + 5) ** 2 * (2 + 5 + 1)))
_SQRT3 = math.sqrt(3.0)

# one-dimensional coordinate laws, standardized to unit sd where finite
_COORD_LAWS = {
    "uniform_cube": stats.uniform(loc=-_SQRT3, scale=2 * _SQRT3),
    "gaussian": stats.norm(),
    "exponential": stats.expon(),
    "beta25": stats.beta(2, 5, scale=1.0 / _BETA_SD),
    "cauchy": stats.cauchy(),
    "uniform_segment": stats.uniform(loc=0.0, scale=1.0),
}
_ALIASES = {
    "uniform": "uniform_cube", "cube": "uniform_cube", "normal": "gaussian",
    "exp": "exponential", "beta": "beta25", "beta2,5": "beta25", "segment": "uniform_segment",
}
STANDARDIZED = ("uniform_cube", "gaussian", "exponential", "beta25")


@dataclass(frozen=True)
class DistributionSpec:
    """A sampleable design-point law on ``R^d`` with independent coordinates.

    ``custom`` laws supply ``sampler(rng, size) -> (size, d)`` and, optionally,
    ``density(points) -> (size,)`` to enable the ball estimator.
    """

    kind: str
    d: int = 1
    sampler: Optional[Callable] = None
    density: Optional[Callable] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        object.__setattr__(self, "kind", kind)
        if kind != "custom" and kind not in _COORD_LAWS:
            raise UsageError(f"unknown distribution {self.kind!r}")
        if kind == "uniform_segment" and self.d != 1:
            raise InvalidParameter("uniform_segment is one-dimensional")
        if kind == "custom" and self.sampler is None:
            raise InvalidParameter("custom distributions need a sampler")
        if int(self.d) < 1:
            raise InvalidParameter("d must be at least 1")

    @property
    def has_density(self) -> bool:
        return self.kind != "custom" or self.density is not None

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "custom":
            return np.asarray(self.sampler(rng, size), dtype=float).reshape(size, self.d)
        return _COORD_LAWS[self.kind].rvs(size=(size, self.d), random_state=rng)

    def pdf(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "custom":
            if self.density is None:
                raise InvalidParameter("this custom distribution has no density")
            return np.asarray(self.density(points), dtype=float)
        return np.prod(_COORD_LAWS[self.kind].pdf(points), axis=1)


@dataclass
class PopulationProbs:
    """Monte Carlo estimates of the model probabilities at one radius.

    ``cov`` is the covariance matrix of the five estimated means in the order
    ``(p1_eps, p1_2eps, p2_eps, p2_2eps, p_cross)`` and drives the
    delta-method standard errors of derived quantities.
    """

    eps: float
    p1_eps: float
    p1_2eps: float
    p2_eps: float
    p2_2eps: float
    p_cross: float
    mc_samples: int
    standard_errors: dict
    method: str = "indicator"
    cov: np.ndarray = field(default_factory=lambda: np.zeros((5, 5)), repr=False)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.p1_eps, self.p1_2eps, self.p2_eps, self.p2_2eps, self.p_cross])

    @classmethod
    def exact(cls, eps, p1_eps, p1_2eps, p2_eps, p2_2eps, p_cross) -> "PopulationProbs":
        """Probabilities known exactly (zero standard errors)."""
        names = ("p1_eps", "p1_2eps", "p2_eps", "p2_2eps", "p_cross")
        return cls(eps, p1_eps, p1_2eps, p2_eps, p2_2eps, p_cross, 0,
                   {k: 0.0 for k in names}, "exact")

    def delta_se(self, fn: Callable[[np.ndarray], float]) -> float:
        """Delta-method standard error of ``fn`` applied to the probability vector."""
        x = self.vector
        if not np.any(self.cov):
            return 0.0
        grad = np.zeros(5)
        for k in range(5):
            h = 1e-7 * max(abs(x[k]), 1e-300)
            up, down = x.copy(), x.copy()
            up[k] += h
            down[k] -= h
            grad[k] = (fn(up) - fn(down)) / (2 * h)
        return float(math.sqrt(max(grad @ self.cov @ grad, 0.0)))


# -- closed forms --------------------------------------------------------------

def ball_volume(d: int, eps: float) -> float:
    """Volume of the ``d``-dimensional Euclidean ball of radius ``eps``."""
    if int(d) < 1:
        raise InvalidParameter("d must be at least 1")
    return eps ** d * math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def gaussian_p1_exact(d: int, eps: float) -> float:
    """``P(|X - Y| <= eps)`` for independent standard Gaussians in ``R^d``.

    ``|X - Y|^2 / 2`` is chi-square with ``d`` degrees of freedom.
    """
    if int(d) < 1 or not eps > 0:
        raise InvalidParameter("need d >= 1 and eps > 0")
    return float(special.gammainc(d / 2.0, eps * eps / 4.0))


def gaussian_p1_erf_form(d: int, eps: float) -> float:
    """``(4 pi)^(-d/2) * vol(B_eps) * sqrt(pi) / eps * erf(eps / 2)``.

    This is the erf expression behind the Gaussian scale function. It equals
    :func:`gaussian_p1_exact` for ``d = 1`` only.
    """
    return (4 * math.pi) ** (-d / 2) * ball_volume(d, eps) * math.sqrt(math.pi) / eps * math.erf(eps / 2)


def gaussian_local_p(points: np.ndarray, eps: float) -> np.ndarray:
    """``P(|z - Y| <= eps)`` for ``Y ~ N(0, I)`` at each row ``z`` of ``points``."""
    d = points.shape[1]
    nc = np.einsum("ij,ij->i", points, points)
    return stats.ncx2.cdf(eps * eps, d, nc)


# -- Monte Carlo ---------------------------------------------------------------

def _unit_ball(rng, size, d):
    g = rng.standard_normal((size, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random(size)[:, None] ** (1.0 / d)


def _chunk_vectors(dist: DistributionSpec, eps: float, method: str, rng, size: int):
    """Per-sample vectors whose means are (p1, p1_2, p2, p2_2, p_cross)."""
    if method == "indicator":
        x = dist.sample(rng, size)
        y = dist.sample(rng, size)
        z = dist.sample(rng, size)
        dxz = np.einsum("ij,ij->i", x - z, x - z)
        dyz = np.einsum("ij,ij->i", y - z, y - z)
        e1, e2 = eps * eps, 4 * eps * eps
        a, a2 = (dxz <= e1).astype(float), (dyz <= e1).astype(float)
        b, b2 = (dxz <= e2).astype(float), (dyz <= e2).astype(float)
    elif method == "ball":
        d = dist.d
        z = dist.sample(rng, size)
        v1, v2 = ball_volume(d, eps), ball_volume(d, 2 * eps)
        a = v1 * dist.pdf(z + eps * _unit_ball(rng, size, d))
        a2 = v1 * dist.pdf(z + eps * _unit_ball(rng, size, d))
        b = v2 * dist.pdf(z + 2 * eps * _unit_ball(rng, size, d))
        b2 = v2 * dist.pdf(z + 2 * eps * _unit_ball(rng, size, d))
    elif method == "conditional":
        z = dist.sample(rng, size)
        a = a2 = gaussian_local_p(z, eps)
        b = b2 = gaussian_local_p(z, 2 * eps)
    else:
        raise InvalidParameter(f"unknown Monte Carlo method {method!r}")
    return np.stack([(a + a2) / 2, (b + b2) / 2, a * a2, b * b2, (a * b2 + a2 * b) / 2])


def _resolve_method(dist: DistributionSpec, method: str) -> str:
    if method == "auto":
        if dist.kind == "gaussian":
            return "conditional"
        return "ball" if dist.has_density else "indicator"
    if method == "conditional" and dist.kind != "gaussian":
        raise InvalidParameter("the conditional estimator is only available for Gaussian designs")
    if method == "ball" and not dist.has_density:
        raise InvalidParameter("the ball estimator needs a density")
    return method


def _seed_key(seed) -> list:
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def mc_probs(dist: DistributionSpec, eps: float, samples: int = 1_000_000, seed=0,
             method: str = "indicator", workers: int = 1) -> PopulationProbs:
    """Monte Carlo estimates of the connection probabilities at ``eps`` and ``2 eps``.

    Output depends only on ``(dist, eps, samples, seed, method)``; the chunk
    size is fixed, so ``workers`` only changes the wall-clock time.
    """
    if int(samples) < MIN_SAMPLES:
        raise InvalidSampleCount(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if not (math.isfinite(eps) and eps > 0):
        raise InvalidParameter("eps must be positive")
    samples = int(samples)
    method = _resolve_method(dist, method)
    key = _seed_key(seed)
    sizes = [min(CHUNK, samples - c0) for c0 in range(0, samples, CHUNK)]

    def run(c):
        rng = np.random.default_rng(key + [c])
        v = _chunk_vectors(dist, eps, method, rng, sizes[c])
        return v.sum(axis=1), v @ v.T

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    total = np.zeros(5)
    outer = np.zeros((5, 5))
    for s, q in parts:
        total += s
        outer += q
    mean = total / samples
    cov_samples = (outer - samples * np.outer(mean, mean)) / (samples - 1)
    cov = cov_samples / samples
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    names = ("p1_eps", "p1_2eps", "p2_eps", "p2_2eps", "p_cross")
    return PopulationProbs(
        eps=eps, p1_eps=float(mean[0]), p1_2eps=float(mean[1]), p2_eps=float(mean[2]),
        p2_2eps=float(mean[3]), p_cross=float(mean[4]), mc_samples=samples,
        standard_errors=dict(zip(names, map(float, se))), method=method, cov=cov,
    )


# -- asymptotic variance constants ----------------------------------------------

def _require_positive(*values):
    if any(not v > 0 for v in values):
        raise DegenerateProbability("connection probabilities must be positive")


def theorem1_scaling(probs: PopulationProbs, m: int) -> float:
    """Asymptotic variance of ``p_hat / p - 1`` from ``m`` sampled rows."""
    _require_positive(probs.p1_eps)
    return (probs.p2_eps - probs.p1_eps ** 2) / (m * probs.p1_eps ** 2)


def v_eps(probs: PopulationProbs) -> float:
    """Variance constant of the two-radius log-ratio when ``m / n -> 0``."""
    p, q = probs.p1_eps, probs.p1_2eps
    _require_positive(p, q)
    return (p * p * probs.p2_2eps - 2 * probs.p_cross * p * q + q * q * probs.p2_eps) / (p * p * q * q)


def _bracket(x: np.ndarray, ratio: float) -> float:
    p, q, p2, p22, pc = x
    return (6 * ratio + (p * p * p22 + q * q * p2) / (p * p * q * q)
            - 2 * (1 + 3 * ratio) * pc / (p * q))


def general_bracket(probs: PopulationProbs, m_over_n: float) -> float:
    """Variance constant of the log-ratio for any ``m <= n``."""
    _require_positive(probs.p1_eps, probs.p1_2eps)
    return _bracket(probs.vector, m_over_n)


def theorem2_variance(probs: PopulationProbs, g: ScaleFunction = CANONICAL, d: float = 1.0,
                      m: int = 1, n: Optional[int] = None) -> float:
    """Asymptotic variance of the dimension estimate from ``m`` rows of an ``n``-vertex graph.

    ``n=None`` means ``m / n -> 0``.
    """
    ratio = 0.0 if n is None else m / n
    slope = g.log_derivative(d)
    if slope == 0:
        raise DegenerateProbability("scale function has zero slope at d")
    return general_bracket(probs, ratio) / (m * slope * slope)


@dataclass(frozen=True)
class VarianceConstants:
    s_p1: float
    v_eps: float
    general_bracket: float
    g_log_deriv: float


def variance_constants(probs: PopulationProbs, g: ScaleFunction = CANONICAL, d: float = 1.0,
                       m_over_n: float = 0.0) -> VarianceConstants:
    _require_positive(probs.p1_eps)
    return VarianceConstants(
        s_p1=(probs.p2_eps - probs.p1_eps ** 2) / probs.p1_eps ** 2,
        v_eps=v_eps(probs),
        general_bracket=general_bracket(probs, m_over_n),
        g_log_deriv=g.log_derivative(d),
    )


# -- curves --------------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    d: int
    value: float
    stderr: float
    flagged: bool = False
    extra: Optional[float] = None


def _log_or_flag(x: float):
    if x > 0:
        return math.log(x), False
    return float("-inf"), True


def doubling_value(probs: PopulationProbs) -> CurvePoint:
    p, q = probs.p1_eps, probs.p1_2eps
    if not (p > 0 and q > 0):
        return CurvePoint(0, float("-inf") if q > 0 or p == q else float("inf"), float("nan"), True)
    value = math.log2(q / p)
    se = probs.delta_se(lambda x: math.log2(x[1] / x[0]))
    return CurvePoint(0, value, se)


def doubling_curve(dist, d_range: Sequence[int], eps: float, samples: int = 200_000,
                   seed: int = 0, method: str = "auto", workers: int = 1) -> list:
    """``log2(p(2 eps) / p(eps))`` against the intrinsic dimension ``d``."""
    out = []
    for d in d_range:
        spec = _spec_for(dist, d)
        probs = mc_probs(spec, eps, samples, (seed, int(d)), method, workers)
        pt = doubling_value(probs)
        out.append(CurvePoint(int(d), pt.value, pt.stderr, pt.flagged))
    return out


def scaling_value(probs: PopulationProbs, g: ScaleFunction = CANONICAL, d: float = 1.0) -> CurvePoint:
    """``log(m * S)`` with ``m / n -> 0``; ``extra`` holds the log of the bare bracket."""
    p, q = probs.p1_eps, probs.p1_2eps
    if not (p > 0 and q > 0):
        return CurvePoint(0, float("-inf"), float("nan"), True, float("-inf"))
    bracket = _bracket(probs.vector, 0.0)
    slope = g.log_derivative(d)
    # the bracket is a difference of O(1) terms; residues at rounding level count as zero
    x = probs.vector
    scale = (x[0] ** 2 * x[3] + x[1] ** 2 * x[2]) / (x[0] * x[1]) ** 2 + 2 * x[4] / (x[0] * x[1])
    log_bracket, flagged = _log_or_flag(bracket if bracket > 1e-12 * scale else 0.0)
    if flagged:
        return CurvePoint(0, float("-inf"), float("nan"), True, float("-inf"))
    se = probs.delta_se(lambda x: _bracket(x, 0.0)) / bracket
    return CurvePoint(0, log_bracket - 2 * math.log(slope), se, False, log_bracket)


def scaling_curve(dist, d_range: Sequence[int], eps: float, samples: int = 200_000,
                  seed: int = 0, method: str = "auto", workers: int = 1,
                  g: ScaleFunction = CANONICAL) -> list:
    """Log of the asymptotic variance constant against ``d``."""
    out = []
    for d in d_range:
        spec = _spec_for(dist, d)
        probs = mc_probs(spec, eps, samples, (seed, int(d)), method, workers)
        pt = scaling_value(probs, g, d)
        out.append(CurvePoint(int(d), pt.value, pt.stderr, pt.flagged, pt.extra))
    return out


def _spec_for(dist, d: int) -> DistributionSpec:
    if isinstance(dist, DistributionSpec):
        if dist.kind == "custom":
            raise InvalidParameter("curves need a named distribution family")
        return DistributionSpec(dist.kind, int(d))
    return DistributionSpec(str(dist), int(d))
