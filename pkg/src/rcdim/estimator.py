"""Two-radius intrinsic dimension estimator with block-based uncertainty.

The pipeline draws ``t`` disjoint blocks of ``m`` vertices, counts their
neighbours at radius ``eps`` and ``2 * eps`` (the same rows for both radii),
turns each block into a connection-probability pair and inverts the
doubling relation ``p(2 eps) / p(eps) = g(d)``. The spread of the block
estimates gives a standard deviation without resampling.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from rcdim.errors import (
    DegenerateGraph,
    InsufficientBlocks,
    InsufficientVertices,
    InvalidParameter,
    NonMonotone,
    OutOfRange,
    RadiusMismatch,
    SaturatedGraph,
    UsageError,
)
from rcdim.geometry import PointCloud, count_neighbors, default_epsilon

LOG2 = math.log(2.0)


class Correction(str, enum.Enum):
    NONE = "none"
    MULTIPLICATIVE = "mult"
    ERF_GAUSSIAN = "erf"
    PLUS_TWO_SIGMA = "2sigma"

    @classmethod
    def parse(cls, value) -> "Correction":
        if isinstance(value, cls):
            return value
        if value is None:
            return cls.NONE
        key = str(value).strip().lower()
        aliases = {
            "none": cls.NONE, "multiplicative": cls.MULTIPLICATIVE, "mult": cls.MULTIPLICATIVE,
            "erf": cls.ERF_GAUSSIAN, "erfgaussian": cls.ERF_GAUSSIAN, "erf_gaussian": cls.ERF_GAUSSIAN,
            "2sigma": cls.PLUS_TWO_SIGMA, "plustwosigma": cls.PLUS_TWO_SIGMA,
            "plus_two_sigma": cls.PLUS_TWO_SIGMA,
        }
        if key not in aliases:
            raise UsageError(f"unknown correction {value!r}")
        return aliases[key]


# -- scale functions ----------------------------------------------------------

@dataclass(frozen=True)
class ScaleFunction:
    """The map ``d -> g(d)`` inverted by the implicit estimator.

    ``evaluate`` must be strictly increasing on ``[d_min, d_max]``.
    """

    kind: str
    evaluate: Callable[[float], float]
    log_derivative: Callable[[float], float]
    d_min: float = 0.0
    d_max: float = 64.0
    epsilon: Optional[float] = None

    def __call__(self, d: float) -> float:
        return self.evaluate(d)

    @classmethod
    def canonical(cls, d_min: float = 0.0, d_max: float = 64.0) -> "ScaleFunction":
        return cls("canonical", lambda d: 2.0 ** d, lambda d: LOG2, d_min, d_max)

    @classmethod
    def erf_gaussian(cls, epsilon: float, d_min: float = 0.0, d_max: float = 64.0) -> "ScaleFunction":
        """``2**d * (erf(eps) / 2) / erf(eps / 2)``, the Gaussian-design doubling ratio."""
        if not epsilon > 0:
            raise InvalidParameter("epsilon must be positive")
        factor = (math.erf(epsilon) / 2.0) / math.erf(epsilon / 2.0)
        return cls("erf_gaussian", lambda d: factor * 2.0 ** d, lambda d: LOG2,
                   d_min, d_max, epsilon)

    @classmethod
    def custom(cls, evaluate, log_derivative=None, d_min: float = 0.0,
               d_max: float = 64.0, samples: int = 257) -> "ScaleFunction":
        """Wrap an arbitrary increasing map; monotonicity is checked on a grid."""
        if not d_min < d_max:
            raise InvalidParameter("need d_min < d_max")
        grid = np.linspace(d_min, d_max, samples)
        values = np.array([evaluate(float(x)) for x in grid])
        if not np.all(np.isfinite(values)) or not np.all(np.diff(values) > 0):
            raise NonMonotone("scale function is not strictly increasing on its domain")
        if log_derivative is None:
            def log_derivative(d, _h=1e-6):
                return (math.log(evaluate(d + _h)) - math.log(evaluate(d - _h))) / (2 * _h)
        return cls("custom", evaluate, log_derivative, d_min, d_max)


CANONICAL = ScaleFunction.canonical()


# -- connection probabilities -------------------------------------------------

@dataclass(frozen=True)
class ConnectionProbEstimate:
    value: float
    radius: Optional[float]
    m: int
    n: int
    raw_count: int


def estimate_p1(profile) -> ConnectionProbEstimate:
    """Average of the sampled degrees divided by ``n - 1``."""
    degrees = np.asarray(profile.degrees, dtype=np.int64)
    m = degrees.size
    n = int(profile.n)
    if n < 2 or m < 1:
        raise InvalidParameter("need n >= 2 and at least one sampled row")
    raw = int(degrees.sum())
    return ConnectionProbEstimate(raw / (m * (n - 1)), profile.radius, m, n, raw)


def _ratio(p_eps: ConnectionProbEstimate, p_2eps: ConnectionProbEstimate) -> float:
    if p_eps.radius is not None and p_2eps.radius is not None:
        if not math.isclose(p_2eps.radius, 2.0 * p_eps.radius, rel_tol=1e-12):
            raise RadiusMismatch(f"radii {p_eps.radius} and {p_2eps.radius} are not in ratio 1:2")
    if p_eps.value <= 0 or p_2eps.value <= 0:
        raise DegenerateGraph("connection probability estimate is 0 (empty graph)")
    if p_eps.value == 1 and p_2eps.value == 1:
        warnings.warn("both graphs are complete; dimension 0 is uninformative",
                      SaturatedGraph, stacklevel=3)
    if p_eps.m == p_2eps.m and p_eps.n == p_2eps.n:
        return p_2eps.raw_count / p_eps.raw_count
    return p_2eps.value / p_eps.value


def explicit_dimension(p_eps: ConnectionProbEstimate, p_2eps: ConnectionProbEstimate) -> float:
    """``log2(p(2 eps) / p(eps))``, the estimate for ``g(d) = 2**d``."""
    return math.log2(_ratio(p_eps, p_2eps))


def solve_scale_equation(rho: float, g: ScaleFunction, tol: float = 1e-9) -> float:
    """Bisection for ``g(d) = rho`` on ``[g.d_min, g.d_max]``."""
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    lo, hi = float(g.d_min), float(g.d_max)
    g_lo, g_hi = g(lo), g(hi)
    if not g_lo < g_hi:
        raise NonMonotone("scale function does not increase over its domain")
    if not g_lo <= rho <= g_hi:
        raise OutOfRange(f"ratio {rho} outside the range [{g_lo}, {g_hi}] of the scale function")
    if rho == g_lo:
        return lo
    if rho == g_hi:
        return hi
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if not math.isfinite(g_mid) or not g_lo <= g_mid <= g_hi:
            raise NonMonotone(f"scale function left its bracket at d={mid}")
        if g_mid < rho:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def implicit_dimension(p_eps: ConnectionProbEstimate, p_2eps: ConnectionProbEstimate,
                       g: ScaleFunction = CANONICAL, tol: float = 1e-9) -> float:
    return solve_scale_equation(_ratio(p_eps, p_2eps), g, tol)


# -- corrections -------------------------------------------------------------

def multiplicative_correction(d_hat: float, epsilon: float) -> float:
    return d_hat * (1.0 + 2.0 * epsilon / LOG2)


def erf_correction(epsilon: float) -> float:
    """Additive shift turning the canonical estimate into the Gaussian-``g`` estimate."""
    if not epsilon > 0:
        raise InvalidParameter("epsilon must be positive")
    return (math.log(math.erf(epsilon / 2.0)) - math.log(math.erf(epsilon) / 2.0)) / LOG2


def plus_two_sigma(d_hat: float, sigma: float) -> float:
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    return d_hat + 2.0 * sigma


def sigma_hat(block_values) -> float:
    """Sample standard deviation (divisor ``t - 1``) of the block estimates."""
    values = np.asarray(block_values, dtype=float)
    if values.size < 2:
        raise InsufficientBlocks("need at least two block estimates")
    if np.all(values == values[0]):
        return 0.0
    return float(np.std(values, ddof=1))


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def default_m(n: int) -> int:
    return int(math.ceil(max(1.0, math.log(n))))


# -- full pipeline -----------------------------------------------------------

@dataclass
class EstimatorConfig:
    m: Optional[int] = None
    blocks: int = 10
    epsilon: Optional[float] = None
    correction: Correction = Correction.NONE
    scale_function: ScaleFunction = CANONICAL
    seed: int = 0
    round_to_integer: bool = False
    tol: float = 1e-9
    workers: int = 1
    method: str = "auto"

    def __post_init__(self):
        self.correction = Correction.parse(self.correction)
        if self.m is not None and int(self.m) < 1:
            raise InvalidParameter("m must be at least 1")
        if int(self.blocks) < 1:
            raise InvalidParameter("blocks must be at least 1")
        if self.epsilon is not None and not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameter("epsilon must be positive and finite")

    def to_dict(self) -> dict:
        return {
            "m": self.m, "blocks": self.blocks, "epsilon": self.epsilon,
            "correction": self.correction.value, "scale_function": self.scale_function.kind,
            "seed": self.seed, "round_to_integer": self.round_to_integer, "tol": self.tol,
        }


@dataclass
class DimensionEstimate:
    d_hat: float
    d_corrected: float
    correction: Correction
    block_values: list
    corrected_values: list
    sigma_hat: Optional[float]
    epsilon: Optional[float]
    m: int
    t: int
    n: int
    rounded: Optional[int] = None
    failed_blocks: list = field(default_factory=list)
    p_eps: list = field(default_factory=list)
    p_2eps: list = field(default_factory=list)
    density_eps: float = float("nan")
    density_2eps: float = float("nan")
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "d_hat": self.d_hat,
            "d_corrected": self.d_corrected,
            "correction": self.correction.value,
            "sigma_hat": self.sigma_hat,
            "rounded": self.rounded,
            "block_values": list(self.block_values),
            "corrected_values": list(self.corrected_values),
            "failed_blocks": list(self.failed_blocks),
            "epsilon": self.epsilon,
            "m": self.m,
            "t": self.t,
            "n": self.n,
            "density_eps": self.density_eps,
            "density_2eps": self.density_2eps,
            "warnings": list(self.warnings),
        }


def sample_blocks(n: int, t: int, m: int, seed: int) -> np.ndarray:
    """``t`` disjoint blocks of ``m`` distinct vertices, drawn without replacement."""
    if t * m > n:
        raise InsufficientVertices(f"{t} blocks of {m} rows need {t * m} vertices, have {n}")
    rng = np.random.default_rng(seed)
    return rng.choice(n, size=t * m, replace=False).astype(np.int64).reshape(t, m)


def _degree_pair(source, rows: np.ndarray, epsilon, config: EstimatorConfig, metric):
    if isinstance(source, PointCloud):
        counts = count_neighbors(source, rows, [epsilon, 2.0 * epsilon], metric,
                                 workers=config.workers, method=config.method)
        return counts[0], counts[1]
    if hasattr(source, "degree_pair"):
        return source.degree_pair(rows)
    raise InvalidParameter(f"cannot estimate from {type(source).__name__}")


def estimate_dimension(source, config: Optional[EstimatorConfig] = None, metric=None,
                       **overrides) -> DimensionEstimate:
    """Estimate the intrinsic dimension of a point cloud or a nested graph pair.

    ``source`` is a :class:`PointCloud` (radius from ``config.epsilon`` or
    :func:`default_epsilon`) or any object with ``n`` and
    ``degree_pair(rows)``, such as an edge-list graph pair.

    Blocks whose graph at ``eps`` is empty are dropped and listed in
    ``failed_blocks``; if more than half fail the call raises
    :class:`DegenerateGraph`.
    """
    if config is None:
        config = EstimatorConfig(**overrides)
    elif overrides:
        params = {**config.__dict__, **overrides}
        config = EstimatorConfig(**params)
    if not isinstance(source, PointCloud) and not hasattr(source, "degree_pair"):
        source = PointCloud(source)
    n = int(source.n)
    if n < 2:
        raise InsufficientVertices("need at least two vertices")

    epsilon = config.epsilon
    if epsilon is None and isinstance(source, PointCloud):
        epsilon = default_epsilon(source)
    correction = config.correction
    if correction in (Correction.MULTIPLICATIVE, Correction.ERF_GAUSSIAN) and epsilon is None:
        raise UsageError(f"correction {correction.value!r} needs a known epsilon")
    if isinstance(source, PointCloud) and epsilon is None:
        raise UsageError("epsilon is required")

    m = default_m(n) if config.m is None else int(config.m)
    t = int(config.blocks)
    if correction is Correction.PLUS_TWO_SIGMA and t < 2:
        raise InsufficientBlocks("the +2 sigma correction needs at least two blocks")
    blocks = sample_blocks(n, t, m, config.seed)
    deg_eps, deg_2eps = _degree_pair(source, blocks.reshape(-1), epsilon, config, metric)
    deg_eps = np.asarray(deg_eps, dtype=np.int64).reshape(t, m)
    deg_2eps = np.asarray(deg_2eps, dtype=np.int64).reshape(t, m)
    if np.any(deg_eps > deg_2eps):
        raise InvalidParameter("degrees at eps exceed degrees at 2 eps; graphs are not nested")

    g = config.scale_function
    radius_2 = None if epsilon is None else 2.0 * epsilon
    values, p1s, p2s, failed = [], [], [], []
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SaturatedGraph)
        for b in range(t):
            p1 = estimate_p1(_Profile(epsilon, deg_eps[b], n))
            p2 = estimate_p1(_Profile(radius_2, deg_2eps[b], n))
            p1s.append(p1.value)
            p2s.append(p2.value)
            try:
                if g.kind == "canonical":
                    d = explicit_dimension(p1, p2)
                else:
                    d = implicit_dimension(p1, p2, g, config.tol)
            except (DegenerateGraph, OutOfRange) as exc:
                failed.append({"block": b, "code": exc.code, "message": str(exc)})
                continue
            values.append(d)
    if caught:
        notes.append("saturated: both graphs complete in at least one block")
        warnings.warn("both graphs are complete in at least one block; dimension 0 is uninformative",
                      SaturatedGraph, stacklevel=2)
    if len(failed) > t // 2:
        raise DegenerateGraph(f"{len(failed)} of {t} blocks have an empty graph at eps")

    if correction is Correction.MULTIPLICATIVE:
        corrected = [multiplicative_correction(d, epsilon) for d in values]
    elif correction is Correction.ERF_GAUSSIAN:
        shift = erf_correction(epsilon)
        corrected = [d + shift for d in values]
    else:
        corrected = list(values)

    d_hat = float(np.mean(values))
    sigma = sigma_hat(corrected) if len(corrected) >= 2 else None
    d_corr = float(np.mean(corrected))
    if correction is Correction.PLUS_TWO_SIGMA:
        if sigma is None:
            raise InsufficientBlocks("the +2 sigma correction needs at least two valid blocks")
        d_corr = plus_two_sigma(d_hat, sigma)

    density_eps = float(deg_eps.sum()) / (t * m * (n - 1))
    density_2eps = float(deg_2eps.sum()) / (t * m * (n - 1))
    if density_eps == 0:
        notes.append("graph at eps is empty on the sampled rows")
    if density_2eps == 1:
        notes.append("graph at 2 eps is complete on the sampled rows")
    rounded = round_half_away(d_corr) if config.round_to_integer else None
    return DimensionEstimate(
        d_hat=d_hat, d_corrected=d_corr, correction=correction,
        block_values=values, corrected_values=corrected, sigma_hat=sigma,
        epsilon=epsilon, m=m, t=t, n=n, rounded=rounded, failed_blocks=failed,
        p_eps=p1s, p_2eps=p2s, density_eps=density_eps, density_2eps=density_2eps,
        warnings=notes,
    )


@dataclass(frozen=True)
class _Profile:
    radius: Optional[float]
    degrees: np.ndarray
    n: int
