"""Batch experiments: repeated estimation over a grid of sample sizes and row counts.

Each grid cell ``(n, m rule)`` is run ``reps`` times. Repetition ``r`` at
sample size ``n`` draws its design points from a seed derived from
``(seed, n, r)``, so every row rule sees the same clouds. Cells may run on
several threads; rows are always reported in grid order.
"""
from __future__ import annotations

import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rcdim.errors import InvalidParameter, RcdimError, UsageError
from rcdim.estimator import Correction, EstimatorConfig, ScaleFunction, estimate_dimension
from rcdim.generators import GeneratorSpec
from rcdim.geometry import PointCloud, default_epsilon

_POWER = re.compile(r"^n\^\(?([0-9.]+)(?:/([0-9.]+))?\)?$")


def resolve_m(rule, n: int) -> int:
    """Number of sampled rows for ``n`` vertices.

    Rules: ``log`` is ``ceil(max(1, log n))``, ``2log`` doubles it, ``n^a``
    (also ``n^(1/4)``) is ``ceil(n**a)``, ``n`` uses every vertex, and an
    integer is taken literally. The result is capped at ``n``.
    """
    text = str(rule).strip().lower().replace(" ", "")
    if text == "log":
        m = math.ceil(max(1.0, math.log(n)))
    elif text == "2log":
        m = 2 * math.ceil(max(1.0, math.log(n)))
    elif text == "n":
        m = n
    elif _POWER.match(text):
        num, den = _POWER.match(text).groups()
        a = float(num) / (float(den) if den else 1.0)
        m = math.ceil(n ** a - 1e-9)
    else:
        try:
            m = int(text)
        except ValueError:
            raise UsageError(f"unknown m rule {rule!r}") from None
    if m < 1:
        raise InvalidParameter(f"m rule {rule!r} gives m < 1")
    return min(int(m), n)


def resolve_epsilon(rule, cloud: PointCloud) -> float:
    """Connection radius for a cloud.

    Rules: ``sd`` is the pooled-sd default, ``gauss4`` is ``4 / sqrt(log n)``,
    ``noise`` is ``1 / sqrt(2 log n)``, and a number is used as given.
    """
    text = str(rule).strip().lower()
    n = cloud.n
    if text == "sd":
        return default_epsilon(cloud)
    if text == "gauss4":
        return 4.0 / math.sqrt(math.log(n))
    if text == "noise":
        return 1.0 / math.sqrt(2.0 * math.log(n))
    try:
        eps = float(text)
    except ValueError:
        raise UsageError(f"unknown epsilon rule {rule!r}") from None
    if not (math.isfinite(eps) and eps > 0):
        raise InvalidParameter("epsilon must be positive")
    return eps


@dataclass
class ExperimentConfig:
    """What to run. Either ``generator`` (kind plus parameters) or ``cloud`` must be set.

    With a fixed ``cloud`` every repetition reuses the same points and only
    the sampled rows change; ``n_grid`` is then ignored.
    """

    generator: Optional[str] = None
    generator_params: dict = field(default_factory=dict)
    cloud: Optional[PointCloud] = None
    n_grid: list = field(default_factory=lambda: [1000])
    m_rules: list = field(default_factory=lambda: ["log"])
    eps_rule: str = "sd"
    correction: Correction = Correction.NONE
    blocks: int = 10
    reps: int = 1
    seed: int = 0
    d_true: Optional[float] = None
    scale_function: str = "canonical"
    workers: int = 1

    def __post_init__(self):
        self.correction = Correction.parse(self.correction)
        if (self.generator is None) == (self.cloud is None):
            raise UsageError("set exactly one of generator and cloud")
        if int(self.reps) < 1:
            raise InvalidParameter("reps must be at least 1")
        if int(self.blocks) < 1:
            raise InvalidParameter("blocks must be at least 1")
        if self.cloud is not None:
            self.n_grid = [self.cloud.n]
        if not self.n_grid or not self.m_rules:
            raise InvalidParameter("grids must be nonempty")
        if self.scale_function not in ("canonical", "erf"):
            raise UsageError(f"unknown scale function {self.scale_function!r}")
        if self.generator is not None:
            GeneratorSpec(self.generator, int(self.n_grid[0]), 0, dict(self.generator_params))

    def true_dimension(self):
        if self.d_true is not None:
            return float(self.d_true)
        if self.generator is None:
            return None
        return GeneratorSpec(self.generator, 1, 0, dict(self.generator_params)).true_dimension


@dataclass
class ReportRow:
    """Aggregate of one grid cell over its repetitions."""

    n: int
    m_rule: str
    m: int
    blocks: int
    d_true: Optional[float]
    reps: int
    ok_reps: int
    mean: float
    sd: float
    mean_corrected: float
    sd_corrected: float
    mean_sigma_hat: Optional[float]
    coverage: Optional[float]
    mean_epsilon: Optional[float]
    seconds_per_run: float
    failures: int
    failure_codes: list = field(default_factory=list)
    values: list = field(default_factory=list)
    corrected_values: list = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return self.failures > 0

    def to_dict(self, with_values: bool = False) -> dict:
        out = {
            "n": self.n, "m_rule": self.m_rule, "m": self.m, "blocks": self.blocks,
            "d_true": self.d_true, "reps": self.reps, "ok_reps": self.ok_reps,
            "mean": self.mean, "sd": self.sd, "mean_corrected": self.mean_corrected,
            "sd_corrected": self.sd_corrected, "mean_sigma_hat": self.mean_sigma_hat,
            "coverage": self.coverage, "mean_epsilon": self.mean_epsilon,
            "seconds_per_run": self.seconds_per_run, "failures": self.failures,
            "flagged": self.flagged, "failure_codes": ";".join(sorted(set(self.failure_codes))),
        }
        if with_values:
            out["values"] = list(self.values)
            out["corrected_values"] = list(self.corrected_values)
        return out


REPORT_COLUMNS = (
    "n", "m_rule", "m", "blocks", "d_true", "reps", "ok_reps", "mean", "sd",
    "mean_corrected", "sd_corrected", "mean_sigma_hat", "coverage", "mean_epsilon",
    "seconds_per_run", "failures", "flagged", "failure_codes",
)


def derive_seed(*key) -> int:
    """A 63-bit seed determined by an integer key."""
    state = np.random.SeedSequence([int(k) for k in key]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _sd(values) -> float:
    return float(np.std(values, ddof=1)) if len(values) >= 2 else float("nan")


def _cell(config: ExperimentConfig, n_index: int, n: int, m_rule) -> ReportRow:
    m = resolve_m(m_rule, n)
    blocks = max(1, min(int(config.blocks), n // m))
    d_true = config.true_dimension()
    values, corrected, sigmas, epsilons, seconds, codes = [], [], [], [], [], []
    for r in range(int(config.reps)):
        try:
            if config.cloud is not None:
                cloud = config.cloud
            else:
                spec = GeneratorSpec(config.generator, n, derive_seed(config.seed, 0, n, r),
                                     dict(config.generator_params))
                cloud = spec.generate()
            eps = resolve_epsilon(config.eps_rule, cloud)
            g = ScaleFunction.erf_gaussian(eps) if config.scale_function == "erf" else ScaleFunction.canonical()
            est_config = EstimatorConfig(m=m, blocks=blocks, epsilon=eps, correction=config.correction,
                                         scale_function=g, seed=derive_seed(config.seed, 1, n, r))
            start = time.perf_counter()
            est = estimate_dimension(cloud, est_config)
            seconds.append(time.perf_counter() - start)
        except RcdimError as exc:
            codes.append(exc.code)
            continue
        values.append(est.d_hat)
        corrected.append(est.d_corrected)
        sigmas.append(est.sigma_hat)
        epsilons.append(eps)

    ok = len(values)
    nan = float("nan")
    coverage = None
    if d_true is not None and ok:
        spread = _sd(corrected)
        hits = 0
        for dc, s in zip(corrected, sigmas):
            width = s if s is not None else spread
            hits += bool(abs(d_true - dc) <= 2.0 * width) if math.isfinite(width) else 0
        coverage = hits / ok
    known = [s for s in sigmas if s is not None]
    return ReportRow(
        n=n, m_rule=str(m_rule), m=m, blocks=blocks, d_true=d_true, reps=int(config.reps), ok_reps=ok,
        mean=float(np.mean(values)) if ok else nan, sd=_sd(values),
        mean_corrected=float(np.mean(corrected)) if ok else nan, sd_corrected=_sd(corrected),
        mean_sigma_hat=float(np.mean(known)) if known else None, coverage=coverage,
        mean_epsilon=float(np.mean(epsilons)) if ok else None,
        seconds_per_run=float(np.mean(seconds)) if seconds else nan,
        failures=int(config.reps) - ok, failure_codes=codes, values=values, corrected_values=corrected,
    )


def run_experiment(config: ExperimentConfig) -> list:
    """One :class:`ReportRow` per ``(n, m rule)`` cell, in grid order.

    Failed repetitions are counted and flagged on their row; they never stop
    the run.
    """
    cells = [(i, int(n), rule) for i, n in enumerate(config.n_grid) for rule in config.m_rules]
    if config.workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(lambda c: _cell(config, *c), cells))
    return [_cell(config, *c) for c in cells]
