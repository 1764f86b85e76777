import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from rcdim.errors import DegenerateProbability, InvalidSampleCount, UsageError
from rcdim.estimator import ScaleFunction
from rcdim.theory import (
    DistributionSpec, PopulationProbs, ball_volume, doubling_curve, gaussian_p1_erf_form,
    gaussian_p1_exact, general_bracket, mc_probs, scaling_curve, scaling_value, theorem1_scaling,
    theorem2_variance, v_eps, variance_constants,
)


def test_ball_volume_examples():
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(1, 0.3) == pytest.approx(0.6)


@given(st.integers(1, 20), st.floats(0.01, 5.0))
def test_ball_volume_doubling(d, eps):
    assert ball_volume(d, 2 * eps) / ball_volume(d, eps) == pytest.approx(2.0 ** d, rel=1e-12)


def test_gaussian_p1_one_dimensional():
    assert gaussian_p1_exact(1, 1.0) == pytest.approx(math.erf(0.5), rel=1e-14)
    assert gaussian_p1_erf_form(1, 1.0) == pytest.approx(math.erf(0.5), rel=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_gaussian_p1_chi_square_oracle(d):
    # |X - Y|^2 / 2 is chi-square(d); scipy's cdf is an independent oracle
    from scipy import stats
    for eps in (0.3, 1.0, 2.5):
        assert gaussian_p1_exact(d, eps) == pytest.approx(stats.chi2.cdf(eps * eps / 2, d), rel=1e-12)


def test_gaussian_p1_even_dimension_closed_form():
    # for d = 2 the chi-square cdf is 1 - exp(-eps^2 / 4)
    assert gaussian_p1_exact(2, 1.3) == pytest.approx(1 - math.exp(-1.3 ** 2 / 4), rel=1e-14)


def test_gaussian_small_eps_ratio_tends_to_doubling():
    for d in (1, 2, 3):
        r = gaussian_p1_exact(d, 2e-3) / gaussian_p1_exact(d, 1e-3)
        assert r == pytest.approx(2.0 ** d, rel=1e-5)


def test_uniform_segment_p1():
    p = mc_probs(DistributionSpec("uniform_segment", 1), 0.5, 200_000, seed=1)
    se = p.standard_errors["p1_eps"]
    assert abs(p.p1_eps - 0.75) <= 3 * se


@pytest.mark.parametrize("method", ["indicator", "ball", "conditional"])
def test_methods_agree_with_closed_form(method):
    p = mc_probs(DistributionSpec("gaussian", 2), 0.8, 200_000, seed=3, method=method)
    for key, eps in (("p1_eps", 0.8), ("p1_2eps", 1.6)):
        assert abs(getattr(p, key) - gaussian_p1_exact(2, eps)) <= 4 * p.standard_errors[key]


@pytest.mark.parametrize("kind", ["uniform_cube", "exponential", "beta25", "cauchy", "gaussian"])
def test_jensen(kind):
    p = mc_probs(DistributionSpec(kind, 2), 0.5, 50_000, seed=2)
    assert p.p2_eps >= p.p1_eps ** 2 - 3 * p.standard_errors["p2_eps"]
    assert p.p2_2eps >= p.p1_2eps ** 2 - 3 * p.standard_errors["p2_2eps"]


def test_mc_deterministic_and_worker_independent():
    spec = DistributionSpec("exponential", 3)
    a = mc_probs(spec, 0.7, 150_000, seed=5, workers=1)
    b = mc_probs(spec, 0.7, 150_000, seed=5, workers=3)
    assert np.array_equal(a.vector, b.vector)


def test_mc_requires_samples():
    with pytest.raises(InvalidSampleCount):
        mc_probs(DistributionSpec("gaussian", 1), 1.0, 100)


def test_unknown_distribution():
    with pytest.raises(UsageError):
        DistributionSpec("lognormal", 2)


def erdos_renyi(p=0.1, q=0.3):
    return PopulationProbs.exact(1.0, p, q, p * p, q * q, p * q)


def test_theorem1_zero_for_constant_connection():
    assert theorem1_scaling(erdos_renyi(), 10) == 0.0


def test_theorem1_halves_when_m_doubles():
    pr = PopulationProbs.exact(1.0, 0.1, 0.3, 0.02, 0.1, 0.04)
    assert theorem1_scaling(pr, 20) == pytest.approx(theorem1_scaling(pr, 10) / 2)


def test_theorem1_degenerate():
    with pytest.raises(DegenerateProbability):
        theorem1_scaling(PopulationProbs.exact(1.0, 0.0, 0.3, 0.0, 0.1, 0.0), 10)


def test_bracket_reduces_to_v_eps_when_m_over_n_vanishes():
    pr = PopulationProbs.exact(1.0, 0.1, 0.3, 0.02, 0.1, 0.04)
    assert general_bracket(pr, 0.0) == pytest.approx(v_eps(pr), rel=1e-12)
    assert theorem2_variance(pr, d=2, m=10) == pytest.approx(v_eps(pr) / (10 * math.log(2) ** 2))


def test_bracket_vanishes_for_constant_connection():
    for r in (0.0, 0.01, 0.2):
        assert abs(general_bracket(erdos_renyi(), r)) < 1e-12


def test_bracket_tends_to_zero_with_connection_variance():
    values = []
    for s in (1e-1, 1e-2, 1e-3):
        p, q = 0.1, 0.3
        pr = PopulationProbs.exact(1.0, p, q, p * p * (1 + s), q * q * (1 + s), p * q * (1 + s))
        values.append(abs(general_bracket(pr, 0.05)))
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-2


def test_variance_constants_bundle():
    pr = PopulationProbs.exact(1.0, 0.1, 0.3, 0.02, 0.1, 0.04)
    vc = variance_constants(pr, m_over_n=0.1)
    assert vc.v_eps == pytest.approx(v_eps(pr))
    assert vc.g_log_deriv == pytest.approx(math.log(2))


def test_scaling_value_flags_degenerate_bracket():
    pt = scaling_value(erdos_renyi())
    assert pt.flagged and pt.value == -math.inf


def test_doubling_curve_gaussian_matches_closed_form():
    eps = 0.5
    curve = doubling_curve("gaussian", range(1, 5), eps, 100_000, seed=1)
    for pt in curve:
        exact = math.log2(gaussian_p1_exact(pt.d, 2 * eps) / gaussian_p1_exact(pt.d, eps))
        assert abs(pt.value - exact) <= 4 * pt.stderr + 1e-12


def test_doubling_curve_small_eps_limit():
    for kind in ("uniform_cube", "gaussian"):
        for pt in doubling_curve(kind, [1, 2, 3], 0.05, 100_000, seed=2):
            assert abs(pt.value - pt.d) < 0.1


def test_doubling_erf_form_is_exact_only_in_one_dimension():
    eps = 0.5
    erf_shift = math.log2((math.erf(eps) / 2) / math.erf(eps / 2))
    exact1 = math.log2(gaussian_p1_exact(1, 2 * eps) / gaussian_p1_exact(1, eps))
    assert exact1 == pytest.approx(1 + erf_shift, rel=1e-12)
    exact2 = math.log2(special.gammainc(1, eps ** 2) / special.gammainc(1, eps ** 2 / 4))
    assert abs(exact2 - (2 + erf_shift)) > 0.01


def test_scaling_curve_increases_for_large_d():
    curve = scaling_curve("gaussian", range(5, 16), 1.0, 100_000, seed=4)
    values = [pt.value for pt in curve]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_theorem2_uses_inverse_squared_slope():
    pr = PopulationProbs.exact(1.0, 0.1, 0.3, 0.02, 0.1, 0.04)
    steep = ScaleFunction.custom(lambda d: 4.0 ** d, lambda d: 2 * math.log(2))
    assert theorem2_variance(pr, steep, 1.0, 10) == pytest.approx(theorem2_variance(pr, d=1.0, m=10) / 4)
