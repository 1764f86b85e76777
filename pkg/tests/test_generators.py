import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcdim.errors import InvalidCount, InvalidParameter, InvalidS, UsageError
from rcdim.generators import (
    CHUNK, SIERPINSKI_C, GeneratorSpec, anisotropic_gaussian, gaussian_iso, generate, helix_raw,
    noisy_torus, sierpinski, swiss_roll, swiss_roll_raw, uniform_cube, uniform_sphere, helix,
)


def occupied_cells(points):
    """Oracle: occupied 3x3 cells of the carpet in the rotated frame u = x + y, v = y - x."""
    u = points[:, 0] + points[:, 1]
    v = points[:, 1] - points[:, 0]
    cells = set()
    for a, b in zip(u, v):
        cells.add((min(2, int((a + 0.5) * 3)), min(2, int((b + 0.5) * 3))))
    return cells


def test_sierpinski_sup_norm_bound():
    pts = sierpinski(20_000, seed=1).points
    assert np.abs(pts).max() <= 0.5


def test_sierpinski_depth_one_hits_the_eight_columns():
    pts = sierpinski(2000, depth=1, seed=2).points
    targets = {tuple(c) for c in (SIERPINSKI_C.T / 3.0)}
    assert {tuple(p) for p in pts} == targets


def test_sierpinski_center_cell_empty():
    cells = occupied_cells(sierpinski(100_000, seed=3).points)
    assert len(cells) == 8 and (1, 1) not in cells


def test_gaussian_moments():
    pts = gaussian_iso(20_000, 5, seed=4).points
    assert abs(pts.mean()) <= 4 / math.sqrt(pts.size)
    assert abs(pts.std() - 1) < 0.05
    i = np.arange(1000)
    d2 = np.sum((pts[i] - pts[i + 1000]) ** 2, axis=1)
    assert abs(d2.mean() / 2 / 5 - 1) < 0.05


def test_anisotropic_noise_scale():
    pts = anisotropic_gaussian(20_000, 2, 64.0, seed=5).points
    assert abs(pts[:, 2].std() / 0.125 - 1) < 0.1
    assert abs(pts[:, 0].std() - 1) < 0.05


def test_anisotropic_isotropic_cases():
    a = anisotropic_gaussian(1000, 3, 1.0, seed=6).points
    b = gaussian_iso(1000, 5, seed=6).points
    assert np.array_equal(a, b)
    c = anisotropic_gaussian(1000, 5, 9.0, seed=6).points
    assert np.array_equal(c, b)


@pytest.mark.parametrize("s", [0, 6, 2.5])
def test_anisotropic_invalid_s(s):
    with pytest.raises(InvalidS):
        anisotropic_gaussian(10, s, 1.0)


def test_sphere():
    pts = uniform_sphere(20_000, 3, seed=7).points
    norms = np.linalg.norm(pts, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-15)
    x1 = pts[:, 0] ** 2
    assert abs(x1.mean() - 0.25) <= 3 * x1.std() / math.sqrt(len(x1))


def test_cube_range():
    pts = uniform_cube(5000, 4, seed=8).points
    assert pts.min() >= 0.0 and pts.max() <= 1.0


def test_helix_on_cylinder_and_standardized():
    raw = helix_raw(1000, seed=9)
    assert np.allclose(raw[:, 0] ** 2 + raw[:, 1] ** 2, 1.0, atol=1e-14)
    pts = helix(1000, seed=9).points
    assert np.std(pts.ravel(), ddof=1) == pytest.approx(1.0)
    assert np.allclose(pts.mean(axis=0), 0.0, atol=1e-12)


def test_swiss_roll_parameter_ranges():
    raw = swiss_roll_raw(2000, seed=10)
    t = np.hypot(raw[:, 0], raw[:, 2])
    assert t.min() >= 1.5 * math.pi - 1e-12 and t.max() <= 4.5 * math.pi + 1e-12
    assert raw[:, 1].min() >= 0 and raw[:, 1].max() <= 20
    assert swiss_roll(2000, seed=10).dim == 3


def test_torus_implicit_equation():
    pts = noisy_torus(5000, R=2.0, r_tube=1.0, sigma=0.0, seed=11).points
    resid = (np.hypot(pts[:, 0], pts[:, 1]) - 2.0) ** 2 + pts[:, 2] ** 2 - 1.0
    assert np.abs(resid).max() < 1e-12


def test_torus_area_uniform():
    # the outer half (cos phi > 0) carries (pi R + 2 r) / (2 pi R) of the area
    pts = noisy_torus(100_000, seed=12).points
    outer = np.mean(np.hypot(pts[:, 0], pts[:, 1]) > 2.0)
    expected = (math.pi * 2 + 2) / (2 * math.pi * 2)
    assert abs(outer - expected) < 4 * math.sqrt(expected * (1 - expected) / 100_000)


@pytest.mark.parametrize("kwargs", [{"R": 0.0}, {"r_tube": -1.0}, {"sigma": -0.1}])
def test_torus_invalid(kwargs):
    with pytest.raises(InvalidParameter):
        noisy_torus(10, **kwargs)


@pytest.mark.parametrize("bad", [0, -3, 2.5])
def test_invalid_count(bad):
    with pytest.raises(InvalidCount):
        gaussian_iso(bad, 2)


@pytest.mark.parametrize("kind, params", [
    ("sierpinski", {}), ("gaussian", {"d": 3}), ("anisotropic", {"s": 2, "snr": 4.0}),
    ("sphere", {"d": 2}), ("cube", {"d": 2}), ("helix", {}), ("swiss_roll", {}),
    ("torus", {"sigma": 0.1}),
])
def test_seed_determinism_and_worker_independence(kind, params):
    n = CHUNK + 1000
    a = generate(kind, n, seed=3, workers=1, **params).points
    b = generate(kind, n, seed=3, workers=4, **params).points
    c = generate(kind, n, seed=4, workers=1, **params).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@given(st.integers(1, 200), st.integers(0, 2**32))
def test_prefix_of_a_chunk_is_stable(n, seed):
    full = gaussian_iso(200, 2, seed=seed).points
    assert np.array_equal(gaussian_iso(n, 2, seed=seed).points, full[:n])


def test_equidistribution_smoke():
    u = uniform_cube(100_000, 1, seed=13).points.ravel()
    counts = np.histogram(u, bins=10, range=(0, 1))[0]
    chi2 = np.sum((counts - 10_000) ** 2 / 10_000)
    assert chi2 < 27.9  # 99.9% quantile of chi-square with 9 degrees of freedom


def test_spec_validation_and_true_dimension():
    assert GeneratorSpec("sierpinski", 10).true_dimension == pytest.approx(math.log(8) / math.log(3))
    assert GeneratorSpec("gaussian_iso", 10, params={"d": 4}).true_dimension == 4
    with pytest.raises(UsageError):
        GeneratorSpec("klein_bottle", 10)
    with pytest.raises(UsageError):
        GeneratorSpec("helix", 10, params={"d": 2})
