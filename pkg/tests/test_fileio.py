import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcdim.errors import IndexOutOfRange, InvalidParameter, NestednessViolation, ParseError
from rcdim.estimator import estimate_dimension
from rcdim.fileio import (
    EdgeListGraphPair, dumps_csv, dumps_json, edges_from_cloud, read_graph_pair, read_points,
    write_edge_list, write_points,
)
from rcdim.generators import gaussian_iso, sierpinski
from rcdim.geometry import PointCloud


@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 4)),
              elements=st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)))
def test_points_round_trip_bit_exact(tmp_path_factory, pts):
    path = tmp_path_factory.mktemp("pts") / "p.csv"
    write_points(path, PointCloud(pts))
    assert np.array_equal(read_points(path).points, pts)


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,4\n5,oops\n")
    with pytest.raises(ParseError, match="line 3"):
        read_points(path)
    path.write_text("1,2\n3\n")
    with pytest.raises(ParseError, match="line 2"):
        read_points(path)
    path.write_text("")
    with pytest.raises(ParseError):
        read_points(path)


def test_edge_list_round_trip_and_degrees(tmp_path):
    e1 = [(0, 1), (2, 1)]
    e2 = [(0, 1), (1, 2), (0, 3)]
    write_edge_list(tmp_path / "a.txt", 4, e1)
    write_edge_list(tmp_path / "b.txt", 4, e2)
    g = read_graph_pair(tmp_path / "a.txt", tmp_path / "b.txt")
    d1, d2 = g.degree_pair([0, 1, 2, 3])
    assert list(d1) == [1, 2, 1, 0]
    assert list(d2) == [2, 2, 1, 1]


def test_nestedness_violation():
    with pytest.raises(NestednessViolation):
        EdgeListGraphPair.from_edges(3, [(0, 2)], [(0, 1)])


def test_edge_validation():
    with pytest.raises(InvalidParameter):
        EdgeListGraphPair.from_edges(3, [(1, 1)], [(1, 1)])
    with pytest.raises(InvalidParameter):
        EdgeListGraphPair.from_edges(3, [(0, 1), (1, 0)], [(0, 1)])
    with pytest.raises(IndexOutOfRange):
        EdgeListGraphPair.from_edges(3, [(0, 3)], [(0, 3)])


@pytest.mark.parametrize("text, line", [("m 4\n0 1\n", 1), ("n 4\n0 1 2\n", 2), ("n 4\n0 x\n", 2)])
def test_edge_parse_errors(tmp_path, text, line):
    (tmp_path / "a.txt").write_text(text)
    (tmp_path / "b.txt").write_text("n 4\n")
    with pytest.raises(ParseError, match=f"line {line}"):
        read_graph_pair(tmp_path / "a.txt", tmp_path / "b.txt")


def test_complete_pair_gives_zero():
    n = 6
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    g = EdgeListGraphPair.from_edges(n, edges, edges)
    with pytest.warns(UserWarning):
        est = estimate_dimension(g, m=3, blocks=2)
    assert est.d_hat == 0.0 and est.sigma_hat == 0.0


@pytest.mark.parametrize("cloud", [sierpinski(400, seed=1), gaussian_iso(300, 3, seed=2)])
def test_edge_path_matches_point_path(cloud):
    eps = 0.5 * float(np.std(cloud.points))
    g = EdgeListGraphPair.from_edges(cloud.n, edges_from_cloud(cloud, eps), edges_from_cloud(cloud, 2 * eps))
    a = estimate_dimension(cloud, epsilon=eps, seed=7)
    b = estimate_dimension(g, seed=7)
    assert a.block_values == b.block_values
    assert a.sigma_hat == b.sigma_hat


def test_json_uses_17_digits_and_parses():
    text = dumps_json({"x": 0.1, "nan": float("nan"), "n": 3, "flag": True, "v": [1.5, None]})
    assert '"x": 0.10000000000000001' in text
    back = json.loads(text)
    assert back["x"] == 0.1 and back["nan"] is None and back["v"] == [1.5, None]


def test_csv_formatting():
    text = dumps_csv([{"a": 1, "b": 1 / 3, "c": None, "d": False}], ["a", "b", "c", "d"])
    assert text.splitlines() == ["a,b,c,d", "1,0.33333333333333331,,false"]
    assert float(text.splitlines()[1].split(",")[1]) == 1 / 3
