"""File formats: point CSVs, edge lists for a nested graph pair, and reports.

Point CSV
    One point per line, comma-separated decimal floats, no header.
Edge list
    First line ``n <count>``, then one 0-based ``i j`` pair per line. Two
    files hold the graphs at the smaller and the larger radius.

Floats are always written with 17 significant digits so that a value read
back is bit-identical to the one written.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from rcdim.errors import IndexOutOfRange, InvalidParameter, NestednessViolation, ParseError
from rcdim.geometry import PointCloud, compute_adjacency_rows

FLOAT_FMT = "%.17g"
SCHEMA_VERSION = 1


def format_float(x) -> str:
    return FLOAT_FMT % float(x)


# -- point clouds ----------------------------------------------------------------

def _parse_points(lines, source: str) -> np.ndarray:
    rows, width = [], None
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            row = [float(tok) for tok in text.split(",")]
        except ValueError:
            raise ParseError(f"{source}: line {lineno}: not a list of numbers: {text[:60]!r}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{source}: line {lineno}: expected {width} values, found {len(row)}")
        if not all(math.isfinite(v) for v in row):
            raise ParseError(f"{source}: line {lineno}: non-finite coordinate")
        rows.append(row)
    if not rows:
        raise ParseError(f"{source}: no points found")
    return np.array(rows, dtype=np.float64)


def read_points(path) -> PointCloud:
    """Read a point CSV; malformed content raises :class:`ParseError` naming the line."""
    with open(path, "r", encoding="utf-8") as fh:
        return PointCloud(_parse_points(fh, os.fspath(path)))


def write_points(path, cloud) -> None:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, pts.reshape(len(pts), -1), fmt=FLOAT_FMT, delimiter=",")


# -- edge lists ------------------------------------------------------------------

def _canonical_edges(edges, n: int, source: str) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise IndexOutOfRange(f"{source}: vertex index outside [0, {n})")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise InvalidParameter(f"{source}: self-loop")
    arr = np.sort(arr, axis=1)
    keys = arr[:, 0] * n + arr[:, 1]
    if np.unique(keys).size != keys.size:
        raise InvalidParameter(f"{source}: duplicate edge")
    return arr[np.argsort(keys, kind="stable")]


@dataclass(frozen=True)
class EdgeListGraphPair:
    """Two nested graphs on the same ``n`` vertices, at radii labelled ``eps`` and ``2 eps``.

    The radii themselves are unknown; only the degrees of sampled rows are
    used. Every edge of the smaller graph must also be an edge of the larger
    one.
    """

    n: int
    edges_eps: np.ndarray
    edges_2eps: np.ndarray
    label_eps: str = "eps"
    label_2eps: str = "2eps"

    @classmethod
    def from_edges(cls, n: int, edges_eps, edges_2eps, label_eps="eps", label_2eps="2eps"):
        if isinstance(n, bool) or int(n) != n or n < 2:
            raise InvalidParameter(f"vertex count must be an integer >= 2, got {n!r}")
        n = int(n)
        e1 = _canonical_edges(edges_eps, n, label_eps)
        e2 = _canonical_edges(edges_2eps, n, label_2eps)
        k1 = e1[:, 0] * n + e1[:, 1]
        k2 = e2[:, 0] * n + e2[:, 1]
        missing = ~np.isin(k1, k2)
        if np.any(missing):
            i, j = e1[np.argmax(missing)]
            raise NestednessViolation(
                f"{int(missing.sum())} edges at {label_eps} are absent at {label_2eps}, e.g. ({i}, {j})")
        return cls(n, e1, e2, label_eps, label_2eps)

    @cached_property
    def _degrees(self):
        return tuple((np.bincount(e[:, 0], minlength=self.n)
                      + np.bincount(e[:, 1], minlength=self.n)).astype(np.int64)
                     for e in (self.edges_eps, self.edges_2eps))

    def degrees(self, which: int = 0) -> np.ndarray:
        """Full degree sequence of the graph at ``eps`` (``which=0``) or ``2 eps``."""
        return self._degrees[0 if which == 0 else 1].copy()

    def degree_pair(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size and (rows.min() < 0 or rows.max() >= self.n):
            raise IndexOutOfRange("row index outside the graph")
        return self._degrees[0][rows], self._degrees[1][rows]


def _parse_edge_list(lines, source: str):
    n, pairs = None, []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ParseError(f"{source}: line {lineno}: expected header 'n <count>'")
            try:
                n = int(parts[1])
            except ValueError:
                raise ParseError(f"{source}: line {lineno}: bad vertex count {parts[1]!r}") from None
            continue
        if len(parts) != 2:
            raise ParseError(f"{source}: line {lineno}: expected 'i j'")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"{source}: line {lineno}: indices must be integers") from None
    if n is None:
        raise ParseError(f"{source}: missing header 'n <count>'")
    return n, np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_edge_list(path):
    """Return ``(n, edges)`` from one edge-list file."""
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_edge_list(fh, os.fspath(path))


def write_edge_list(path, n: int, edges) -> None:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"n {int(n)}\n")
        np.savetxt(fh, edges, fmt="%d", delimiter=" ")


def read_graph_pair(path_eps, path_2eps) -> EdgeListGraphPair:
    n1, e1 = read_edge_list(path_eps)
    n2, e2 = read_edge_list(path_2eps)
    if n1 != n2:
        raise ParseError(f"vertex counts differ: {n1} in {path_eps}, {n2} in {path_2eps}")
    return EdgeListGraphPair.from_edges(n1, e1, e2, os.fspath(path_eps), os.fspath(path_2eps))


def edges_from_cloud(cloud, radius: float) -> np.ndarray:
    """All pairs ``i < j`` within ``radius`` (inclusive), in lexicographic order."""
    cloud = cloud if isinstance(cloud, PointCloud) else PointCloud(cloud)
    adj = compute_adjacency_rows(cloud, radius=radius, rows=np.arange(cloud.n))
    out = []
    for i, nb in zip(adj.rows, adj.neighbors):
        nb = np.asarray(nb, dtype=np.int64)
        nb = nb[nb > i]
        out.append(np.column_stack([np.full(nb.size, i, dtype=np.int64), nb]))
    return np.concatenate(out, axis=0) if out else np.empty((0, 2), dtype=np.int64)


# -- reports ---------------------------------------------------------------------

def _json_token(obj) -> str:
    if obj is None or obj is True or obj is False:
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format_float(x) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_json_token(str(k))}: {_json_token(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_token(v) for v in obj) + "]"
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return _json_token(obj.value)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON text with every float written to 17 significant digits; non-finite floats become null."""
    return _json_token(obj)


def dumps_csv(rows, columns) -> str:
    """CSV text with a header; floats use 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        out = []
        for c in columns:
            v = row.get(c)
            if v is None:
                out.append("")
            elif isinstance(v, (bool, np.bool_)):
                out.append(str(bool(v)).lower())
            elif isinstance(v, (float, np.floating)):
                out.append(format_float(v))
            else:
                out.append(str(v))
        writer.writerow(out)
    return buf.getvalue()
