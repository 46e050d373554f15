"""Point sets, node generators, fill/separation distances and exact k-NN search.

Points are plain float arrays: a single point has shape ``(d,)`` and a set of
``m`` points has shape ``(m, d)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError

__all__ = [
    "DomainBox",
    "NodeSet",
    "Stencil",
    "KnnIndex",
    "uniform_nodes",
    "halton_nodes",
    "grid_points",
    "separation_distance",
    "fill_distance",
    "knn",
    "knn_bruteforce",
    "euclidean",
    "read_nodes_csv",
    "write_nodes_csv",
]


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def as_points(x, dim=None):
    """Coerce ``x`` to an ``(m, d)`` float array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(1, -1) if dim is None or dim == x.size else x.reshape(-1, 1)
    if x.ndim != 2:
        raise InvalidArgumentError(f"expected an array of points, got shape {x.shape}")
    if dim is not None and x.shape[1] != dim:
        raise InvalidArgumentError(f"points have dimension {x.shape[1]}, expected {dim}")
    return x


def as_point(x, dim=None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise InvalidArgumentError(f"expected a single point, got shape {x.shape}")
    if dim is not None and x.size != dim:
        raise InvalidArgumentError(f"point has dimension {x.size}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("point coordinates must be finite")
    return x


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box ``[lower, upper]`` hosting the domain."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidArgumentError("box bounds must be vectors of equal length")
        if not np.all(lo < hi):
            raise InvalidArgumentError("box requires lower < upper on every axis")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "DomainBox":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, points) -> np.ndarray:
        p = as_points(points, self.dim)
        return np.all((p >= self.lower) & (p <= self.upper), axis=1)


@dataclass(frozen=True)
class NodeSet:
    """Pairwise distinct data sites, optionally carrying sampled values."""

    points: np.ndarray
    values: Optional[np.ndarray] = None
    check_distinct: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidArgumentError(f"points must have shape (N, d), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("node coordinates must be finite")
        if self.check_distinct and len(pts) > 1:
            d, _ = cKDTree(pts).query(pts, k=2)
            if np.min(d[:, 1]) == 0.0:
                raise InvalidArgumentError("nodes must be pairwise distinct")
        object.__setattr__(self, "points", _frozen(pts))
        if self.values is not None:
            vals = np.asarray(self.values, dtype=np.float64).ravel()
            if vals.size != len(pts):
                raise InvalidArgumentError(
                    f"{vals.size} values given for {len(pts)} nodes"
                )
            object.__setattr__(self, "values", _frozen(vals))

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_values(self, values) -> "NodeSet":
        return NodeSet(self.points, values, check_distinct=False)


@dataclass(frozen=True)
class Stencil:
    """The ``n`` nearest nodes of one query point, sorted by distance."""

    indices: np.ndarray
    distances: np.ndarray

    @property
    def radius(self) -> float:
        return float(self.distances[-1])

    def __len__(self):
        return len(self.indices)


# --- node generators -----------------------------------------------------


def uniform_nodes(box: DomainBox, counts: Sequence[int]) -> NodeSet:
    """Tensor grid including the box corners, axis 0 varying fastest."""
    counts = [int(c) for c in np.atleast_1d(counts)]
    if len(counts) != box.dim:
        raise InvalidArgumentError(f"need {box.dim} per-axis counts, got {len(counts)}")
    if any(c < 2 for c in counts):
        raise InvalidArgumentError("uniform grids need at least 2 points per axis")
    return NodeSet(grid_points(box, counts), check_distinct=False)


def grid_points(box: DomainBox, counts: Sequence[int]) -> np.ndarray:
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(box.lower, box.upper, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel(order="F") for g in mesh], axis=1)


def _first_primes(k):
    primes = []
    cand = 2
    while len(primes) < k:
        if all(cand % p for p in primes if p * p <= cand):
            primes.append(cand)
        cand += 1
    return primes


def _radical_inverse(idx: np.ndarray, base: int) -> np.ndarray:
    idx = idx.copy()
    out = np.zeros(idx.shape, dtype=np.float64)
    scale = 1.0 / base
    while np.any(idx > 0):
        out += scale * (idx % base)
        idx //= base
        scale /= base
    return out


def halton_nodes(count: int, dim: int, box: Optional[DomainBox] = None) -> NodeSet:
    """First ``count`` Halton points (index from 1, prime bases) mapped into ``box``."""
    if count < 1 or dim < 1:
        raise InvalidArgumentError("count and dim must be positive")
    if box is None:
        box = DomainBox(np.zeros(dim), np.ones(dim))
    if box.dim != dim:
        raise InvalidArgumentError("box dimension does not match dim")
    idx = np.arange(1, count + 1, dtype=np.int64)
    unit = np.stack([_radical_inverse(idx, b) for b in _first_primes(dim)], axis=1)
    return NodeSet(box.lower + unit * (box.upper - box.lower), check_distinct=False)


# --- distances -------------------------------------------------------------


def separation_distance(nodes: NodeSet) -> float:
    """Half the smallest pairwise distance."""
    if len(nodes) < 2:
        raise InvalidArgumentError("separation distance needs at least 2 nodes")
    d, _ = cKDTree(nodes.points).query(nodes.points, k=2)
    return 0.5 * float(np.min(d[:, 1]))


def fill_distance(nodes: NodeSet, probe) -> float:
    """Largest distance from a probe point to its nearest node.

    This is a lower estimate of the fill distance over the continuous domain;
    it converges as the probe set is refined.
    """
    probe_pts = probe.points if isinstance(probe, NodeSet) else as_points(probe, nodes.dim)
    if probe_pts.shape[1] != nodes.dim:
        raise InvalidArgumentError("probe and nodes differ in dimension")
    if len(nodes) == 0 or len(probe_pts) == 0:
        raise InvalidArgumentError("fill distance needs nonempty node and probe sets")
    d, _ = cKDTree(nodes.points).query(probe_pts, k=1)
    return float(np.max(d))


# --- nearest neighbours ----------------------------------------------------

Metric = Callable[[np.ndarray, np.ndarray], np.ndarray]


def euclidean(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Distances from point ``x`` to each row of ``pts``."""
    return np.sqrt(np.sum((pts - x) ** 2, axis=-1))


def _select(dist: np.ndarray, idx: np.ndarray, n: int):
    # ties on distance go to the lower node index
    order = np.lexsort((idx, dist), axis=-1)
    order = order[..., :n]
    return np.take_along_axis(idx, order, -1), np.take_along_axis(dist, order, -1)


def knn_bruteforce(points: np.ndarray, query: np.ndarray, n: int, metric: Optional[Metric] = None):
    """Exhaustive k-NN reference. Returns ``(indices, distances)``."""
    metric = metric or euclidean
    dist = np.asarray(metric(query, points), dtype=np.float64)
    idx = np.arange(len(points))
    return _select(dist, idx, min(n, len(points)))


class KnnIndex:
    """kd-tree backed exact k-NN with the lower-index tie rule.

    Results are identical to :func:`knn_bruteforce` with the Euclidean
    metric: the tree only proposes candidates, distances are recomputed with
    the reference formula and ranked by ``(distance, index)``.
    """

    def __init__(self, points):
        self.points = np.ascontiguousarray(as_points(points))
        if len(self.points) == 0:
            raise InvalidArgumentError("cannot index an empty node set")
        self._tree = cKDTree(self.points)

    def __len__(self):
        return len(self.points)

    def query(self, queries, n: int, chunk: int = 8192):
        q = as_points(queries, self.points.shape[1])
        if n < 1:
            raise InvalidArgumentError("n must be positive")
        N = len(self.points)
        n = min(n, N)
        k = min(N, 2 * n + 8)
        out_idx = np.empty((len(q), n), dtype=np.intp)
        out_dist = np.empty((len(q), n), dtype=np.float64)
        for lo in range(0, len(q), chunk):
            qs = q[lo : lo + chunk]
            _, cand = self._tree.query(qs, k=k)
            cand = cand.reshape(len(qs), k)
            dist = np.sqrt(np.sum((self.points[cand] - qs[:, None, :]) ** 2, axis=-1))
            idx, d = _select(dist, cand, n)
            if k < N:
                # a tie beyond the candidate window could displace the n-th pick
                unsafe = d[:, -1] >= np.max(dist, axis=1) * (1.0 - 1e-12)
                for row in np.flatnonzero(unsafe):
                    idx[row], d[row] = knn_bruteforce(self.points, qs[row], n)
            out_idx[lo : lo + len(qs)] = idx
            out_dist[lo : lo + len(qs)] = d
        return out_idx, out_dist


def knn(nodes, query, n: int, metric: Optional[Metric] = None) -> Stencil:
    """The ``n`` nearest nodes to ``query`` (all nodes if fewer).

    ``metric(x, pts)`` returns distances from ``x`` to each row of ``pts``;
    the default is Euclidean. Ties are broken by lower node index.
    """
    pts = nodes.points if isinstance(nodes, NodeSet) else as_points(nodes)
    if len(pts) == 0:
        raise InvalidArgumentError("knn on an empty node set")
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    x = as_point(query, pts.shape[1])
    idx, dist = knn_bruteforce(pts, x, n, metric)
    return Stencil(idx, dist)


# --- CSV -------------------------------------------------------------------


def write_nodes_csv(path, nodes: NodeSet) -> None:
    header = [f"x{j}" for j in range(nodes.dim)]
    cols = [nodes.points]
    if nodes.values is not None:
        header.append("value")
        cols.append(nodes.values[:, None])
    data = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")


def read_nodes_csv(path, require_values: bool = False) -> NodeSet:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise InvalidArgumentError(f"{path}: empty node file")
    header = [h.strip() for h in rows[0]]
    has_values = header[-1] == "value"
    dim = len(header) - int(has_values)
    if dim < 1 or header[:dim] != [f"x{j}" for j in range(dim)]:
        raise InvalidArgumentError(f"{path}: bad header {header!r}")
    if require_values and not has_values:
        raise InvalidArgumentError(f"{path}: missing 'value' column")
    if len(rows) < 2:
        raise InvalidArgumentError(f"{path}: no nodes")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from None
    if data.shape[1] != len(header):
        raise InvalidArgumentError(f"{path}: ragged rows")
    return NodeSet(data[:, :dim], data[:, dim] if has_values else None)
