"""Moving least squares in Backus-Gilbert form.

For every evaluation point ``x`` the ``n`` nearest nodes form a stencil and
the shape functions are

    alpha = W P^T (P W P^T)^{-1} p(x)

with ``P`` the polynomial basis (shifted to ``x`` and scaled by the stencil
radius) at the stencil nodes and ``W`` the diagonal of weights. Because the
basis is shifted, ``p(x) = e_1``. Passing a :class:`ScaleFunction` makes the
weights act on lifted distances, which is the discontinuity-aware variant.

Evaluation is vectorized over points: each chunk of points is solved as a
batch of tiny ``Q x Q`` systems.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, SingularSystemError
from .geometry import KnnIndex, NodeSet, Stencil, as_point, as_points
from .scaling import ScaleFunction, lift, psi
from .weights import WeightSpec, eval_weight

__all__ = [
    "PolynomialBasis",
    "MlsConfig",
    "LocalSystem",
    "MovingLeastSquares",
    "eval_basis",
    "solve_shape_functions",
    "evaluate",
    "evaluate_many",
]

EXACT_HIT_TOL = 1e-12
REPRODUCTION_TOL = 1e-8
RANK_TOL = 1e-13


class PolynomialBasis:
    """Monomials of total degree <= ``degree`` in graded-lex order, constant first."""

    def __init__(self, dim: int, degree: int):
        if dim < 1 or degree < 0:
            raise InvalidArgumentError("need dim >= 1 and degree >= 0")
        self.dim = int(dim)
        self.degree = int(degree)
        exps = []
        for total in range(degree + 1):
            same = [e for e in itertools.product(range(total + 1), repeat=dim) if sum(e) == total]
            exps.extend(sorted(same, reverse=True))
        self.exponents = np.array(exps, dtype=np.int64).reshape(-1, dim)
        assert len(self.exponents) == comb(degree + dim, dim)

    def __len__(self):
        return len(self.exponents)

    def __repr__(self):
        return f"PolynomialBasis(dim={self.dim}, degree={self.degree})"

    def __eq__(self, other):
        return isinstance(other, PolynomialBasis) and (self.dim, self.degree) == (other.dim, other.degree)

    def __hash__(self):
        return hash((self.dim, self.degree))

    def values(self, scaled_diffs: np.ndarray) -> np.ndarray:
        """Monomials of ``(..., d)`` already shifted/scaled offsets -> ``(..., Q)``."""
        return np.prod(scaled_diffs[..., None, :] ** self.exponents, axis=-1)


def eval_basis(basis: PolynomialBasis, center, scale: float, point) -> np.ndarray:
    """Shifted and scaled monomials ``((point - center) / scale) ** e_k``."""
    if not scale > 0:
        raise InvalidArgumentError("basis scale must be positive")
    c = as_point(center, basis.dim)
    p = as_point(point, basis.dim)
    return basis.values((p - c) / scale)


@dataclass(frozen=True)
class MlsConfig:
    """Settings for one MLS approximant.

    ``stencil_size=None`` means ``2 * Q``. ``scale_fn=None`` gives classic
    MLS. ``stencil_metric`` chooses whether neighbours are selected by plain
    or lifted distance; weights always use the lifted distance when a scale
    function is present.

    A singular local system is retried with a doubled stencil when
    ``grow_on_singular`` is set; if that still fails and
    ``reduce_degree_on_singular`` is set, the degree is lowered step by step
    (down to Shepard weights) for that point only.
    """

    basis: PolynomialBasis
    weight: WeightSpec
    scale_fn: Optional[ScaleFunction] = None
    stencil_size: Optional[int] = None
    stencil_metric: str = "euclidean"
    grow_on_singular: bool = True
    reduce_degree_on_singular: bool = False
    exact_hit: bool = True

    def __post_init__(self):
        if self.stencil_metric not in ("euclidean", "augmented"):
            raise InvalidArgumentError("stencil_metric must be 'euclidean' or 'augmented'")
        if self.stencil_size is not None and int(self.stencil_size) < 1:
            raise InvalidArgumentError("stencil_size must be positive")

    @property
    def n(self) -> int:
        return int(self.stencil_size) if self.stencil_size is not None else 2 * len(self.basis)


@dataclass
class LocalSystem:
    """One local solve. ``P`` is ``Q x n``; rows of ``P`` are basis functions.

    For an exact hit of the singular weight the solve is bypassed: ``shape``
    is an indicator and ``lagrange`` is NaN. ``degree`` is the polynomial
    degree actually reproduced (lower than the configured one only after a
    degree-reduction fallback).
    """

    eval_point: np.ndarray
    stencil: Stencil
    P: np.ndarray
    W: np.ndarray
    lagrange: np.ndarray
    shape: np.ndarray
    scale: float
    exact_hit: bool = False
    degree: int = 0


@dataclass
class _Rows:
    idx: np.ndarray
    dist: np.ndarray
    scale: np.ndarray
    W: np.ndarray
    P: np.ndarray  # (m, n, Q)
    lam: np.ndarray
    alpha: np.ndarray
    hit: np.ndarray
    bad: np.ndarray


class MovingLeastSquares:
    """MLS approximant over a fixed node set.

    The spatial index and node scale values are built once; queries are
    read-only, so one instance can serve several threads.
    """

    def __init__(self, cfg: MlsConfig, nodes: NodeSet):
        if len(nodes) == 0:
            raise InvalidArgumentError("empty node set")
        if nodes.dim != cfg.basis.dim:
            raise InvalidArgumentError("node and basis dimensions differ")
        self.cfg = cfg
        self.nodes = nodes
        self.points = np.ascontiguousarray(nodes.points)
        sf = cfg.scale_fn
        self.node_psi = None if sf is None else np.asarray(psi(sf, self.points), dtype=np.float64)
        if cfg.stencil_metric == "augmented" and sf is not None:
            self._index = KnnIndex(lift(sf, self.points))
        else:
            self._index = KnnIndex(self.points)

    # -- batch machinery ------------------------------------------------

    def _stencils(self, xs, n):
        q = xs
        if self.cfg.stencil_metric == "augmented" and self.cfg.scale_fn is not None:
            q = lift(self.cfg.scale_fn, xs)
        return self._index.query(q, n)

    def _solve_rows(self, xs: np.ndarray, n: int, basis: PolynomialBasis) -> _Rows:
        cfg = self.cfg
        idx, dist = self._stencils(xs, n)
        m, n = idx.shape
        scale = dist[:, -1].copy()
        scale[scale <= 0] = 1.0

        nodes = self.points[idx]
        diff = nodes - xs[:, None, :]
        sq = np.sum(diff * diff, axis=-1)
        if self.node_psi is not None:
            x_psi = psi(cfg.scale_fn, xs)
            sq = sq + (self.node_psi[idx] - x_psi[:, None]) ** 2
        W = eval_weight(cfg.weight, np.sqrt(sq))
        if cfg.weight.regularization > 0:
            W = W + cfg.weight.regularization

        hit = np.any(np.isinf(W), axis=1)
        if cfg.weight.singular and cfg.exact_hit:
            hit |= dist[:, 0] < EXACT_HIT_TOL * scale

        P = basis.values(diff / scale[:, None, None])
        Wc = np.where(hit[:, None], 0.0, W)
        lam, alpha, deficient = _solve_weighted(P, Wc, ~hit)
        alpha[hit] = 0.0
        alpha[hit, 0] = 1.0

        resid = np.einsum("mnq,mn->mq", P, alpha)
        resid[:, 0] -= 1.0
        bad = deficient | ~np.all(np.abs(resid) <= REPRODUCTION_TOL, axis=1)
        return _Rows(idx, dist, scale, W, P, lam, alpha, hit, bad)

    def _attempts(self):
        n, basis = self.cfg.n, self.cfg.basis
        yield n, basis
        if self.cfg.grow_on_singular:
            n *= 2
            yield n, basis
        if self.cfg.reduce_degree_on_singular:
            for degree in range(basis.degree - 1, -1, -1):
                yield n, PolynomialBasis(basis.dim, degree)

    def _shape_chunk(self, xs: np.ndarray):
        idx = alpha = None
        todo = np.arange(len(xs))
        for n, basis in self._attempts():
            rows = self._solve_rows(xs[todo], n, basis)
            if idx is None:
                idx, alpha = rows.idx, rows.alpha
            else:
                width = max(idx.shape[1], rows.idx.shape[1])
                idx, alpha = _pad(idx, width, edge=True), _pad(alpha, width)
                idx[todo] = _pad(rows.idx, width, edge=True)
                alpha[todo] = _pad(rows.alpha, width)
            last = rows
            todo = todo[rows.bad]
            if len(todo) == 0:
                return idx, alpha
        first = todo[0]
        raise SingularSystemError(
            f"singular local system at x={xs[first].tolist()}",
            point=xs[first],
            indices=last.idx[np.flatnonzero(last.bad)[0]],
        )

    # -- public API -----------------------------------------------------

    def shape_functions(self, xs, chunk: int = 4096, threads: int = 1):
        """Stencil indices and shape functions, both ``(m, width)``.

        Rows whose stencil had to grow are wider; narrower rows are padded
        with zero shape-function entries.
        """
        xs = as_points(xs, self.points.shape[1])
        if len(xs) == 0:
            return np.empty((0, self.cfg.n), dtype=np.intp), np.empty((0, self.cfg.n))
        chunks = [xs[lo : lo + chunk] for lo in range(0, len(xs), chunk)]
        if threads == 1 or len(chunks) == 1:
            parts = [self._shape_chunk(c) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=threads or None) as pool:
                parts = list(pool.map(self._shape_chunk, chunks))
        width = max(p[0].shape[1] for p in parts)
        idx = np.vstack([_pad(p[0], width, edge=True) for p in parts])
        alpha = np.vstack([_pad(p[1], width) for p in parts])
        return idx, alpha

    def __call__(self, xs, chunk: int = 4096, threads: int = 1) -> np.ndarray:
        if self.nodes.values is None:
            raise InvalidArgumentError("node set carries no values")
        idx, alpha = self.shape_functions(xs, chunk=chunk, threads=threads)
        return np.sum(alpha * self.nodes.values[idx], axis=1)

    def local_system(self, x) -> LocalSystem:
        x = as_point(x, self.points.shape[1])
        for n, basis in self._attempts():
            rows = self._solve_rows(x[None, :], n, basis)
            if not rows.bad[0]:
                break
        else:
            raise SingularSystemError(
                f"singular local system at x={x.tolist()}", point=x, indices=rows.idx[0]
            )
        return LocalSystem(
            eval_point=x,
            stencil=Stencil(rows.idx[0], rows.dist[0]),
            P=rows.P[0].T.copy(),
            W=rows.W[0],
            lagrange=rows.lam[0],
            shape=rows.alpha[0],
            scale=float(rows.scale[0]),
            exact_hit=bool(rows.hit[0]),
            degree=basis.degree,
        )


def _pad(a, width, edge=False):
    if a.shape[1] == width:
        return a
    fill = np.repeat(a[:, :1], width - a.shape[1], axis=1) if edge else np.zeros((len(a), width - a.shape[1]))
    return np.hstack([a, fill])


def _solve_weighted(P: np.ndarray, W: np.ndarray, rows: np.ndarray):
    """Multipliers and shape functions for the rows selected by ``rows``.

    ``B = sqrt(W) P^T`` is factored as ``B = Q R``, so ``R`` is the Cholesky
    factor of ``P W P^T`` without ever forming that matrix (its condition
    number is the square of ``B``'s). Rows whose ``R`` is numerically
    rank deficient fall back to a column-pivoted minimum-norm solve of
    ``B^T beta = e_1``, for which ``alpha = sqrt(W) beta``; those whose
    rank is still below ``Q`` are reported in the returned mask.
    """
    m, n, Q = P.shape
    lam = np.full((m, Q), np.nan)
    alpha = np.zeros((m, n))
    deficient = np.zeros(m, dtype=bool)
    sel = np.flatnonzero(rows)
    if len(sel) == 0:
        return lam, alpha, deficient
    sw = np.sqrt(W[sel])
    B = sw[:, :, None] * P[sel]
    e1 = np.zeros(Q)
    e1[0] = 1.0
    with np.errstate(invalid="ignore"):
        qmat, R = np.linalg.qr(B)
    diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
    ok = np.all(np.isfinite(R), axis=(1, 2)) & (np.min(diag, axis=1) > RANK_TOL * np.max(diag, axis=1))
    if n < Q:
        ok[:] = False
    if np.any(ok):
        Rt = np.swapaxes(R[ok], 1, 2)
        y = np.linalg.solve(Rt, np.broadcast_to(e1, (len(Rt), Q))[..., None])
        lam[sel[ok]] = np.linalg.solve(R[ok], y)[..., 0]
        alpha[sel[ok]] = sw[ok] * np.einsum("mnq,mq->mn", qmat[ok], y[..., 0])
    for i in np.flatnonzero(~ok):
        beta, rank = _min_norm(B[i].T, e1)
        alpha[sel[i]] = sw[i] * beta
        lam[sel[i]] = _min_norm(B[i].T @ B[i], e1)[0]
        deficient[sel[i]] = rank < Q
    return lam, alpha, deficient


def _min_norm(A, b):
    if not np.all(np.isfinite(A)):
        return np.full(A.shape[1], np.nan), 0
    sol, _, rank, _ = scipy.linalg.lstsq(A, b, lapack_driver="gelsy")
    return sol, rank


def solve_shape_functions(cfg: MlsConfig, nodes: NodeSet, x) -> LocalSystem:
    """Stencil, weights, Lagrange multipliers and shape functions at ``x``."""
    return MovingLeastSquares(cfg, nodes).local_system(x)


def evaluate(cfg: MlsConfig, nodes: NodeSet, x) -> float:
    """Approximant value ``sum_i alpha_i(x) f_i`` at a single point."""
    if nodes.values is None:
        raise InvalidArgumentError("node set carries no values")
    ls = solve_shape_functions(cfg, nodes, x)
    return float(np.sum(ls.shape * nodes.values[ls.stencil.indices]))


def evaluate_many(cfg: MlsConfig, nodes: NodeSet, xs, threads: int = 1) -> np.ndarray:
    """Approximant at every row of ``xs``; output order follows input order."""
    xs = as_points(xs, nodes.dim) if len(np.atleast_1d(xs)) else np.empty((0, nodes.dim))
    return MovingLeastSquares(cfg, nodes)(xs, threads=threads)
