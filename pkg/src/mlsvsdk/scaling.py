"""Piecewise-constant scale functions and the augmented (lifted) distance.

A :class:`ScaleFunction` assigns a constant value ``beta`` to each region of
a partition of the domain. Lifting a point ``x`` to ``(x, psi(x))`` makes
points that sit in different regions artificially far apart, which is what
lets the weights respect known jump discontinuities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError, InvalidResultError
from .geometry import as_point, as_points

__all__ = [
    "Box",
    "Ball",
    "Intervals",
    "ScaleFunction",
    "classify",
    "psi",
    "lift",
    "augmented_distance",
    "perturb",
]


@dataclass(frozen=True)
class Box:
    """Closed box ``lower <= x <= upper``."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise InvalidArgumentError("box bounds differ in length")
        if any(a > b for a, b in zip(lo, hi)):
            raise InvalidArgumentError("box requires lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= np.array(self.lower)) & (pts <= np.array(self.upper)), axis=1)

    def to_dict(self):
        return {"shape": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Ball:
    """Closed ball ``|x - center|^2 <= radius_sq``."""

    center: Tuple[float, ...]
    radius_sq: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius_sq", float(self.radius_sq))
        if not self.radius_sq > 0:
            raise InvalidArgumentError("ball radius_sq must be positive")

    @property
    def dim(self):
        return len(self.center)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.sum((pts - np.array(self.center)) ** 2, axis=1) <= self.radius_sq

    def to_dict(self):
        return {"shape": "ball", "center": list(self.center), "radius_sq": self.radius_sq}


_BRACKETS = {"[]": (True, True), "[)": (True, False), "(]": (False, True), "()": (False, False)}


@dataclass(frozen=True)
class Intervals:
    """Union of 1D intervals with per-endpoint closedness.

    Each span is ``(lo, hi, bracket)`` where ``bracket`` is one of
    ``"[]"``, ``"[)"``, ``"(]"``, ``"()"``.
    """

    spans: Tuple[Tuple[float, float, str], ...]

    def __post_init__(self):
        spans = []
        for span in self.spans:
            lo, hi = float(span[0]), float(span[1])
            bracket = span[2] if len(span) > 2 else "[]"
            if bracket not in _BRACKETS:
                raise InvalidArgumentError(f"unknown interval bracket {bracket!r}")
            if lo > hi:
                raise InvalidArgumentError("interval requires lo <= hi")
            spans.append((lo, hi, bracket))
        object.__setattr__(self, "spans", tuple(spans))

    dim = 1

    def contains(self, pts: np.ndarray) -> np.ndarray:
        x = pts[:, 0]
        hit = np.zeros(len(x), dtype=bool)
        for lo, hi, bracket in self.spans:
            lo_closed, hi_closed = _BRACKETS[bracket]
            above = x >= lo if lo_closed else x > lo
            below = x <= hi if hi_closed else x < hi
            hit |= above & below
        return hit

    def to_dict(self):
        return {"shape": "intervals", "spans": [list(s) for s in self.spans]}


Region = Union[Box, Ball, Intervals]


def region_from_dict(d: dict) -> Region:
    shape = d.get("shape")
    if shape == "box":
        return Box(d["lower"], d["upper"])
    if shape == "ball":
        return Ball(d["center"], d["radius_sq"])
    if shape == "intervals":
        return Intervals(tuple(tuple(s) for s in d["spans"]))
    raise InvalidArgumentError(f"unknown region shape {shape!r}")


@dataclass(frozen=True)
class ScaleFunction:
    """Piecewise-constant map: the first region containing ``x`` gives its beta,
    points outside every region get ``fallback_beta``."""

    regions: Tuple[Tuple[Region, float], ...] = ()
    fallback_beta: float = 1.0

    def __post_init__(self):
        regions = tuple((r, float(b)) for r, b in self.regions)
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "fallback_beta", float(self.fallback_beta))
        betas = [b for _, b in regions] + [self.fallback_beta]
        if len(set(betas)) != len(betas):
            raise InvalidArgumentError(f"scale values must be pairwise distinct, got {betas}")
        dims = {r.dim for r, _ in regions}
        if len(dims) > 1:
            raise InvalidArgumentError("regions differ in dimension")

    @property
    def betas(self) -> np.ndarray:
        return np.array([b for _, b in self.regions] + [self.fallback_beta])

    @classmethod
    def constant(cls, beta: float = 1.0) -> "ScaleFunction":
        return cls((), beta)

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleFunction":
        regions = []
        for entry in d.get("regions", []):
            regions.append((region_from_dict(entry), entry["beta"]))
        return cls(tuple(regions), d.get("fallback_beta", 1.0))

    def to_dict(self) -> dict:
        return {
            "regions": [dict(r.to_dict(), beta=b) for r, b in self.regions],
            "fallback_beta": self.fallback_beta,
        }


def classify(sf: ScaleFunction, x) -> Union[int, np.ndarray]:
    """Region index of each point (``len(sf.regions)`` means fallback).

    A single point gives an ``int``; an ``(m, d)`` array gives an index array.
    """
    single = np.ndim(x) <= 1
    pts = as_points(x, _dim_hint(sf, x))
    out = np.full(len(pts), len(sf.regions), dtype=np.intp)
    todo = np.ones(len(pts), dtype=bool)
    for j, (region, _) in enumerate(sf.regions):
        hit = todo & region.contains(pts)
        out[hit] = j
        todo &= ~hit
    return int(out[0]) if single else out


def _dim_hint(sf, x):
    for region, _ in sf.regions:
        return region.dim
    return None


def psi(sf: ScaleFunction, x):
    """Scale value at ``x`` (scalar for one point, array for many)."""
    return sf.betas[classify(sf, x)]


def lift(sf: Optional[ScaleFunction], pts) -> np.ndarray:
    """Append the scale value as an extra coordinate: ``(m, d) -> (m, d+1)``.

    Without a scale function the points are returned unchanged.
    """
    pts = as_points(pts)
    if sf is None:
        return pts
    return np.hstack([pts, psi(sf, pts)[:, None]])


def augmented_distance(sf: Optional[ScaleFunction], x, y) -> float:
    """Euclidean distance between the lifted points ``(x, psi(x))`` and ``(y, psi(y))``."""
    x = as_point(x)
    y = as_point(y)
    if x.size != y.size:
        raise InvalidArgumentError("points differ in dimension")
    sq = np.sum((x - y) ** 2)
    if sf is None:
        return float(np.sqrt(sq))
    return float(np.sqrt(sq + (psi(sf, x) - psi(sf, y)) ** 2))


def perturb(sf: ScaleFunction, sigma: float, seed: int) -> ScaleFunction:
    """Shift every region boundary parameter by ``sigma`` times a standard normal draw.

    Draws come from ``numpy.random.default_rng(seed)`` (PCG64, ziggurat
    normals) in region order: box lower faces then upper faces per axis,
    ball radius, interval endpoints span by span. Betas are kept.
    """
    if sigma < 0:
        raise InvalidArgumentError("sigma must be nonnegative")
    if sigma == 0:
        return sf
    rng = np.random.default_rng(seed)
    out = []
    for region, beta in sf.regions:
        if isinstance(region, Box):
            lo = np.array(region.lower) + sigma * rng.standard_normal(region.dim)
            hi = np.array(region.upper) + sigma * rng.standard_normal(region.dim)
            if np.any(lo > hi):
                raise InvalidResultError("perturbation inverted a box")
            new = Box(tuple(lo), tuple(hi))
        elif isinstance(region, Ball):
            r = np.sqrt(region.radius_sq) + sigma * rng.standard_normal()
            if r <= 0:
                raise InvalidResultError("perturbation made a ball radius nonpositive")
            new = Ball(region.center, r * r)
        else:
            spans = []
            for lo, hi, bracket in region.spans:
                lo2, hi2 = np.array([lo, hi]) + sigma * rng.standard_normal(2)
                if lo2 > hi2:
                    raise InvalidResultError("perturbation inverted an interval")
                spans.append((float(lo2), float(hi2), bracket))
            new = Intervals(tuple(spans))
        out.append((new, beta))
    return ScaleFunction(tuple(out), sf.fallback_beta)
