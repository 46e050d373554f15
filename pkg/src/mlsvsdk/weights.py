"""Radial weight families with a shape parameter.

All families are evaluated on a distance ``r`` that is either the plain
Euclidean distance or the lifted distance of :mod:`mlsvsdk.scaling`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError
from .scaling import ScaleFunction, augmented_distance

__all__ = ["WeightFamily", "WeightSpec", "eval_weight", "vsdk_weight"]

GAUSSIAN_REGULARIZATION = 1e-8


class WeightFamily(str, enum.Enum):
    WENDLAND_C2 = "wendland_c2"
    GAUSSIAN = "gaussian"
    MATERN_C6 = "matern_c6"
    LEVIN_SINGULAR = "levin_singular"

    @classmethod
    def parse(cls, name) -> "WeightFamily":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {
            "wendland": cls.WENDLAND_C2,
            "matern": cls.MATERN_C6,
            "levin": cls.LEVIN_SINGULAR,
            "singular": cls.LEVIN_SINGULAR,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidArgumentError(f"unknown weight family {name!r}") from None


LEVIN_VARIANTS = ("squared_exponent", "doubled_exponent")


@dataclass(frozen=True)
class WeightSpec:
    """Weight family, shape parameter and diagonal regularization.

    ``regularization=None`` picks the family default: ``1e-8`` for the
    Gaussian, zero otherwise.

    By default the shape parameter multiplies the distance everywhere, i.e.
    ``exp(-(eps r)^2)`` and ``exp(-eps r) (15 + 15 eps r + 6 (eps r)^2 + (eps r)^3)``.
    ``gaussian_scaled_distance=False`` gives ``exp(-eps r^2)`` and
    ``matern_scaled_polynomial=False`` keeps the polynomial in plain ``r``.
    """

    family: WeightFamily
    epsilon: float
    regularization: Optional[float] = None
    levin_variant: str = "squared_exponent"
    matern_scaled_polynomial: bool = True
    gaussian_scaled_distance: bool = True

    def __post_init__(self):
        object.__setattr__(self, "family", WeightFamily.parse(self.family))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidArgumentError("epsilon must be positive")
        reg = self.regularization
        if reg is None:
            reg = GAUSSIAN_REGULARIZATION if self.family is WeightFamily.GAUSSIAN else 0.0
        if not reg >= 0:
            raise InvalidArgumentError("regularization must be nonnegative")
        object.__setattr__(self, "regularization", float(reg))
        if self.levin_variant not in LEVIN_VARIANTS:
            raise InvalidArgumentError(f"levin_variant must be one of {LEVIN_VARIANTS}")

    @property
    def singular(self) -> bool:
        return self.family is WeightFamily.LEVIN_SINGULAR


def eval_weight(spec: WeightSpec, r):
    """Weight at distance ``r`` (scalar or array).

    The singular family returns ``inf`` at ``r == 0``.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise InvalidArgumentError("distances must be nonnegative")
    eps = spec.epsilon
    fam = spec.family
    with np.errstate(over="ignore", divide="ignore"):
        if fam is WeightFamily.WENDLAND_C2:
            t = eps * r
            w = np.maximum(1.0 - t, 0.0) ** 4 * (4.0 * t + 1.0)
        elif fam is WeightFamily.GAUSSIAN:
            w = np.exp(-(eps * r) ** 2) if spec.gaussian_scaled_distance else np.exp(-eps * r * r)
        elif fam is WeightFamily.MATERN_C6:
            s = eps * r if spec.matern_scaled_polynomial else r
            w = np.exp(-eps * r) * (15.0 + 15.0 * s + 6.0 * s * s + s * s * s)
        else:
            arg = (eps * r) ** 2 if spec.levin_variant == "squared_exponent" else 2.0 * eps * r
            w = 1.0 / np.expm1(arg)
    return w[()] if w.ndim == 0 else w


def vsdk_weight(spec: WeightSpec, sf: Optional[ScaleFunction], x, y):
    """Weight on the lifted distance; with ``sf=None`` this is the plain weight."""
    return eval_weight(spec, augmented_distance(sf, x, y))
