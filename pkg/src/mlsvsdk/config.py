"""Flat YAML configs for experiments and standalone approximation.

Experiment keys::

    problem: F1 | F2 | F3            (required)
    node_kind: uniform | halton      (required)
    sizes: [N, ...]                  (required)
    epsilons: [eps, ...]             (required, same length as sizes)
    weight: wendland_c2 | gaussian | matern_c6 | levin_singular   (required)
    variant: vsdk | classic          (default vsdk)
    stencil_size, degree, noise_sigma, noise_model, seed, regularization,
    levin_variant, matern_scaled_polynomial, gaussian_scaled_distance,
    stencil_metric, reduce_degree_on_singular, scale_function

Approximation keys::

    weight, epsilon                  (required)
    variant, problem | scale_function, degree, stencil_size, regularization,
    levin_variant, matern_scaled_polynomial, gaussian_scaled_distance,
    stencil_metric, grow_on_singular, reduce_degree_on_singular, exact_hit

``scale_function`` follows :meth:`ScaleFunction.from_dict`: a list of
``regions`` (``{shape: box|ball|intervals, ..., beta}``) and ``fallback_beta``.
"""

from __future__ import annotations

from typing import Iterable, Optional

import yaml

from .errors import InvalidArgumentError
from .experiments import ExperimentSpec, get_problem
from .mls import MlsConfig, PolynomialBasis
from .scaling import ScaleFunction
from .weights import WeightSpec

__all__ = [
    "load_config",
    "apply_overrides",
    "experiment_from_config",
    "experiment_to_config",
    "mls_config_from_config",
]

_WEIGHT_KEYS = ("regularization", "levin_variant", "matern_scaled_polynomial", "gaussian_scaled_distance")

EXPERIMENT_KEYS = {
    "problem", "node_kind", "sizes", "epsilons", "weight", "variant", "stencil_size",
    "degree", "noise_sigma", "noise_model", "seed", "stencil_metric",
    "reduce_degree_on_singular", "scale_function", *_WEIGHT_KEYS,
}
EXPERIMENT_REQUIRED = ("problem", "node_kind", "sizes", "epsilons", "weight")

APPROX_KEYS = {
    "weight", "epsilon", "variant", "problem", "scale_function", "degree", "stencil_size",
    "stencil_metric", "grow_on_singular", "reduce_degree_on_singular", "exact_hit", *_WEIGHT_KEYS,
}


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise InvalidArgumentError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"{path}: expected a mapping at top level")
    return data


def apply_overrides(cfg: dict, overrides: Iterable[str]) -> dict:
    """Apply ``key=value`` strings; values are parsed as YAML scalars/lists."""
    cfg = dict(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise InvalidArgumentError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        cfg[key.strip()] = yaml.safe_load(raw)
    return cfg


def _check_keys(cfg, allowed, required=()):
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise InvalidArgumentError(f"unknown config key(s): {', '.join(unknown)}")
    missing = [k for k in required if k not in cfg]
    if missing:
        raise InvalidArgumentError(f"missing config key(s): {', '.join(missing)}")


def _scale_fn(cfg) -> Optional[ScaleFunction]:
    if cfg.get("scale_function") is None:
        return None
    try:
        return ScaleFunction.from_dict(cfg["scale_function"])
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"bad 'scale_function': {exc}") from None


def experiment_from_config(cfg: dict) -> ExperimentSpec:
    _check_keys(cfg, EXPERIMENT_KEYS, EXPERIMENT_REQUIRED)
    kwargs = {k: cfg[k] for k in cfg if k not in ("weight", "scale_function")}
    kwargs["family"] = cfg["weight"]
    kwargs["scale_fn"] = _scale_fn(cfg)
    for key in ("sizes", "epsilons"):
        if not isinstance(cfg[key], (list, tuple)):
            raise InvalidArgumentError(f"'{key}' must be a list")
    try:
        return ExperimentSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(str(exc)) from None


def experiment_to_config(spec: ExperimentSpec) -> dict:
    """Inverse of :func:`experiment_from_config`, omitting default values."""
    out = {
        "problem": spec.problem,
        "node_kind": spec.node_kind,
        "sizes": list(spec.sizes),
        "epsilons": [e if e != int(e) else int(e) for e in spec.epsilons],
        "weight": spec.family.value,
        "variant": spec.variant,
    }
    defaults = ExperimentSpec(spec.problem, "uniform", [1], [1.0], spec.family)
    for key in (
        "stencil_size", "degree", "noise_sigma", "noise_model", "seed", "stencil_metric",
        "reduce_degree_on_singular", *_WEIGHT_KEYS,
    ):
        value = getattr(spec, key)
        if value != getattr(defaults, key):
            out[key] = value
    if spec.scale_fn is not None:
        out["scale_function"] = spec.scale_fn.to_dict()
    return out


def mls_config_from_config(cfg: dict, dim: int) -> MlsConfig:
    _check_keys(cfg, APPROX_KEYS, ("weight", "epsilon"))
    variant = cfg.get("variant", "vsdk")
    if variant not in ("vsdk", "classic"):
        raise InvalidArgumentError(f"'variant' must be vsdk or classic, got {variant!r}")
    sf = None
    if variant == "vsdk":
        sf = _scale_fn(cfg)
        if sf is None and "problem" in cfg:
            sf = get_problem(cfg["problem"]).scale_fn
        if sf is None:
            raise InvalidArgumentError("variant 'vsdk' needs 'problem' or 'scale_function'")
    try:
        weight = WeightSpec(cfg["weight"], cfg["epsilon"], **{k: cfg[k] for k in _WEIGHT_KEYS if k in cfg})
        return MlsConfig(
            PolynomialBasis(dim, int(cfg.get("degree", 1))),
            weight,
            scale_fn=sf,
            stencil_size=cfg.get("stencil_size"),
            stencil_metric=cfg.get("stencil_metric", "euclidean"),
            grow_on_singular=bool(cfg.get("grow_on_singular", True)),
            reduce_degree_on_singular=bool(cfg.get("reduce_degree_on_singular", False)),
            exact_hit=bool(cfg.get("exact_hit", True)),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(str(exc)) from None
