"""Test problems with jumps, error metrics, refinement sweeps and rate fits."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, SingularSystemError
from .geometry import DomainBox, NodeSet, fill_distance, grid_points, halton_nodes, uniform_nodes
from .mls import MlsConfig, MovingLeastSquares, PolynomialBasis
from .scaling import Ball, Box, Intervals, ScaleFunction, perturb
from .weights import WeightFamily, WeightSpec

__all__ = [
    "TestProblem",
    "PROBLEMS",
    "get_problem",
    "truth_value",
    "rmse",
    "mae",
    "ExperimentSpec",
    "LevelResult",
    "ExperimentReport",
    "run_experiment",
    "fit_rate",
    "loglog_slope",
    "REFERENCE_SWEEPS",
    "reference_spec",
]


# --- test problems -----------------------------------------------------------


def _f1(p):
    x = p[:, 0]
    return np.where(x < -0.5, np.exp(-x), np.where(x < 0.5, x**3, 1.0))


def _f2(p):
    x, y = p[:, 0], p[:, 1]
    r2 = x * x + y * y
    return np.where(r2 <= 0.6, np.exp(-r2), x + y)


def _f3(p):
    x, y = p[:, 0], p[:, 1]
    out = np.zeros(len(p))
    piece = [
        ((np.abs(x) <= 0.5) & (np.abs(y) <= 0.5), 2.0 * (1.0 - np.exp(-((y + 0.5) ** 2)))),
        ((x >= -0.8) & (x <= -0.65) & (np.abs(y) <= 0.8), 4.0 * (x + 0.8)),
        ((x >= 0.65) & (x <= 0.8) & (np.abs(y) <= 0.2), np.full(len(p), 0.5)),
    ]
    done = np.zeros(len(p), dtype=bool)
    for mask, val in piece:
        take = mask & ~done
        out[take] = val[take]
        done |= take
    return out


@dataclass(frozen=True)
class TestProblem:
    """A piecewise-smooth target, its domain and a scale function aligned with its jumps."""

    __test__ = False  # not a pytest class

    id: str
    dim: int
    domain: DomainBox
    truth: Callable[[np.ndarray], np.ndarray]
    scale_fn: ScaleFunction
    eval_step: float

    def eval_grid(self) -> np.ndarray:
        counts = [int(round((hi - lo) / self.eval_step)) + 1 for lo, hi in zip(self.domain.lower, self.domain.upper)]
        return grid_points(self.domain, counts)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, self.dim)
        if not np.all(self.domain.contains(pts)):
            raise InvalidArgumentError(f"{self.id}: point outside the domain {self.domain}")
        return self.truth(pts)


PROBLEMS: Dict[str, TestProblem] = {
    "F1": TestProblem(
        "F1",
        1,
        DomainBox.cube(-1.0, 1.0, 1),
        _f1,
        ScaleFunction(((Intervals(((-0.5, 0.5, "[)"),)), 2.0),), fallback_beta=1.0),
        5.0e-4,
    ),
    "F2": TestProblem(
        "F2",
        2,
        DomainBox.cube(-1.0, 1.0, 2),
        _f2,
        ScaleFunction(((Ball((0.0, 0.0), 0.6), 1.0),), fallback_beta=2.0),
        1.0e-2,
    ),
    "F3": TestProblem(
        "F3",
        2,
        DomainBox.cube(-1.0, 1.0, 2),
        _f3,
        ScaleFunction(
            (
                (Box((-0.5, -0.5), (0.5, 0.5)), 1.0),
                (Box((-0.8, -0.8), (-0.65, 0.8)), 2.0),
                (Box((0.65, -0.2), (0.8, 0.2)), 3.0),
            ),
            fallback_beta=0.0,
        ),
        1.0e-2,
    ),
}


def get_problem(pid) -> TestProblem:
    if isinstance(pid, TestProblem):
        return pid
    key = str(pid).upper()
    if key not in PROBLEMS:
        raise InvalidArgumentError(f"unknown problem {pid!r}; choose from {sorted(PROBLEMS)}")
    return PROBLEMS[key]


def truth_value(pid, x):
    """Exact value of a test function; scalar for one point."""
    prob = get_problem(pid)
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 0 or (x.ndim == 1 and x.size == prob.dim)
    out = prob(x)
    return float(out[0]) if single else out


# --- metrics -----------------------------------------------------------------


def _residuals(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.size == 0 or pred.size != truth.size:
        raise InvalidArgumentError("pred and truth must be nonempty and of equal length")
    return truth - pred


def rmse(pred, truth) -> float:
    r = _residuals(pred, truth)
    return float(np.sqrt(np.mean(r * r)))


def mae(pred, truth) -> float:
    """Maximum absolute error."""
    return float(np.max(np.abs(_residuals(pred, truth))))


# --- experiments -------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """One refinement sweep: a node family, a shape-parameter schedule, a weight.

    ``noise_model="edges"`` perturbs the partition boundaries once by
    ``noise_sigma`` (the scale function is then wrong everywhere it is used);
    ``"sites"`` instead jitters the data sites and keeps the exact partition.
    """

    problem: str
    node_kind: str
    sizes: Sequence[int]
    epsilons: Sequence[float]
    family: WeightFamily
    stencil_size: Optional[int] = None
    variant: str = "vsdk"
    noise_sigma: float = 0.0
    seed: int = 0
    degree: int = 1
    regularization: Optional[float] = None
    levin_variant: str = "squared_exponent"
    matern_scaled_polynomial: bool = True
    gaussian_scaled_distance: bool = True
    stencil_metric: str = "euclidean"
    scale_fn: Optional[ScaleFunction] = None
    reduce_degree_on_singular: bool = True
    noise_model: str = "edges"

    def __post_init__(self):
        object.__setattr__(self, "problem", get_problem(self.problem).id)
        object.__setattr__(self, "family", WeightFamily.parse(self.family))
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if len(self.sizes) != len(self.epsilons):
            raise InvalidArgumentError(
                f"'sizes' has {len(self.sizes)} entries but 'epsilons' has {len(self.epsilons)}"
            )
        if not self.sizes:
            raise InvalidArgumentError("'sizes' is empty")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise InvalidArgumentError("'sizes' must be strictly increasing")
        if self.node_kind not in ("uniform", "halton"):
            raise InvalidArgumentError(f"'node_kind' must be uniform or halton, got {self.node_kind!r}")
        if self.variant not in ("vsdk", "classic"):
            raise InvalidArgumentError(f"'variant' must be vsdk or classic, got {self.variant!r}")
        if self.noise_sigma < 0:
            raise InvalidArgumentError("'noise_sigma' must be nonnegative")
        if self.noise_model not in ("edges", "sites"):
            raise InvalidArgumentError(f"'noise_model' must be edges or sites, got {self.noise_model!r}")

    @property
    def test_problem(self) -> TestProblem:
        return get_problem(self.problem)

    def weight(self, epsilon: float) -> WeightSpec:
        return WeightSpec(
            self.family,
            epsilon,
            self.regularization,
            self.levin_variant,
            self.matern_scaled_polynomial,
            self.gaussian_scaled_distance,
        )

    def active_scale_fn(self) -> Optional[ScaleFunction]:
        """Scale function used by the run (perturbed once), or ``None`` for classic MLS."""
        if self.variant == "classic":
            return None
        sf = self.scale_fn if self.scale_fn is not None else self.test_problem.scale_fn
        if self.noise_model == "sites":
            return sf
        return perturb(sf, self.noise_sigma, self.seed)

    def nodes(self, size: int) -> NodeSet:
        prob = self.test_problem
        if self.node_kind == "halton":
            nodes = halton_nodes(size, prob.dim, prob.domain)
        else:
            k = round(size ** (1.0 / prob.dim))
            if k**prob.dim != size:
                raise InvalidArgumentError(f"uniform node count {size} is not a perfect {prob.dim}-th power")
            nodes = uniform_nodes(prob.domain, [k] * prob.dim)
        if self.noise_model == "sites" and self.noise_sigma > 0:
            rng = np.random.default_rng([self.seed, size])
            pts = nodes.points + self.noise_sigma * rng.standard_normal(nodes.points.shape)
            lo, hi = prob.domain.lower, prob.domain.upper
            # reflect back into the domain
            pts = np.where(pts < lo, 2 * lo - pts, pts)
            pts = np.where(pts > hi, 2 * hi - pts, pts)
            nodes = NodeSet(pts)
        return nodes


@dataclass
class LevelResult:
    level: int
    N: int
    epsilon: float
    h: float
    rmse: float
    mae: float
    wall_time_s: float
    failed: bool = False
    note: str = ""


@dataclass
class ExperimentReport:
    rows: List[LevelResult]
    problem: str = ""
    node_kind: str = ""
    family: str = ""
    variant: str = ""
    dim: int = 1
    rate_h: float = math.nan
    rate_n: float = math.nan
    notes: List[str] = field(default_factory=list)

    @property
    def rmse(self) -> np.ndarray:
        return np.array([r.rmse for r in self.rows])

    @property
    def failed_levels(self) -> List[int]:
        return [r.level for r in self.rows if r.failed]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        lines = ["level,N,epsilon,h,rmse,mae,wall_time_s"]
        for r in self.rows:
            vals = [r.epsilon, r.h, r.rmse, r.mae, r.wall_time_s]
            lines.append(f"{r.level},{r.N}," + ",".join(_fmt(v) for v in vals))
        lines.append(f"rate,{_fmt(self.rate_h)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path, dim: Optional[int] = None) -> "ExperimentReport":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        header = ["level", "N", "epsilon", "h", "rmse", "mae", "wall_time_s"]
        if not rows or [c.strip() for c in rows[0]] != header:
            raise InvalidArgumentError(f"{path}: header must be {','.join(header)}")
        levels = []
        rate = math.nan
        for r in rows[1:]:
            if r[0] == "rate":
                if len(r) != 2:
                    raise InvalidArgumentError(f"{path}: malformed rate row")
                rate = float(r[1])
                continue
            if len(r) != len(header):
                raise InvalidArgumentError(f"{path}: row {r!r} has {len(r)} fields")
            try:
                lv = LevelResult(int(r[0]), int(r[1]), *(float(v) for v in r[2:]))
            except ValueError as exc:
                raise InvalidArgumentError(f"{path}: {exc}") from None
            lv.failed = not np.isfinite(lv.rmse)
            levels.append(lv)
        report = cls(levels, rate_h=rate)
        report.dim = dim if dim is not None else _infer_dim(report)
        return report


def _fmt(v: float) -> str:
    return repr(float(v)) if not np.isfinite(v) else f"{v:.16e}"


def _infer_dim(report) -> int:
    # h ~ N^(-1/d) on quasi-uniform families
    ok = [r for r in report.rows if r.h > 0 and r.N > 0 and np.isfinite(r.h)]
    if len(ok) < 2 or len({r.N for r in ok}) < 2:
        return 1
    slope = loglog_slope([r.N for r in ok], [r.h for r in ok])
    return max(1, int(round(-1.0 / slope))) if slope < 0 else 1


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=np.float64)), np.log(np.asarray(y, dtype=np.float64))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(coef[0])


def fit_rate(report: ExperimentReport) -> float:
    """Convergence rate: slope of log RMSE against log h.

    Also stores ``report.rate_n``, the slope against ``N ** (-1/d)``.
    Failed or zero-error levels are left out of the fit.
    """
    used = []
    for r in report.rows:
        if r.failed or not np.isfinite(r.rmse):
            continue
        if r.rmse <= 0 or not r.h > 0:
            report.notes.append(f"level {r.level} excluded from rate fit (rmse={r.rmse}, h={r.h})")
            continue
        used.append(r)
    if len(used) < 2:
        raise InvalidArgumentError("a rate fit needs at least 2 usable levels")
    report.rate_h = loglog_slope([r.h for r in used], [r.rmse for r in used])
    report.rate_n = loglog_slope([r.N ** (-1.0 / report.dim) for r in used], [r.rmse for r in used])
    return report.rate_h


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentReport:
    """Run every refinement level of ``spec`` and fit the convergence rate.

    A level whose local systems cannot be solved is recorded as failed
    (NaN metrics) and left out of the fit instead of aborting the sweep.
    """
    prob = spec.test_problem
    grid = prob.eval_grid()
    exact = prob(grid)
    sf = spec.active_scale_fn()
    basis = PolynomialBasis(prob.dim, spec.degree)
    report = ExperimentReport(
        [],
        problem=prob.id,
        node_kind=spec.node_kind,
        family=spec.family.value,
        variant=spec.variant,
        dim=prob.dim,
    )
    for level, (size, eps) in enumerate(zip(spec.sizes, spec.epsilons)):
        t0 = time.perf_counter()
        nodes = spec.nodes(size)
        nodes = nodes.with_values(prob(nodes.points))
        cfg = MlsConfig(
            basis,
            spec.weight(eps),
            scale_fn=sf,
            stencil_size=spec.stencil_size,
            stencil_metric=spec.stencil_metric,
            reduce_degree_on_singular=spec.reduce_degree_on_singular,
        )
        h = fill_distance(nodes, grid)
        try:
            approx = MovingLeastSquares(cfg, nodes)(grid, threads=threads)
        except SingularSystemError as exc:
            report.rows.append(
                LevelResult(level, size, eps, h, math.nan, math.nan, time.perf_counter() - t0, True, str(exc))
            )
            report.notes.append(f"level {level} (N={size}) failed: {exc}")
            continue
        report.rows.append(
            LevelResult(level, size, eps, h, rmse(approx, exact), mae(approx, exact), time.perf_counter() - t0)
        )
    try:
        fit_rate(report)
    except InvalidArgumentError as exc:
        report.notes.append(f"no rate: {exc}")
    return report


# --- reference sweeps ---------------------------------------------------------

SIZES_1D = (9, 17, 33, 65, 257, 513)
SIZES_2D = (25, 81, 289, 1089, 4225, 16641)
DOUBLING = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)

# name -> keyword arguments of ExperimentSpec (variant excluded)
REFERENCE_SWEEPS: Dict[str, dict] = {}


def _register(tag, problem, family, kind, sizes, eps, **extra):
    name = f"{tag}_{kind}_{family}"
    REFERENCE_SWEEPS[name] = dict(
        problem=problem, node_kind=kind, sizes=sizes, epsilons=eps, family=family, **extra
    )


for _kind in ("uniform", "halton"):
    _register("f1", "F1", "wendland_c2", _kind, SIZES_1D, DOUBLING)
_register("f1", "F1", "gaussian", "uniform", SIZES_1D, (5, 20, 40, 80, 160, 320))
_register("f1", "F1", "matern_c6", "uniform", SIZES_1D, (5, 10, 20, 40, 80, 160))
_register("f1", "F1", "gaussian", "halton", SIZES_1D, (10, 20, 30, 50, 100, 200))
_register("f1", "F1", "matern_c6", "halton", SIZES_1D, (5, 10, 20, 50, 200, 400))
for _kind in ("uniform", "halton"):
    _register("f2", "F2", "wendland_c2", _kind, SIZES_2D, DOUBLING)
    _register("f3", "F3", "levin_singular", _kind, SIZES_2D, (1, 2, 4, 8, 16, 32), stencil_size=20)
    _register("f3", "F3", "matern_c6", _kind, SIZES_2D, (10, 20, 40, 80, 160, 320), stencil_size=20)
_register("f3", "F3", "gaussian", "uniform", SIZES_2D, (2, 4, 8, 16, 32, 64), stencil_size=20)
_register("f3", "F3", "gaussian", "halton", SIZES_2D, (1, 2, 4, 8, 16, 32), stencil_size=20)
for _kind in ("uniform", "halton"):
    _register("f2_noisy", "F2", "gaussian", _kind, SIZES_2D, DOUBLING, stencil_size=25, noise_sigma=0.01)
    _register("f2_noisy", "F2", "matern_c6", _kind, SIZES_2D, (1, 2, 4, 8, 16, 32), stencil_size=25, noise_sigma=0.01)


def reference_spec(name: str, variant: str = "vsdk", **overrides) -> ExperimentSpec:
    """ExperimentSpec for one of the bundled reference sweeps."""
    if name not in REFERENCE_SWEEPS:
        raise InvalidArgumentError(f"unknown experiment {name!r}")
    kwargs = dict(REFERENCE_SWEEPS[name], variant=variant)
    kwargs.update(overrides)
    return ExperimentSpec(**kwargs)
