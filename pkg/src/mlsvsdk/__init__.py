"""Moving least squares with variably scaled discontinuous weights.

Scattered-data approximation of functions with known jump discontinuities:
the MLS weights are evaluated on points lifted by a piecewise-constant scale
function, so data sites across a jump barely influence each other.
"""

from .errors import InvalidArgumentError, InvalidResultError, SingularSystemError
from .geometry import (
    DomainBox,
    KnnIndex,
    NodeSet,
    Stencil,
    fill_distance,
    halton_nodes,
    knn,
    read_nodes_csv,
    separation_distance,
    uniform_nodes,
    write_nodes_csv,
)
from .scaling import Ball, Box, Intervals, ScaleFunction, augmented_distance, classify, lift, perturb, psi
from .weights import WeightFamily, WeightSpec, eval_weight, vsdk_weight
from .mls import (
    LocalSystem,
    MlsConfig,
    MovingLeastSquares,
    PolynomialBasis,
    eval_basis,
    evaluate,
    evaluate_many,
    solve_shape_functions,
)
from .experiments import (
    REFERENCE_SWEEPS,
    PROBLEMS,
    ExperimentReport,
    ExperimentSpec,
    fit_rate,
    mae,
    reference_spec,
    rmse,
    run_experiment,
    truth_value,
)

__version__ = "0.1.0"
