import numpy as np
import pytest

from mlsvsdk import (
    Box,
    DomainBox,
    InvalidArgumentError,
    MlsConfig,
    MovingLeastSquares,
    NodeSet,
    PolynomialBasis,
    ScaleFunction,
    SingularSystemError,
    WeightSpec,
    eval_basis,
    eval_weight,
    evaluate,
    evaluate_many,
    halton_nodes,
    knn,
    psi,
    solve_shape_functions,
    uniform_nodes,
)
from mlsvsdk.experiments import PROBLEMS


def wls_oracle(points, values, x, n, basis_deg, spec, sf=None):
    """Weighted least-squares fit of a polynomial on the n nearest nodes, evaluated at x.

    Independent of the Backus-Gilbert route: monomials in ``(y - x) / radius``
    fitted with lstsq on sqrt(W)-scaled rows; the value at x is the constant
    coefficient.
    """
    st = knn(NodeSet(points), x, n)
    P = PolynomialBasis(points.shape[1], basis_deg)
    sub = points[st.indices]
    d2 = np.sum((sub - x) ** 2, axis=1)
    if sf is not None:
        d2 = d2 + (psi(sf, sub) - psi(sf, x)) ** 2
    w = eval_weight(spec, np.sqrt(d2)) + spec.regularization
    A = np.prod(((sub - x) / st.radius)[:, None, :] ** P.exponents, axis=-1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], values[st.indices] * sw, rcond=None)
    return float(coef[0])


def test_basis_values():
    b1 = PolynomialBasis(1, 1)
    np.testing.assert_allclose(eval_basis(b1, [0.0], 2.0, [1.0]), [1, 0.5])
    b2 = PolynomialBasis(2, 1)
    np.testing.assert_allclose(eval_basis(b2, [0.0, 0.0], 1.0, [1.0, 2.0]), [1, 1, 2])
    assert len(PolynomialBasis(2, 2)) == 6
    assert PolynomialBasis(2, 2).exponents.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_default_stencil_is_twice_basis():
    cfg = MlsConfig(PolynomialBasis(2, 2), WeightSpec("gaussian", 1))
    assert cfg.n == 12


def test_shepard_equivalence(rng):
    pts = rng.uniform(-1, 1, (40, 2))
    spec = WeightSpec("wendland_c2", 0.5)
    cfg = MlsConfig(PolynomialBasis(2, 0), spec, stencil_size=10)
    x = np.array([0.1, 0.2])
    ls = solve_shape_functions(cfg, NodeSet(pts), x)
    w = eval_weight(spec, ls.stencil.distances)
    np.testing.assert_allclose(ls.shape, w / w.sum(), rtol=1e-14)


@pytest.mark.parametrize("family", ["wendland_c2", "gaussian", "matern_c6", "levin_singular"])
@pytest.mark.parametrize("degree", [1, 2])
def test_matches_weighted_least_squares(family, degree, rng):
    pts = halton_nodes(200, 2).points
    vals = np.sin(3 * pts[:, 0]) * np.cos(2 * pts[:, 1])
    spec = WeightSpec(family, 1.0)
    cfg = MlsConfig(PolynomialBasis(2, degree), spec)
    nodes = NodeSet(pts, vals)
    for x in rng.uniform(-0.9, 0.9, (20, 2)):
        ref = wls_oracle(pts, vals, x, cfg.n, degree, spec)
        assert evaluate(cfg, nodes, x) == pytest.approx(ref, abs=1e-9)


def test_vsdk_matches_weighted_least_squares(rng):
    sf = PROBLEMS["F3"].scale_fn
    pts = uniform_nodes(DomainBox.cube(-1, 1, 2), [17, 17]).points
    vals = PROBLEMS["F3"](pts)
    spec = WeightSpec("matern_c6", 10.0)
    cfg = MlsConfig(PolynomialBasis(2, 1), spec, scale_fn=sf, stencil_size=20)
    nodes = NodeSet(pts, vals)
    for x in rng.uniform(-0.4, 0.4, (20, 2)):
        ref = wls_oracle(pts, vals, x, 20, 1, spec, sf)
        assert evaluate(cfg, nodes, x) == pytest.approx(ref, abs=1e-8)


def test_linear_reproduction_1d():
    nodes = uniform_nodes(DomainBox.cube(-1, 1, 1), [11])
    f = lambda p: 3 * p[:, 0] - 1  # noqa: E731
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("wendland_c2", 1.0))
    got = evaluate(cfg, nodes.with_values(f(nodes.points)), [0.3])
    assert got == pytest.approx(-0.1, abs=1e-12)


def test_duplicate_nodes_are_singular():
    pts = np.array([[0.25], [0.25], [0.9], [-0.9]])
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("gaussian", 1.0), stencil_size=2, grow_on_singular=False)
    with pytest.raises(SingularSystemError) as info:
        evaluate(cfg, NodeSet(pts, np.zeros(4), check_distinct=False), [0.25])
    assert sorted(info.value.indices.tolist()) == [0, 1]
    np.testing.assert_array_equal(info.value.point, [0.25])


def test_adjacent_floats_are_resolved_by_radius_scaling():
    x = 0.25
    pts = np.array([[x], [np.nextafter(x, 1.0)], [0.9], [-0.9]])
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("gaussian", 1.0), stencil_size=2, grow_on_singular=False)
    ls = solve_shape_functions(cfg, NodeSet(pts), [x])
    np.testing.assert_allclose(ls.shape, [1.0, 0.0], atol=1e-12)


def test_growth_rescues_singular_stencil():
    pts = np.array([[0.25], [0.25], [0.9], [-0.9]])
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("gaussian", 1.0), stencil_size=2)
    nodes = NodeSet(pts, 2 * pts[:, 0], check_distinct=False)
    assert evaluate(cfg, nodes, [0.3]) == pytest.approx(0.6, abs=1e-9)


def test_degree_reduction_fallback():
    # one lonely node in its own region: linear reproduction is impossible there
    sf = ScaleFunction(((Box((0.4,), (0.6,)), 5.0),), 0.0)
    pts = np.array([[-1.0], [-0.5], [0.0], [0.5], [1.0]])
    nodes = NodeSet(pts, [0.0, 0.0, 0.0, 7.0, 0.0])
    spec = WeightSpec("wendland_c2", 1.0)
    strict = MlsConfig(PolynomialBasis(1, 1), spec, scale_fn=sf, stencil_size=2)
    with pytest.raises(SingularSystemError):
        evaluate(strict, nodes, [0.55])
    loose = MlsConfig(PolynomialBasis(1, 1), spec, scale_fn=sf, stencil_size=2, reduce_degree_on_singular=True)
    assert solve_shape_functions(loose, nodes, [0.55]).degree == 0
    assert evaluate(loose, nodes, [0.55]) == 7.0


def test_locality():
    nodes = uniform_nodes(DomainBox.cube(-1, 1, 1), [41])
    vals = np.zeros(41)
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("wendland_c2", 1.0))
    x = np.array([[-0.6]])
    base = evaluate_many(cfg, nodes.with_values(vals), x)
    vals[-1] = 100.0  # far outside the stencil of x
    assert evaluate_many(cfg, nodes.with_values(vals), x)[0] == base[0]


def test_symmetric_data_gives_symmetric_result():
    nodes = uniform_nodes(DomainBox.cube(-1, 1, 1), [21])
    vals = nodes.points[:, 0] ** 2
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("gaussian", 3.0))
    xs = np.array([[0.33], [-0.33]])
    a, b = evaluate_many(cfg, nodes.with_values(vals), xs)
    assert a == pytest.approx(b, abs=1e-13)


def test_levin_is_interpolatory_in_the_limit():
    nodes = halton_nodes(60, 1)
    vals = np.cos(4 * nodes.points[:, 0])
    nodes = nodes.with_values(vals)
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("levin_singular", 1.0))
    xj = nodes.points[17]
    assert evaluate(cfg, nodes, xj) == vals[17]
    errs = [abs(evaluate(cfg, nodes, xj + r) - vals[17]) for r in (1e-3, 1e-4, 1e-5)]
    assert errs[0] > errs[1] > errs[2]


def test_evaluate_many_order_and_determinism(rng):
    nodes = halton_nodes(300, 2)
    nodes = nodes.with_values(np.exp(nodes.points[:, 0]))
    cfg = MlsConfig(PolynomialBasis(2, 1), WeightSpec("matern_c6", 4.0))
    xs = rng.uniform(-1, 1, (500, 2))
    full = evaluate_many(cfg, nodes, xs)
    again = evaluate_many(cfg, nodes, xs, threads=4)
    np.testing.assert_array_equal(full, again)
    singles = np.array([evaluate(cfg, nodes, x) for x in xs[:25]])
    np.testing.assert_allclose(full[:25], singles, rtol=0, atol=1e-13)
    perm = rng.permutation(500)
    np.testing.assert_array_equal(evaluate_many(cfg, nodes, xs[perm]), full[perm])


def test_mismatched_dimension():
    cfg = MlsConfig(PolynomialBasis(2, 1), WeightSpec("gaussian", 1.0))
    with pytest.raises(InvalidArgumentError):
        MovingLeastSquares(cfg, NodeSet([[0.0], [1.0]]))


def test_evaluate_requires_values():
    cfg = MlsConfig(PolynomialBasis(1, 1), WeightSpec("gaussian", 1.0))
    with pytest.raises(InvalidArgumentError):
        evaluate(cfg, NodeSet([[0.0], [1.0], [2.0]]), [0.5])
