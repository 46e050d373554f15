import math

import numpy as np
import pytest

from mlsvsdk import (
    ExperimentReport,
    ExperimentSpec,
    InvalidArgumentError,
    ScaleFunction,
    fit_rate,
    mae,
    reference_spec,
    rmse,
    run_experiment,
    truth_value,
)
from mlsvsdk.config import experiment_from_config, experiment_to_config
from mlsvsdk.experiments import REFERENCE_SWEEPS, PROBLEMS, LevelResult


def test_truth_values():
    assert truth_value("F1", -0.75) == pytest.approx(np.exp(0.75), rel=1e-15)
    assert truth_value("F1", 0.25) == 0.25**3
    assert truth_value("F1", 0.5) == 1.0
    assert truth_value("F1", -0.5) == -0.125
    assert truth_value("F2", [0.0, 0.0]) == 1.0
    assert truth_value("F2", [0.9, -0.1]) == pytest.approx(0.8)
    assert truth_value("F3", [0.0, -0.5]) == 0.0
    assert truth_value("F3", [0.0, 0.5]) == pytest.approx(2 * (1 - np.exp(-1)))
    assert truth_value("F3", [-0.7, 0.0]) == pytest.approx(0.4)
    assert truth_value("F3", [0.7, 0.1]) == 0.5
    assert truth_value("F3", [0.9, 0.9]) == 0.0


def test_truth_outside_domain():
    with pytest.raises(InvalidArgumentError):
        truth_value("F2", [1.5, 0.0])


def test_eval_grids():
    assert len(PROBLEMS["F1"].eval_grid()) == 4001
    g = PROBLEMS["F2"].eval_grid()
    assert g.shape == (201 * 201, 2)
    assert g.min() == -1.0 and g.max() == 1.0


def test_metrics():
    assert rmse([0, 0], [3, -4]) == pytest.approx(math.sqrt(12.5), rel=1e-15)
    assert mae([0, 0], [3, -4]) == 4.0
    assert rmse([1.0], [1.0]) == 0.0
    with pytest.raises(InvalidArgumentError):
        rmse([], [])


def _report(h, err, N=None, dim=1):
    N = N if N is not None else [int(round(2 / x)) + 1 for x in h]
    rows = [LevelResult(i, n, 1.0, a, b, b, 0.0) for i, (n, a, b) in enumerate(zip(N, h, err))]
    return ExperimentReport(rows, dim=dim)


def test_fit_rate_exact_power():
    h = np.array([0.5, 0.25, 0.125, 0.0625])
    assert fit_rate(_report(h, 3 * h**2)) == pytest.approx(2.0, abs=1e-12)
    assert fit_rate(_report(h, np.full(4, 0.1))) == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_scale_invariant():
    h = np.array([0.3, 0.2, 0.1, 0.07])
    err = np.array([1e-1, 4e-2, 1.3e-2, 5e-3])
    assert fit_rate(_report(h, err)) == pytest.approx(fit_rate(_report(7 * h, err)), abs=1e-12)


def test_fit_rate_against_n():
    N = np.array([25, 81, 289, 1089])
    h = N ** -0.5
    rep = _report(h, h**2, N=N, dim=2)
    fit_rate(rep)
    assert rep.rate_n == pytest.approx(2.0, abs=1e-12)


def test_fit_rate_skips_failed_and_needs_two_levels():
    h = np.array([0.5, 0.25, 0.125])
    rep = _report(h, h**2)
    rep.rows[1].rmse = math.nan
    rep.rows[1].failed = True
    assert fit_rate(rep) == pytest.approx(2.0)
    with pytest.raises(InvalidArgumentError):
        fit_rate(_report([0.5], [0.1]))


def test_spec_length_mismatch_names_both():
    with pytest.raises(InvalidArgumentError, match="sizes.*epsilons"):
        ExperimentSpec("F1", "uniform", [9, 17], [1.0], "wendland_c2")


def test_spec_rejects_bad_uniform_count():
    spec = ExperimentSpec("F2", "uniform", [30], [1.0], "gaussian")
    with pytest.raises(InvalidArgumentError):
        spec.nodes(30)


def test_report_csv_roundtrip(tmp_path):
    rep = run_experiment(reference_spec("f1_uniform_wendland_c2"))
    path = tmp_path / "r.csv"
    rep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "level,N,epsilon,h,rmse,mae,wall_time_s"
    assert lines[-1].startswith("rate,")
    back = ExperimentReport.from_csv(path)
    assert back.dim == 1
    np.testing.assert_array_equal(back.rmse, rep.rmse)
    assert back.rate_h == rep.rate_h
    assert fit_rate(back) == pytest.approx(rep.rate_h, abs=1e-15)


def test_constant_scale_function_equals_classic():
    classic = run_experiment(ExperimentSpec("F2", "uniform", [81, 289], [1.0, 2.0], "wendland_c2", variant="classic"))
    flat = run_experiment(
        ExperimentSpec("F2", "uniform", [81, 289], [1.0, 2.0], "wendland_c2", scale_fn=ScaleFunction.constant(3.0))
    )
    np.testing.assert_array_equal(classic.rmse, flat.rmse)


def test_vsdk_beats_classic_on_jump():
    vs = run_experiment(reference_spec("f1_uniform_wendland_c2"))
    cl = run_experiment(reference_spec("f1_uniform_wendland_c2", "classic"))
    assert np.all(vs.rmse[2:] < cl.rmse[2:])
    assert vs.rate_h > 2.0 and cl.rate_h < 1.0


def test_failed_level_is_recorded():
    spec = ExperimentSpec(
        "F1", "uniform", [9, 17], [1.0, 1.0], "wendland_c2", degree=2,
        stencil_size=2, reduce_degree_on_singular=False,
    )
    rep = run_experiment(spec)
    assert rep.failed_levels == [0, 1]
    assert all(math.isnan(r.rmse) for r in rep.rows)
    assert any("failed" in n for n in rep.notes)


def test_noisy_edges_are_seeded():
    a = reference_spec("f2_noisy_uniform_gaussian", seed=1).active_scale_fn()
    b = reference_spec("f2_noisy_uniform_gaussian", seed=1).active_scale_fn()
    c = reference_spec("f2_noisy_uniform_gaussian", seed=2).active_scale_fn()
    assert a == b and a != c
    assert reference_spec("f2_noisy_uniform_gaussian", "classic").active_scale_fn() is None


def test_jittered_sites_stay_in_domain():
    spec = reference_spec("f2_noisy_halton_gaussian", noise_model="sites", seed=3)
    pts = spec.nodes(1089).points
    assert np.all(np.abs(pts) <= 1.0)


@pytest.mark.parametrize("name", sorted(REFERENCE_SWEEPS))
def test_reference_specs_roundtrip_through_config(name):
    spec = reference_spec(name)
    assert experiment_from_config(experiment_to_config(spec)) == spec
