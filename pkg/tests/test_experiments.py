import json
import math
from fractions import Fraction

import numpy as np
import pytest

from mkdv_lab import criteria
from mkdv_lab.experiments import (
    DEFAULTS,
    EXPERIMENTS,
    SHAPES,
    ConfigError,
    ExperimentConfig,
    _clean,
    convergence_factor,
    dispersive_times,
    initial_data,
    kernel_identities,
    round_trip_error,
    stated_statphase,
    statphase_table,
)
from mkdv_lab.grid import Grid


def test_every_experiment_has_defaults_and_criteria():
    assert set(DEFAULTS) == set(EXPERIMENTS) == set(criteria.CHECKS)
    for exp in EXPERIMENTS:
        ExperimentConfig.for_experiment(exp)


@pytest.mark.parametrize("bad", [dict(n=17), dict(L=0.0), dict(scheme="euler"), dict(sign=0), dict(eps=-1.0), dict(jobs=0),
                                 dict(n_snapshots=2), dict(absorb_width=900.0), dict(xi_values="a,b")])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.for_experiment("painleve", **bad)


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        ExperimentConfig.for_experiment("nope")


def test_config_round_trips_through_json():
    cfg = ExperimentConfig.for_experiment("decay", dt=0.005)
    again = ExperimentConfig(**json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


@pytest.mark.parametrize("shape", sorted(SHAPES))
def test_initial_data_scales_with_eps(shape):
    g = Grid(512, 80.0)
    a = initial_data(ExperimentConfig.for_experiment("painleve", eps=0.2, shape=shape, seed=3), g).values
    b = initial_data(ExperimentConfig.for_experiment("painleve", eps=0.1, shape=shape, seed=3), g).values
    np.testing.assert_allclose(a, 2 * b, rtol=1e-14, atol=1e-300)
    assert np.max(np.abs(a)) == pytest.approx(0.2, rel=0.05)


def test_random_shape_depends_on_seed_only():
    g = Grid(512, 80.0)
    mk = lambda s: initial_data(ExperimentConfig.for_experiment("painleve", shape="random", seed=s), g).values
    assert np.array_equal(mk(5), mk(5))
    assert not np.array_equal(mk(5), mk(6))


def test_dispersive_times():
    ts = dispersive_times(400.0)
    assert ts == sorted(set(ts)) and ts[0] == 1.0 and ts[-1] == 400.0
    for t in (10.0, 20.0, 50.0, 100.0, 200.0, 400.0):
        assert t in ts
    assert dispersive_times(5.0) == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_clean_makes_json_safe():
    obj = {1: np.float64(2.5), "c": 1 + 2j, "a": np.arange(2), "f": Fraction(1, 3), "inf": math.inf, "b": np.bool_(True)}
    out = _clean(obj)
    assert json.loads(json.dumps(out)) == {"1": 2.5, "c": [1.0, 2.0], "a": [0, 1], "f": "1/3", "inf": "inf", "b": True}


def test_stated_values_for_positive_and_negative_xi():
    s = stated_statphase(Fraction(3))
    assert [r["det"] for r in s] == [-324] * 3 + [108]
    assert s[3]["phi"] == 24
    assert [r["signature"] for r in stated_statphase(Fraction(-1))] == [0, 0, 0, 2]


def test_statphase_table_values_exact():
    rows = statphase_table([Fraction(1), Fraction(-2)])
    assert all(r["phi_ok"] and r["det_ok"] for r in rows)
    # the three outer points are saddles; the inner point is definite
    assert [r["signature"] for r in rows] == [0, 0, 0, -2, 0, 0, 0, 2]


def test_kernel_identities_small():
    rows = kernel_identities(cs=(1.0,), grid=Grid(2048, 120.0))
    r = rows[0]
    assert max(r["L_xi1"], r["L_xi2_minus_xi1"]) < 1e-8
    assert r["miracle"] < 1e-10 and r["gram"] < 1e-8
    assert r["alpha1"] == pytest.approx(1.0) and abs(r["alpha2"]) < 1e-12


def test_bedrock_helpers_on_small_grid():
    g = Grid(1024, 200.0)
    assert round_trip_error(g) < 1e-13
    assert 12 <= convergence_factor(0.005, T=0.5, grid=g) <= 20


# --- criteria on hand-built reports ---------------------------------------------------------


def _rep(exp, **fields):
    return dict(schema=f"mkdv-lab/{exp}/1", experiment=exp, **fields)


def test_schema_errors():
    with pytest.raises(criteria.SchemaError):
        criteria.check_report([], "default")
    with pytest.raises(criteria.SchemaError):
        criteria.check_report(_rep("decay"), "strict")
    with pytest.raises(criteria.SchemaError):
        criteria.check_report(dict(schema="mkdv-lab/decay/1", experiment="scattering"))
    with pytest.raises(criteria.SchemaError):
        criteria.check_report(_rep("mystery"))
    with pytest.raises(criteria.SchemaError, match="sup_exponent"):
        criteria.check_report(_rep("decay", scaled_slope=0.0))


@pytest.mark.parametrize("e,ok", [(-1 / 3, True), (-0.29, True), (-0.27, False), (-0.39, False)])
def test_decay_exponent_window(e, ok):
    res = criteria.check_report(_rep("decay", sup_exponent=e, scaled_slope=0.0))
    assert res[0].passed is ok and res[1].passed


def test_scattering_checks():
    reg = {"10": {"max_normalized_error": 0.01}, "100": {"max_normalized_error": 0.005}}
    r = _rep("scattering", modulus_variation=0.01, phase_ratio=0.16, nominal_coefficient=1 / 6, region={"derived": reg})
    assert all(c.passed for c in criteria.check_report(r))
    r["phase_ratio"] = -0.5
    assert [c.passed for c in criteria.check_report(r)] == [True, False, True]
    reg["100"]["max_normalized_error"] = 0.02
    assert not criteria.check_report(r)[2].passed


def test_selfsimilar_checks():
    r = _rep("selfsimilar", collapse=[3.0, 2.0, 1.0], painleve={"ode_residual": 1e-10},
             lambda_selection={"selected": 1 / 3, "ratio": 1e5, "unique": True},
             comparison={"normalized_error": [0.01, 0.008, 0.003, 0.002]})
    assert all(c.passed for c in criteria.check_report(r))
    r["comparison"]["normalized_error"] = [0.001, 0.001, 0.002, 0.004]
    r["collapse"] = [1.0, 2.0]
    assert [c.passed for c in criteria.check_report(r)] == [False, True, True, False]


def test_stability_checks():
    r = _rep("soliton_stability", constraint_residuals=[1e-12, -2e-12], c=[1.0], fitted_exponents={"v1_H1w": [-1.5, 0.9]},
             virial_ledger=[], virial_nonincreasing=True, c_drift_late=1e-5)
    assert all(c.passed for c in criteria.check_report(r))
    r["fitted_exponents"]["v1_H1w"][0] = -0.5
    r["c_drift_late"] = None
    assert [c.passed for c in criteria.check_report(r)] == [True, False, False, True]


def test_result_line_format():
    line = criteria.CriterionResult("C4", "x", 0.123456, "< 1", True).line()
    assert line == "[PASS] C4 x: measured 0.1235 (target < 1)"
    assert criteria.CriterionResult("C5", "y", [1e-3, 2.0], "t", False).line().startswith("[FAIL] C5 y: measured [0.001, 2]")
