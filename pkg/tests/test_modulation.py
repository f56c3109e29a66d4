import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_lab.grid import Grid, PhysicalField, WeightSpec
from mkdv_lab.modulation import (
    ModulationError,
    check_virial_weight,
    constraint_pairings,
    fit_modulation,
    is_nonincreasing,
    split,
    stability_experiment,
    virial_weight,
)
from mkdv_lab.soliton import q_profile


@pytest.fixture(scope="module")
def g():
    return Grid(2048, 160.0)


def test_fit_recovers_exact_soliton(g):
    u = PhysicalField(g, q_profile(1.3, g.x - 2.0))
    fit = fit_modulation(u, (1.0, 0.0))
    assert fit.c == pytest.approx(1.3, abs=1e-10)
    assert fit.h == pytest.approx(2.0, abs=1e-10)
    assert np.max(np.abs(constraint_pairings(u, fit.c, fit.h))) < 1e-10


def test_fit_orthogonalises_perturbation(g):
    u = PhysicalField(g, q_profile(1.0, g.x) + 0.05 * np.exp(-(g.x - 1) ** 2))
    fit = fit_modulation(u, (1.0, 0.0))
    assert np.max(np.abs(constraint_pairings(u, fit.c, fit.h))) <= 1e-10 * u.l2()


def test_fit_fails_without_soliton(g):
    with pytest.raises((ModulationError, np.linalg.LinAlgError, ValueError)):
        fit_modulation(PhysicalField(g, 1e-3 * np.exp(-(g.x - 60) ** 2)), (1.0, 0.0), max_iters=5)


def test_split_of_exact_soliton_is_zero(g):
    u = PhysicalField(g, q_profile(1.0, g.x - 1.5))
    s = split(u, g.zeros(), 1.0, 1.5)
    assert np.max(np.abs(s.v2.values)) < 1e-12


def test_virial_weight_condition():
    w = virial_weight(2, 0.1)
    assert check_virial_weight(w)
    assert np.all(np.diff(w.chi(np.linspace(-100, 100, 2001))) >= 0)
    with pytest.raises(ValueError):
        virial_weight(3, 0.1, A_k=1e-3)


def test_is_nonincreasing():
    assert is_nonincreasing([3, 2, 2, 1])
    assert is_nonincreasing([1.0, 1.0 + 1e-8])
    assert not is_nonincreasing([1.0, 1.1])


def test_zero_perturbation_run_is_exactly_zero():
    g = Grid(256, 100.0)
    r = stability_experiment(1.0, g.zeros(), 1.0, 1.6, n_snapshots=5)
    assert r.c == [1.0] * 5
    assert all(v == 0.0 for vals in r.norms.values() for v in vals)


def test_short_stability_run_keeps_constraints():
    g = Grid(1024, 200.0)
    v0 = PhysicalField(g, 0.02 * np.exp(-((g.x - 10) ** 2) / 4))
    r = stability_experiment(1.0, v0, 4.0, 1.6, dt=4e-3, n_snapshots=5)
    assert max(abs(v) for v in r.constraint_residuals) < 1e-9
    assert abs(r.c[-1] - 1.0) < 0.05


@pytest.mark.parametrize("kw", [dict(c0=0.0), dict(m=0.4)])
def test_stability_argument_checks(kw):
    g = Grid(256, 100.0)
    args = dict(c0=1.0, v0=g.zeros(), T=1.0, m=1.6) | kw
    with pytest.raises(ValueError):
        stability_experiment(**args)


@given(st.floats(0.3, 3.0), st.floats(-5.0, 5.0))
def test_fit_recovers_parameters_property(c, h):
    g = Grid(2048, 160.0)
    u = PhysicalField(g, q_profile(c, g.x - h))
    fit = fit_modulation(u, (c * 1.1, h + 0.3))
    assert abs(fit.c - c) < 1e-8 and abs(fit.h - h) < 1e-8


@given(st.integers(0, 3), st.floats(0.02, 0.5))
def test_virial_weight_monotone_property(k, delta):
    w = virial_weight(k, delta)
    chi = w.chi(np.linspace(-200, 200, 4001))
    assert np.all(np.diff(chi) >= -1e-12 * chi.max())
    assert isinstance(w, WeightSpec)
