import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_lab.evolve import EvolveConfig, run
from mkdv_lab.grid import Grid, PhysicalField, SpectralField, transform
from mkdv_lab.scattering import (
    CONVENTIONS,
    AsymptoticProfile,
    EmptyRegionError,
    ProfileTrack,
    accumulate_B,
    check_modified_scattering,
    dispersive_diagnostics,
    estimate_f_infinity,
    extract_profile,
    modified_scattering_prediction,
    modulus_variation,
    phase_slope,
    scaled_trend,
    write_profile_csv,
)


@pytest.fixture(scope="module")
def linear_run():
    # Airy flow only: the profile is exactly conserved
    g = Grid(4096, 1600.0, x_min=-1400.0)
    u0 = PhysicalField(g, np.exp(-g.x**2 / 2))
    cfg = EvolveConfig(dt=0.05, t_end=60.0, snapshot_times=[1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0], a_of_t=lambda t: 0.0, dealias=False)
    return u0, run(u0, cfg)


def _synthetic_track(mod, kappa, times, g):
    # f(t, xi) = mod(xi) exp(i kappa sign(xi) mod^2 log t)
    m = mod(g.k)
    return ProfileTrack(list(times), [SpectralField(g, m * np.exp(1j * kappa * np.sign(g.k) * m**2 * np.log(t))) for t in times])


def test_profile_is_frozen_under_linear_flow(linear_run):
    u0, states = linear_run
    f0 = transform(u0).coeffs
    for s in states:
        f = extract_profile(s, s.t).coeffs
        assert np.max(np.abs(f - f0)) < 1e-10


def test_linear_track_has_no_phase_drift(linear_run):
    track = ProfileTrack.from_states(linear_run[1])
    assert modulus_variation(track, 0.5, (1.0, 60.0)) < 1e-9
    slope, fsq, xi, _ = phase_slope(track, 0.5)
    assert abs(slope) < 1e-9
    assert fsq == pytest.approx(np.exp(-(xi**2)), rel=1e-8)


def test_linear_asymptotics_fix_the_amplitude_constant(linear_run):
    # at large t the Airy solution is sqrt(2/(3 t xi0)) Re(e^{-2 i t xi0^3 + i pi/4} f(xi0));
    # the data are scaled by 1e-3 so that the log-phase term is negligible
    u0, states = linear_run
    s = states[-1]
    g = s.u.grid
    eps = 1e-3
    s = PhysicalField(g, eps * s.u.values)
    prof = AsymptoticProfile(xi=g.k, f_inf=eps * np.exp(-g.k**2 / 2) + 0j, w_inf=None, mask=np.abs(g.k) > 0.2, t_late=60.0, gamma=0.0)
    x = np.linspace(-600.0, -100.0, 200)
    idx = np.searchsorted(g.x, x)
    x = g.x[idx]
    t = states[-1].t
    pred, xi0 = modified_scattering_prediction(x, t, prof, "derived")
    err = np.max(np.abs(s.values[idx] - pred)) / np.max(np.abs(pred))
    assert err < 0.02
    nominal, _ = modified_scattering_prediction(x, t, prof, "nominal")
    assert np.max(np.abs(s.values[idx] - nominal)) / np.max(np.abs(pred)) > 0.2


def test_zero_profile_gives_zero_phase():
    g = Grid(64, 10.0)
    tr = ProfileTrack([1.0, 2.0, 4.0], [SpectralField(g, np.zeros(64))] * 3)
    assert not np.any(np.array(accumulate_B(tr).B))


def test_phase_accumulation_of_constant_modulus():
    g = Grid(64, 10.0)
    times = [1.0, 2.0, 4.0, 8.0]
    tr = ProfileTrack(times, [SpectralField(g, 0.3 * np.ones(64))] * 4)
    B = np.array(accumulate_B(tr, 0.25).B)
    expect = 0.25 * np.sign(g.k)[None, :] * 0.09 * np.log(np.array(times))[:, None]
    assert np.max(np.abs(B - expect)) < 1e-15


def test_estimate_recovers_modified_profile():
    g = Grid(128, 20.0)
    times = [1.0, 2.0, 4.0, 8.0, 16.0]
    tr = _synthetic_track(lambda k: np.exp(-k**2), -0.5, times, g)
    ph = accumulate_B(tr, -0.5)
    prof = estimate_f_infinity(tr, ph, gamma=0.0)
    # w = e^{-iB} f is constant up to the trapezoid error of B
    assert all(row[2] < 1e-12 for row in prof.cauchy)
    with pytest.raises(ValueError):
        estimate_f_infinity(tr, ph, t_late=4.0)


def test_region_check_rejects_unknown_convention_and_empty_region():
    g = Grid(256, 100.0)
    prof = AsymptoticProfile(xi=g.k, f_inf=np.zeros(256, complex), w_inf=None, mask=np.zeros(256, bool), t_late=10.0, gamma=0.0)
    with pytest.raises(ValueError):
        check_modified_scattering(g.zeros(), 10.0, prof, "other")
    with pytest.raises(EmptyRegionError):
        check_modified_scattering(g.zeros(), 10.0, prof)


def test_zero_solution_region_errors_vanish():
    g = Grid(256, 100.0)
    prof = AsymptoticProfile(xi=g.k, f_inf=np.zeros(256, complex), w_inf=None, mask=np.abs(g.k) > 0.1, t_late=10.0, gamma=0.0)
    tab = check_modified_scattering(g.zeros(), 10.0, prof)
    assert tab.max_error == 0.0


def test_diagnostics_of_zero_field():
    g = Grid(128, 40.0)
    row = dispersive_diagnostics(g.zeros(), 2.0)
    assert all(v == 0.0 for k, v in row.items() if k != "t")
    with pytest.raises(ValueError):
        dispersive_diagnostics(g.zeros(), 0.5)
    with pytest.raises(ValueError):
        extract_profile(g.zeros(), 0.5)


def test_scaled_trend_of_power_law():
    rows = [{"t": t, "v": 3 * t**-0.25} for t in (1.0, 2.0, 5.0, 10.0)]
    slope, r2 = scaled_trend(rows, "v")
    assert slope == pytest.approx(-0.25) and r2 == pytest.approx(1.0)


def test_conventions_table():
    assert CONVENTIONS["derived"][1] ** 2 == pytest.approx(2 / 3)
    assert CONVENTIONS["nominal"][0] == pytest.approx(1 / 6)


def test_profile_csv(tmp_path):
    g = Grid(64, 10.0)
    tr = _synthetic_track(lambda k: np.exp(-k**2), 0.1, [1.0, 2.0], g)
    write_profile_csv(tmp_path / "p.csv", tr, accumulate_B(tr), xi_range=(0.0, 1.0))
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,xi,abs_f,arg_f,B"
    assert len(lines) == 1 + 2 * np.count_nonzero((g.k >= 0) & (g.k <= 1))


def test_track_validation():
    g = Grid(64, 10.0)
    with pytest.raises(ValueError):
        ProfileTrack([2.0, 1.0], [g] * 2)
    with pytest.raises(ValueError):
        ProfileTrack([1.0], [])


@given(st.floats(-1.0, 1.0), st.floats(0.05, 1.0), st.floats(0.2, 2.0))
def test_phase_slope_recovers_synthetic_coefficient(kappa, amp, xi_star):
    g = Grid(128, 40.0)
    tr = _synthetic_track(lambda k: amp * np.exp(-k**2 / 8), kappa, np.geomspace(1, 100, 20), g)
    slope, fsq, xi, _ = phase_slope(tr, xi_star)
    assert slope == pytest.approx(kappa * fsq, abs=1e-10)


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_B_is_linear_in_the_coefficient(a, b):
    g = Grid(64, 10.0)
    tr = _synthetic_track(lambda k: np.exp(-k**2), 0.3, [1.0, 3.0, 9.0], g)
    Ba = np.array(accumulate_B(tr, a).B)
    Bb = np.array(accumulate_B(tr, b).B)
    Bab = np.array(accumulate_B(tr, a + b).B)
    assert np.allclose(Ba + Bb, Bab, atol=1e-14)
    # odd in xi
    assert np.allclose(Bab[:, 1:32], -Bab[:, 33:][:, ::-1], atol=1e-14)
