from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_lab.grid import Grid, PhysicalField, transform
from mkdv_lab.oscint import (
    DegeneratePhaseError,
    GaussianProfile,
    PhaseSpec,
    ProfileInterpolant,
    QuadratureBudgetError,
    dtf_asymptotic,
    dtf_gaussian_reference,
    dtf_quadrature,
    fit_airy_constant,
    fresnel_gaussian_exact,
    leading_constants,
    lemma_leading,
    oscillatory_quad_2d,
    signature_2x2,
    stationary_phase_2d,
    stationary_points,
)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=50).filter(lambda f: f != 0)


def test_stationary_points_for_xi_one():
    sp = stationary_points(1)
    assert [(p.eta, p.sigma) for p in sp.points] == [(1, 1), (1, -1), (-1, 1), (Fraction(1, 3), Fraction(1, 3))]
    assert [p.phi for p in sp.points] == [0, 0, 0, Fraction(8, 9)]
    assert [p.det_hess for p in sp.points] == [-36, -36, -36, 12]
    assert [p.signature for p in sp.points] == [0, 0, 0, -2]
    assert not sp.degenerate


def test_xi_zero_is_degenerate():
    sp = stationary_points(0)
    assert sp.degenerate
    assert all(p.det_hess == 0 for p in sp.points)


@given(fractions)
def test_stationary_point_values_are_exact(xi):
    sp = stationary_points(xi)
    for p in sp.points[:3]:
        assert p.phi == 0 and p.det_hess == -36 * xi**2 and p.signature == 0
    p4 = sp.points[3]
    assert p4.phi == Fraction(8, 9) * xi**3
    assert p4.det_hess == 12 * xi**2
    # Hess(phi) at (xi/3, xi/3) is -4 xi [[1, 1/2], [1/2, 1]]: definite with sign -sign(xi)
    assert p4.signature == (-2 if xi > 0 else 2)
    assert p4.positive_index == (0 if xi > 0 else 2)


@given(fractions, fractions, fractions)
def test_phase_identities(xi, eta, sigma):
    ps = PhaseSpec(xi)
    assert ps.value(eta, sigma) == ps.value_factored(eta, sigma)
    a, b, c = ps.hess(eta, sigma)
    assert a * c - b * b == ps.det_hess(eta, sigma)
    # phi is symmetric in (eta, sigma)
    assert ps.value(eta, sigma) == ps.value(sigma, eta)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_gradient_matches_finite_differences(xi, eta, sigma):
    ps = PhaseSpec(xi)
    h = 1e-6
    ge, gs = ps.grad(eta, sigma)
    assert ge == pytest.approx((ps.value(eta + h, sigma) - ps.value(eta - h, sigma)) / (2 * h), abs=1e-5)
    assert gs == pytest.approx((ps.value(eta, sigma + h) - ps.value(eta, sigma - h)) / (2 * h), abs=1e-5)


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
def test_signature_matches_eigenvalues(a, b, c):
    sig, npos = signature_2x2(Fraction(a), Fraction(b), Fraction(c))
    ev = np.linalg.eigvalsh(np.array([[a, b], [b, c]], float))
    pos = int(np.sum(ev > 1e-9))
    neg = int(np.sum(ev < -1e-9))
    assert (sig, npos) == (pos - neg, pos)


def test_quadrature_of_separable_exponential():
    lam = 30.0
    exact = ((np.exp(1j * lam * 2) - np.exp(-1j * lam * 1)) / (1j * lam)) ** 2

    def fun(x, y):
        return np.exp(1j * lam * (x + y)) + 0 * x * y

    q = oscillatory_quad_2d(fun, ((-1.0, 2.0), (-1.0, 2.0)), lambda *a: (lam, lam), blocks=4)
    assert abs(q.value - exact) < 1e-12
    assert q.error < 1e-9


def test_quadrature_budget_error():
    with pytest.raises(QuadratureBudgetError):
        oscillatory_quad_2d(lambda x, y: np.exp(1j * 1e4 * x * y), ((-1.0, 1.0), (-1.0, 1.0)), lambda *a: (1.0, 1.0),
                            blocks=2, max_levels=1, tol=1e-15, rtol=1e-15)


def test_zero_profile_and_zero_frequency():
    z = GaussianProfile(0.0, 1.0)
    assert dtf_gaussian_reference(z, 3.0, 1.0).value == 0
    assert dtf_quadrature(GaussianProfile(1.0, 1.0), 3.0, 0.0).value == 0


def test_reference_at_t_zero_is_triple_convolution():
    # iint f(xi - eta - sigma) f(eta) f(sigma) = A^3 2 pi s^2 / sqrt(3) e^{-xi^2 / (6 s^2)}
    A, s, xi = 0.7, 0.8, 1.3
    ref = dtf_gaussian_reference(GaussianProfile(A, s), 0.0, xi).value
    exact = -1j * xi / (2 * np.pi) * A**3 * 2 * np.pi * s**2 / np.sqrt(3) * np.exp(-(xi**2) / (6 * s**2))
    assert abs(ref - exact) < 1e-13


@pytest.mark.parametrize("t", [0.0, 2.0])
def test_tensor_quadrature_agrees_with_reference(t):
    prof = GaussianProfile(1.0, 0.6)
    q = dtf_quadrature(prof, t, 0.8)
    ref = dtf_gaussian_reference(prof, t, 0.8)
    assert abs(q.value - ref.value) < 1e-10 * max(1.0, abs(ref.value))


def test_profile_interpolant_from_field():
    g = Grid(1024, 200.0)
    F = transform(PhysicalField(g, np.exp(-g.x**2 / 2)))
    p = ProfileInterpolant.from_field(F)
    k = np.linspace(-3, 3, 31)
    assert np.max(np.abs(p(k) - np.exp(-k**2 / 2))) < 1e-6
    assert p(np.array([1e3]))[0] == 0
    assert p.sup == pytest.approx(1.0)


def test_leading_constants():
    r, c = leading_constants(1.0)
    assert r == pytest.approx(-0.5j)
    assert c == pytest.approx(-1j / (2 * np.sqrt(3)))
    # odd-in-sign data: flipping the nonlinearity flips both
    r2, c2 = leading_constants(1.0, -1.0)
    assert r2 == pytest.approx(0.5j) and c2 == pytest.approx(1j / (2 * np.sqrt(3)))


def test_asymptotic_error_decreases_with_t():
    prof = GaussianProfile(1.0, 1.0)
    rel = []
    for t in (20.0, 80.0, 320.0):
        ref = dtf_gaussian_reference(prof, t, 1.0).value
        a = dtf_asymptotic(prof, t, 1.0)
        rel.append(abs(ref - a.total) / abs(a.resonant))
    assert rel[0] > rel[1] > rel[2]


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_airy_constant_fit_recovers_synthetic_constant(cr, ci):
    prof = GaussianProfile(1.0, 1.0)
    xi = 1.0
    times = np.linspace(20, 80, 25)
    c_true = complex(cr, ci)
    f3 = complex(prof(np.array([xi / 3]))[0]) ** 3
    vals = [dtf_asymptotic(prof, t, xi).resonant + 1j * c_true / t * np.exp(-1j * t * 8 / 9 * xi**3) * f3 for t in times]
    fit = fit_airy_constant(prof, xi, times, vals)
    if abs(c_true) > 1e-3:
        assert fit.exp_sign == -1
        assert abs(fit.c_fit - c_true) < 1e-10


def test_lemma_leading_for_fresnel_gaussian():
    for lam in (100.0, 1000.0):
        lead = lemma_leading(1.0, 0.0, 2, 1.0, lam)
        assert abs(fresnel_gaussian_exact(lam) - lead) < 7 / lam**2


def test_stationary_phase_fresnel_by_quadrature():
    F = lambda e, s: np.exp(-(e**2 + s**2) / 2)
    rep = stationary_phase_2d(F, lambda e, s: (e**2 + s**2) / 2, lambda e, s: (e, s), lambda e, s: (1.0, 0.0, 1.0),
                              [4.0, 8.0], ((-9.0, 9.0), (-9.0, 9.0)))
    assert rep.case == "critical" and rep.signature == 2
    for I, lam in zip(rep.integrals, rep.lams):
        assert abs(I - fresnel_gaussian_exact(lam)) < 1e-11


def test_stationary_phase_without_critical_point():
    F = lambda e, s: np.exp(-(e**2 + s**2))
    rep = stationary_phase_2d(F, lambda e, s: e, lambda e, s: (np.ones_like(e), np.zeros_like(s)), lambda e, s: (0.0, 0.0, 0.0),
                              [5.0, 10.0], ((-7.0, 7.0), (-7.0, 7.0)))
    assert rep.case == "non-stationary"
    # iint e^{i lam e} e^{-e^2 - s^2} = pi e^{-lam^2/4}
    for I, lam in zip(rep.integrals, rep.lams):
        assert abs(I - np.pi * np.exp(-lam**2 / 4)) < 1e-12


def test_degenerate_critical_point_rejected():
    with pytest.raises(DegeneratePhaseError):
        stationary_phase_2d(lambda e, s: np.exp(-(e**2 + s**2)), lambda e, s: e**2 / 2 + s**4, lambda e, s: (e, 4 * s**3),
                            lambda e, s: (1.0, 0.0, 12 * s**2), [10.0], ((-5.0, 5.0), (-5.0, 5.0)))
