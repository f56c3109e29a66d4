"""Oscillatory integrals behind the cubic Duhamel term.

For the profile f(t) = e^{-t d_x^3} u the nonlinear term reads

    d_t f^(xi) = -(i s xi / 2 pi) iint e^{-i t phi(xi, eta, sigma)}
                 f^(xi - eta - sigma) f^(eta) f^(sigma) d eta d sigma,

    phi = xi^3 - (xi - eta - sigma)^3 - eta^3 - sigma^3
        = 3 (eta + sigma)(xi - eta)(xi - sigma),

with s the nonlinearity sign (times the coefficient a).  This module
evaluates the integral by brute-force tensor quadrature, classifies the
critical points of phi exactly, and implements the two-dimensional
stationary-phase leading term used to predict its large-t behaviour.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .fitting import loglog_fit
from .grid import SpectralField


class DegeneratePhaseError(ValueError):
    pass


class QuadratureBudgetError(RuntimeError):
    def __init__(self, msg, partial, error):
        super().__init__(msg)
        self.partial = partial
        self.error = error


# --------------------------------------------------------------------------
# phase geometry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseSpec:
    """phi(xi, ., .) as a function of (eta, sigma) at fixed output frequency."""

    xi: float

    def value(self, eta, sigma):
        x = self.xi
        return x**3 - (x - eta - sigma) ** 3 - eta**3 - sigma**3

    def value_factored(self, eta, sigma):
        x = self.xi
        return 3 * (eta + sigma) * (x - eta) * (x - sigma)

    def grad(self, eta, sigma):
        x = self.xi
        return 3 * (x - sigma) * (x - 2 * eta - sigma), 3 * (x - eta) * (x - eta - 2 * sigma)

    def hess(self, eta, sigma):
        """(phi_ee, phi_es, phi_ss)."""
        x = self.xi
        return -6 * (x - sigma), -6 * (x - eta - sigma), -6 * (x - eta)

    def det_hess(self, eta, sigma):
        x = self.xi
        return -36 * (eta**2 + sigma**2 + eta * sigma - x * eta - x * sigma)


def signature_2x2(a, b, c) -> tuple:
    """Exact (signature, number of positive eigenvalues) of [[a, b], [b, c]].

    Works on Fractions: only the signs of det and trace are used.
    """
    det = a * c - b * b
    tr = a + c
    if det < 0:
        return 0, 1
    if det > 0:
        return (2, 2) if tr > 0 else (-2, 0)
    if tr > 0:
        return 1, 1
    if tr < 0:
        return -1, 0
    return 0, 0


@dataclass(frozen=True)
class StationaryPoint:
    eta: Fraction
    sigma: Fraction
    phi: Fraction
    det_hess: Fraction
    signature: int
    positive_index: int
    hessian: tuple

    def as_dict(self) -> dict:
        return {
            "eta": str(self.eta),
            "sigma": str(self.sigma),
            "phi": str(self.phi),
            "det_hess": str(self.det_hess),
            "signature": self.signature,
            "positive_index": self.positive_index,
        }


@dataclass(frozen=True)
class StationaryPoints:
    xi: Fraction
    points: tuple
    degenerate: bool = False


def stationary_points(xi) -> StationaryPoints:
    """The four critical points of phi in (eta, sigma), in exact arithmetic.

    Order: (xi, xi), (xi, -xi), (-xi, xi), (xi/3, xi/3).  ``signature`` is
    the usual (#positive - #negative) eigenvalue count of Hess phi.  At
    xi = 0 all four coincide with a vanishing Hessian and the result is
    flagged degenerate.
    """
    x = Fraction(xi)
    ps = PhaseSpec(x)
    cand = [(x, x), (x, -x), (-x, x), (x / 3, x / 3)]
    pts = []
    for e, s in cand:
        ge, gs = ps.grad(e, s)
        if ge != 0 or gs != 0:
            raise AssertionError(f"({e}, {s}) is not critical")
        a, b, c = ps.hess(e, s)
        sig, npos = signature_2x2(a, b, c)
        pts.append(StationaryPoint(e, s, ps.value(e, s), ps.det_hess(e, s), sig, npos, (a, b, c)))
    return StationaryPoints(x, tuple(pts), degenerate=(x == 0))


# --------------------------------------------------------------------------
# tensor Gauss-Legendre quadrature with phase-aware refinement
# --------------------------------------------------------------------------


@dataclass
class QuadResult:
    value: complex
    error: float
    nodes: int
    levels: int


def _panel_nodes(a, b, n_cells, order):
    x, w = leggauss(order)
    edges = np.linspace(a, b, n_cells + 1)
    h = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return (mid[:, None] + h[:, None] * x[None, :]).ravel(), (h[:, None] * w[None, :]).ravel()


def _tensor_block(fun, xe, ye, nx, ny, order, chunk=2_000_000):
    X, wx = _panel_nodes(xe[0], xe[1], nx, order)
    Y, wy = _panel_nodes(ye[0], ye[1], ny, order)
    rows = max(1, chunk // len(Y))
    parts = []
    for i in range(0, len(X), rows):
        vals = fun(X[i : i + rows, None], Y[None, :])
        parts.append(np.sum(vals * wy[None, :], axis=1) @ wx[i : i + rows])
    return complex(np.sum(parts)), len(X) * len(Y)


def oscillatory_quad_2d(
    fun: Callable,
    box: tuple,
    rate: Callable,
    blocks: int = 16,
    order: int = 12,
    tol: float = 1e-12,
    rtol: float = 1e-9,
    skip: float = 1e-15,
    max_levels: int = 4,
    max_nodes: float = 4e8,
    magnitude: Optional[Callable] = None,
) -> QuadResult:
    """iint_box fun(x, y) dx dy with per-block node counts set by the phase.

    ``rate(x0, x1, y0, y1)`` bounds the phase derivative in each direction on
    a block; each block then gets enough Gauss panels to resolve it.  The
    whole tensor rule is refined by a factor 1.5 per level until two levels
    agree to ``tol`` (absolute) or ``rtol`` (relative); the last difference
    is the error estimate.
    Blocks where ``magnitude`` (default |fun| on a 7x7 sample) falls below
    ``skip`` times the largest sample are dropped.
    """
    (x0, x1), (y0, y1) = box
    xb = np.linspace(x0, x1, blocks + 1)
    yb = np.linspace(y0, y1, blocks + 1)
    mag = magnitude or (lambda X, Y: np.abs(fun(X, Y)))
    probes = {}
    for i in range(blocks):
        for j in range(blocks):
            sx = np.linspace(xb[i], xb[i + 1], 7)
            sy = np.linspace(yb[j], yb[j + 1], 7)
            probes[i, j] = float(np.max(mag(sx[:, None], sy[None, :])))
    top = max(probes.values()) if probes else 0.0
    if top == 0.0:
        return QuadResult(0.0j, 0.0, 0, 0)
    active = [(i, j) for (i, j), m in probes.items() if m >= skip * top]
    base = {}
    for i, j in active:
        rx, ry = rate(xb[i], xb[i + 1], yb[j], yb[j + 1])
        nx = 1 + int(np.ceil(0.7 * rx * (xb[i + 1] - xb[i]) / order))
        ny = 1 + int(np.ceil(0.7 * ry * (yb[j + 1] - yb[j]) / order))
        base[i, j] = (nx, ny)
    prev, used = None, 0
    for level in range(max_levels + 1):
        f = 1.5**level
        total, count = 0.0j, 0
        for i, j in active:
            nx, ny = base[i, j]
            nx, ny = int(np.ceil(nx * f)), int(np.ceil(ny * f))
            v, c = _tensor_block(fun, (xb[i], xb[i + 1]), (yb[j], yb[j + 1]), nx, ny, order)
            total += v
            count += c
        used += count
        if prev is not None:
            err = abs(total - prev)
            if err <= max(tol, rtol * abs(total)):
                return QuadResult(total, err, count, level + 1)
        if used > max_nodes:
            break
        prev = total
    err = abs(total - prev) if prev is not None else np.inf
    raise QuadratureBudgetError(f"quadrature not converged: estimate {total}, error {err:.3e}", total, err)


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------


class ProfileInterpolant:
    """Cubic-spline interpolant of a spectral profile, zero outside the band."""

    def __init__(self, k, values):
        order = np.argsort(k)
        k = np.asarray(k, dtype=float)[order]
        v = np.asarray(values, dtype=complex)[order]
        self.k_min, self.k_max = float(k[0]), float(k[-1])
        self._re = CubicSpline(k, v.real)
        self._im = CubicSpline(k, v.imag)
        self.sup = float(np.max(np.abs(v)))
        mask = np.abs(v) >= 1e-12 * self.sup
        self.support = float(np.max(np.abs(k[mask]))) if np.any(mask) else 0.0

    @classmethod
    def from_field(cls, F: SpectralField):
        return cls(F.grid.k, F.coeffs)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        inside = (xi >= self.k_min) & (xi <= self.k_max)
        out = np.where(inside, self._re(xi) + 1j * self._im(xi), 0.0)
        return out


@dataclass(frozen=True)
class GaussianProfile:
    """f^(xi) = A exp(-xi^2 / (2 s^2)), the transform of a real Gaussian."""

    amplitude: float = 1.0
    width: float = 1.0

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.amplitude * np.exp(-(xi**2) / (2 * self.width**2)) + 0j

    @property
    def support(self) -> float:
        return self.width * math.sqrt(2 * math.log(1e12))


def _as_profile(fhat):
    if isinstance(fhat, SpectralField):
        return ProfileInterpolant.from_field(fhat)
    return fhat


def _support(fhat, probe: float = 60.0) -> float:
    s = getattr(fhat, "support", None)
    if s is not None:
        return float(s)
    k = np.linspace(-probe, probe, 24001)
    v = np.abs(fhat(k))
    m = v >= 1e-12 * np.max(v)
    return float(np.max(np.abs(k[m]))) if np.any(m) else 0.0


# --------------------------------------------------------------------------
# the Duhamel derivative
# --------------------------------------------------------------------------


def dtf_quadrature(
    fhat, t: float, xi: float, sign: float = 1.0, tol: float = 1e-12, blocks: int = 16, order: int = 12, skip: float = 1e-13
) -> QuadResult:
    """d_t f^(t, xi) from the double integral by tensor quadrature.

    ``fhat`` is a SpectralField or a vectorised callable.  ``sign`` is the
    nonlinearity coefficient (s * a).
    """
    fh = _as_profile(fhat)
    R = _support(fh)
    if R == 0.0 or xi == 0.0 or sign == 0:
        return QuadResult(0.0j, 0.0, 0, 0)
    ps = PhaseSpec(xi)
    pref = -1j * sign * xi / (2 * np.pi)

    def amp(E, S):
        return fh(xi - E - S) * fh(E) * fh(S)

    def fun(E, S):
        return pref * np.exp(-1j * t * ps.value(E, S)) * amp(E, S)

    def rate(e0, e1, s0, s1):
        E, S = np.meshgrid(np.linspace(e0, e1, 5), np.linspace(s0, s1, 5))
        ge, gs = ps.grad(E, S)
        return 1.2 * t * float(np.max(np.abs(ge))) + 1.0, 1.2 * t * float(np.max(np.abs(gs))) + 1.0

    scale = abs(pref) * _sup(fh) ** 3
    return oscillatory_quad_2d(
        fun, ((-R, R), (-R, R)), rate, blocks=blocks, order=order, tol=tol * max(scale, 1e-300), skip=skip,
        magnitude=lambda E, S: np.abs(amp(E, S)),
    )


def _sup(fh) -> float:
    s = getattr(fh, "sup", None)
    if s is not None:
        return float(s)
    if isinstance(fh, GaussianProfile):
        return abs(fh.amplitude)
    k = np.linspace(-_support(fh), _support(fh), 4001)
    return float(np.max(np.abs(fh(k))))


def dtf_gaussian_reference(profile: GaussianProfile, t: float, xi: float, sign: float = 1.0, rtol: float = 1e-11) -> QuadResult:
    """Same integral for a Gaussian profile with the sigma integral in closed form.

    For fixed eta, phi is quadratic in sigma and the sigma integral is a
    complex Gaussian.  The remaining eta integral is done by Gauss-Legendre
    panels, doubled until converged.  Used as a high-t oracle.
    """
    A, s = profile.amplitude, profile.width
    if A == 0 or xi == 0 or sign == 0:
        return QuadResult(0.0j, 0.0, 0, 0)
    R = profile.support + abs(xi)

    def integrand(eta):
        a = xi - eta
        P = 1.0 / s**2 - 3j * t * a
        Q = a / s**2 - 3j * t * a**2
        expo = -1j * t * (xi**3 - eta**3 - a**3) - eta**2 / (2 * s**2) - a**2 / (2 * s**2) + Q**2 / (4 * P)
        return A**3 * np.sqrt(np.pi / P) * np.exp(expo)

    pref = -1j * sign * xi / (2 * np.pi)
    # phase derivative bound over the interval
    n = int(np.ceil(0.7 * t * 3 * (R + abs(xi)) ** 2 * 2 * R / 16)) + 8
    prev = None
    for level in range(8):
        x, w = _panel_nodes(-R, R, n, 16)
        val = pref * complex(np.sum(integrand(x) * w))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return QuadResult(val, abs(val - prev), len(x), level + 1)
        prev, n = val, 2 * n
    raise QuadratureBudgetError("Gaussian reference did not converge", val, abs(val - prev))


# --------------------------------------------------------------------------
# stationary-phase leading terms
# --------------------------------------------------------------------------


def lemma_leading(value: complex, psi0: float, signature: int, det: float, lam: float) -> complex:
    """2 pi e^{i pi s / 4} / sqrt|det| * e^{i lam psi0} / lam * value."""
    return 2 * np.pi * np.exp(0.25j * np.pi * signature) / math.sqrt(abs(det)) * np.exp(1j * lam * psi0) / lam * value


@dataclass
class AsymptoticTerms:
    resonant: complex
    airy: complex
    c_constant: complex
    resonant_coefficient: complex
    exp_sign: int = -1

    @property
    def total(self) -> complex:
        return self.resonant + self.airy


def leading_constants(xi: float, sign: float = 1.0) -> tuple:
    """(resonant coefficient r, Airy constant c) from the critical-point data.

    With the phase e^{-i t phi}, i.e. psi = -phi and lam = t, the three
    resonant points contribute r sign(xi) |f^|^2 f^ / t, the fourth point
    (i c / t) e^{-i t phi_4} f^(xi/3)^3.
    """
    sp = stationary_points(Fraction(xi).limit_denominator(10**12))
    pref = -1j * sign * xi / (2 * np.pi)
    res = 0.0j
    for p in sp.points[:3]:
        # signature and det of Hess(-phi)
        res += lemma_leading(pref, 0.0, -p.signature, float(p.det_hess), 1.0)
    p4 = sp.points[3]
    airy = lemma_leading(pref, 0.0, -p4.signature, float(p4.det_hess), 1.0)
    return res * np.sign(xi), airy / 1j


def dtf_asymptotic(fhat, t: float, xi: float, sign: float = 1.0, exp_sign: int = -1) -> AsymptoticTerms:
    """Leading large-t terms of d_t f^(t, xi)."""
    fh = _as_profile(fhat)
    r, c = leading_constants(xi, sign)
    f_xi = complex(fh(np.array([xi]))[0])
    f_3 = complex(fh(np.array([xi / 3.0]))[0])
    phi4 = 8.0 / 9.0 * xi**3
    resonant = r * np.sign(xi) / t * abs(f_xi) ** 2 * f_xi
    airy = 1j * c / t * np.exp(1j * exp_sign * t * phi4) * f_3**3
    return AsymptoticTerms(resonant, airy, c, r, exp_sign)


@dataclass
class AiryConstantFit:
    c_fit: complex
    c_formula: complex
    exp_sign: int
    correlation: dict
    residual: float

    def to_dict(self) -> dict:
        return {
            "c_fit": [self.c_fit.real, self.c_fit.imag],
            "c_formula": [self.c_formula.real, self.c_formula.imag],
            "exp_sign": self.exp_sign,
            "correlation": self.correlation,
            "residual": self.residual,
        }


def fit_airy_constant(fhat, xi: float, times: Sequence[float], quad_values: Sequence[complex], sign: float = 1.0) -> AiryConstantFit:
    """Pin c and the sign of the Airy phase against quadrature values.

    The resonant term is removed and the remainder is correlated with
    e^{+- i t (8/9) xi^3} f^(xi/3)^3 / t; the better-correlated sign is kept
    and c is its least-squares coefficient.
    """
    fh = _as_profile(fhat)
    times = np.asarray(times, dtype=float)
    q = np.asarray(quad_values, dtype=complex)
    res = np.array([dtf_asymptotic(fh, t, xi, sign).resonant for t in times])
    r = q - res
    f3 = complex(fh(np.array([xi / 3.0]))[0]) ** 3
    corr, coef = {}, {}
    for es in (-1, 1):
        basis = 1j * np.exp(1j * es * times * 8.0 / 9.0 * xi**3) * f3 / times
        cc = complex(np.vdot(basis, r) / np.vdot(basis, basis))
        corr[es] = float(abs(np.vdot(basis, r)) / (np.linalg.norm(basis) * np.linalg.norm(r) + 1e-300))
        coef[es] = cc
    best = max(corr, key=corr.get)
    basis = 1j * np.exp(1j * best * times * 8.0 / 9.0 * xi**3) * f3 / times
    resid = float(np.linalg.norm(r - coef[best] * basis) / (np.linalg.norm(r) + 1e-300))
    return AiryConstantFit(coef[best], leading_constants(xi, sign)[1], best, {str(k): v for k, v in corr.items()}, resid)


# --------------------------------------------------------------------------
# generic two-dimensional stationary phase
# --------------------------------------------------------------------------


@dataclass
class StationaryPhaseReport:
    critical_point: Optional[tuple]
    signature: Optional[int]
    det: Optional[float]
    lams: list
    integrals: list
    leading: list
    errors: list
    quad_errors: list
    fitted_order: float
    case: str
    alpha: float

    def to_json(self) -> str:
        d = asdict(self)
        for key in ("integrals", "leading"):
            d[key] = [[complex(v).real, complex(v).imag] for v in d[key]]
        return json.dumps(d, indent=2)


def _find_critical(grad, hess, x0, box, tol=1e-13, iters=50):
    x = np.array(x0, dtype=float)
    for _ in range(iters):
        g = np.array(grad(*x), dtype=float)
        if np.linalg.norm(g) < tol:
            break
        a, b, c = hess(*x)
        H = np.array([[a, b], [b, c]], dtype=float)
        try:
            x = x - np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return None
    (e0, e1), (s0, s1) = box
    if np.linalg.norm(grad(*x)) > 1e-9 or not (e0 < x[0] < e1 and s0 < x[1] < s1):
        return None
    return x


def stationary_phase_2d(
    F: Callable,
    psi: Callable,
    grad: Callable,
    hess: Callable,
    lams: Sequence[float],
    box: tuple,
    guess=(0.0, 0.0),
    exact: Optional[Callable] = None,
    alpha: float = 0.5,
    tol: float = 1e-13,
    blocks: int = 16,
) -> StationaryPhaseReport:
    """iint e^{i lam psi} F against its stationary-phase leading term.

    With a nondegenerate critical point inside ``box`` the leading term is
    2 pi e^{i pi s/4} / sqrt|det| e^{i lam psi_0} F(x_0) / lam, and the
    remainder order is the negated log-log slope of |I - leading|.  Without
    one the leading term is zero and the reported order is the decay rate
    of |I| itself.  ``exact(lam)`` replaces quadrature when a closed form is
    known.
    """
    x0 = _find_critical(grad, hess, guess, box)
    sig = det = None
    if x0 is not None:
        a, b, c = hess(*x0)
        det = float(a * c - b * b)
        if det == 0:
            raise DegeneratePhaseError("degenerate critical point")
        sig = signature_2x2(a, b, c)[0]
    integrals, leading, errs, qerrs = [], [], [], []
    for lam in lams:
        if exact is not None:
            I, qe = complex(exact(lam)), 0.0
        else:

            def fun(E, S, lam=lam):
                return np.exp(1j * lam * psi(E, S)) * F(E, S)

            def rate(e0, e1, s0, s1, lam=lam):
                E, S = np.meshgrid(np.linspace(e0, e1, 5), np.linspace(s0, s1, 5))
                ge, gs = grad(E, S)
                return 1.2 * lam * float(np.max(np.abs(ge))) + 1.0, 1.2 * lam * float(np.max(np.abs(gs))) + 1.0

            q = oscillatory_quad_2d(fun, box, rate, blocks=blocks, tol=tol, magnitude=lambda E, S: np.abs(F(E, S)))
            I, qe = q.value, q.error
        L = lemma_leading(complex(F(*x0)), float(psi(*x0)), sig, det, lam) if x0 is not None else 0.0j
        integrals.append(I)
        leading.append(L)
        errs.append(abs(I - L))
        qerrs.append(qe)
    fit = loglog_fit(np.asarray(lams, dtype=float), np.maximum(np.asarray(errs), 1e-300))
    return StationaryPhaseReport(
        critical_point=None if x0 is None else (float(x0[0]), float(x0[1])),
        signature=sig,
        det=det,
        lams=[float(v) for v in lams],
        integrals=integrals,
        leading=leading,
        errors=errs,
        quad_errors=qerrs,
        fitted_order=-fit.slope,
        case="critical" if x0 is not None else "non-stationary",
        alpha=alpha,
    )


def fresnel_gaussian_exact(lam: float) -> complex:
    """iint exp(i lam (eta^2 + sigma^2)/2 - (eta^2 + sigma^2)/2) = 2 pi / (1 - i lam)."""
    return 2 * np.pi / (1 - 1j * lam)
