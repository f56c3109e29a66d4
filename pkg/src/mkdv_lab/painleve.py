"""Self-similar variables and the Painleve II profile.

With u(t, x) = t^{-1/3} phi(x / t^{1/3}) the equation u_t + u_xxx + s (u^3)_x = 0
reduces to

    phi'' - lam xi phi + s phi^3 = 0,   lam = 1/3.

The coefficient lam is kept as a parameter so that the alternative lam = 3
can be solved and rejected by substituting the profile back into the PDE.
Solutions are selected on the decaying branch phi ~ k Ai(lam^{1/3} xi) as
xi -> +inf, and k is tuned so that the (windowed) integral of phi matches a
prescribed mass.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import airy

from .grid import PhysicalField, transform

LAMBDA_CANDIDATES = (1.0 / 3.0, 3.0)


class PainleveError(RuntimeError):
    pass


class ShootingBlowUp(PainleveError):
    def __init__(self, msg, last_stable_k):
        super().__init__(msg)
        self.last_stable_k = last_stable_k


class SecantError(PainleveError):
    pass


class MassMismatchError(ValueError):
    pass


# --------------------------------------------------------------------------
# rescaling
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SelfSimilarSnapshot:
    """v(xi) = t^{1/3} u(t, t^{1/3} xi) sampled on ``xi``.

    ``mass`` is the integral over the whole periodic box, which the change of
    variables preserves exactly.
    """

    t: float
    xi: np.ndarray
    v: np.ndarray
    mass: float
    clipped: bool = False


def _fourier_eval(u: PhysicalField, x: np.ndarray, block: int = 512) -> np.ndarray:
    """Trigonometric interpolant of ``u`` at arbitrary points."""
    g = u.grid
    F = transform(u).coeffs
    k = g.k
    out = np.empty(len(x))
    scale = g.dk / np.sqrt(2.0 * np.pi)
    for i in range(0, len(x), block):
        xs = x[i : i + block]
        out[i : i + block] = scale * np.real(np.exp(1j * np.outer(xs, k)) @ F)
    return out


def rescale(u: PhysicalField, t: float, xi: Optional[np.ndarray] = None) -> SelfSimilarSnapshot:
    """Map a snapshot into self-similar variables.

    Without ``xi`` the native grid is mapped pointwise.  Otherwise the field
    is resampled spectrally; points outside the mapped box are dropped and
    the snapshot is flagged ``clipped``.
    """
    if t < 1:
        raise ValueError(f"rescale needs t >= 1, got {t}")
    g = u.grid
    s = t ** (1.0 / 3.0)
    mass = g.spacing * float(np.sum(u.values))
    if xi is None:
        return SelfSimilarSnapshot(t, g.x / s, s * u.values, mass)
    xi = np.asarray(xi, dtype=float)
    x = s * xi
    inside = (x >= g.x_min) & (x <= g.x_min + g.length)
    clipped = not bool(np.all(inside))
    xi = xi[inside]
    if not np.any(u.values):
        return SelfSimilarSnapshot(t, xi, np.zeros_like(xi), 0.0, clipped)
    return SelfSimilarSnapshot(t, xi, s * _fourier_eval(u, s * xi), mass, clipped)


def self_similar_field(g_profile, t: float, grid) -> PhysicalField:
    """t^{-1/3} g(x / t^{1/3}) on ``grid``; ``g_profile`` is a callable."""
    s = t ** (1.0 / 3.0)
    return PhysicalField(grid, g_profile(grid.x / s) / s)


def airy_profile(xi, lam: float = 1.0 / 3.0, k: float = 1.0):
    """Linear branch k Ai(lam^{1/3} xi) and its derivative."""
    a = lam ** (1.0 / 3.0)
    ai, aip, _, _ = airy(a * np.asarray(xi, dtype=float))
    return k * ai, k * a * aip


def airy_mass(lam: float = 1.0 / 3.0) -> float:
    """Integral of Ai(lam^{1/3} xi) over the line."""
    return lam ** (-1.0 / 3.0)


# --------------------------------------------------------------------------
# Painleve II by shooting
# --------------------------------------------------------------------------


def smooth_window(xi, left: float, right: float) -> np.ndarray:
    """C-infinity step: 0 for xi <= left, 1 for xi >= right."""
    s = np.clip((np.asarray(xi, dtype=float) - left) / (right - left), 0.0, 1.0)

    def bump(z):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)

    a, b = bump(s), bump(1.0 - s)
    return a / (a + b)


@dataclass
class PainleveSolution:
    xi: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    k: float
    mass: float
    lam: float
    sign: int = 1
    xi_right: float = 10.0
    ode_residual: float = 0.0
    right_match: float = 0.0
    mass_error: float = 0.0
    secant_iterations: int = 0
    _dense: object = field(default=None, repr=False)

    def __call__(self, xi) -> np.ndarray:
        """Evaluate phi; beyond the right matching point the Airy branch is used."""
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < self.xi[0] - 1e-12):
            raise ValueError(f"profile requested below xi = {self.xi[0]}")
        out = np.empty_like(xi)
        right = xi > self.xi_right
        out[right] = airy_profile(xi[right], self.lam, self.k)[0]
        if not np.any(~right):
            return out
        if self._dense is not None:
            out[~right] = self._dense(xi[~right])[0]
        else:
            out[~right] = np.interp(xi[~right], self.xi, self.phi)
        return out

    def derivatives(self, xi) -> tuple:
        """(phi, phi', phi'') from the dense interpolant and the ODE."""
        xi = np.asarray(xi, dtype=float)
        y = self._dense(xi)
        p, dp = y[0], y[1]
        return p, dp, self.lam * xi * p - self.sign * p**3

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "phi"])
            for a, b in zip(self.xi, self.phi):
                w.writerow([repr(float(a)), repr(float(b))])

    def summary(self) -> dict:
        return {
            "lam": float(self.lam),
            "sign": int(self.sign),
            "k": float(self.k),
            "mass": float(self.mass),
            "mass_error": float(self.mass_error),
            "ode_residual": float(self.ode_residual),
            "right_match": float(self.right_match),
            "secant_iterations": int(self.secant_iterations),
            "xi_range": [float(self.xi[0]), float(self.xi[-1])],
        }


def _rhs(lam, sign):
    def f(x, y):
        return [y[1], lam * x * y[0] - sign * y[0] ** 3]

    return f


def _blowup_event(limit):
    def ev(x, y):
        return limit - abs(y[0])

    ev.terminal = True
    return ev


def shoot(
    k: float,
    lam: float = 1.0 / 3.0,
    sign: int = 1,
    xi_left: float = -90.0,
    xi_right: float = 10.0,
    n: int = 8001,
    rtol: float = 1e-12,
    atol: Optional[float] = None,
    blowup: float = 1e3,
):
    """Integrate from ``xi_right`` down to ``xi_left`` on the k Ai branch."""
    y0 = airy_profile(xi_right, lam, k)
    if atol is None:
        # the starting amplitude can be far below any fixed absolute tolerance
        atol = 1e-6 * rtol * max(abs(float(y0[0])), 1e-300)
    xs = np.linspace(xi_right, xi_left, n)
    sol = solve_ivp(
        _rhs(lam, sign),
        (xi_right, xi_left),
        [float(y0[0]), float(y0[1])],
        method="DOP853",
        t_eval=xs,
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=_blowup_event(blowup),
    )
    if sol.status == 1 or not np.all(np.isfinite(sol.y)):
        raise ShootingBlowUp(f"profile blew up for k = {k}", None)
    if sol.status != 0:
        raise PainleveError(sol.message)
    return xs[::-1], sol.y[0][::-1], sol.y[1][::-1], sol.sol


def windowed_mass(xi, phi, window_left: float, dense=None, n: int = 80001) -> float:
    """Integral of phi against a smooth window opening over [w, w/2].

    The window regularises the conditionally convergent oscillatory left
    tail.  The right tail beyond the grid is added from the Airy branch by
    the caller.
    """
    if dense is not None:
        xs = np.linspace(window_left, xi[-1], n)
        vals = dense(xs)[0]
    else:
        sel = xi >= window_left
        xs, vals = xi[sel], phi[sel]
    return float(np.trapezoid(vals * smooth_window(xs, window_left, 0.5 * window_left), xs))


def _airy_tail(lam, k, xi_right):
    # int_{xi_right}^inf Ai(a x) dx = (1/a) int_{a xi_right}^inf Ai
    from scipy.integrate import quad

    a = lam ** (1.0 / 3.0)
    val, _ = quad(lambda z: airy(z)[0], a * xi_right, np.inf, epsabs=1e-15)
    return k * val / a


def profile_mass(k, lam=1.0 / 3.0, sign=1, xi_left=-90.0, xi_right=10.0, return_parts=False):
    """Regularised mass of the shooting profile with parameter k.

    With ``return_parts`` the difference from a window placed at 3/4
    xi_left is returned as a regularisation error estimate.
    """
    if k == 0:
        return (0.0, 0.0) if return_parts else 0.0
    xs, phi, dphi, dense = shoot(k, lam, sign, xi_left, xi_right)
    tail = _airy_tail(lam, k, xi_right)
    m1 = windowed_mass(xs, phi, xi_left, dense) + tail
    m2 = windowed_mass(xs, phi, 0.75 * xi_left, dense) + tail
    if return_parts:
        return m1, abs(m1 - m2)
    return m1


def ode_residual(sol: PainleveSolution, h: Optional[float] = None, margin: float = 0.5) -> float:
    """sup |phi'' - lam xi phi + s phi^3| with phi'' from sixth-order differences of phi'."""
    if h is None:
        # resolve the fastest left-tail oscillation, frequency ~ sqrt(lam |xi|)
        h = 0.05 / np.sqrt(1.0 + sol.lam * abs(sol.xi[0]))
    xs = np.arange(sol.xi[0] + margin, sol.xi_right - margin, h)
    c = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * h)
    d2 = np.zeros_like(xs)
    for j, cj in zip(range(-3, 4), c):
        if cj:
            d2 += cj * sol._dense(xs + j * h)[1]
    p = sol._dense(xs)[0]
    return float(np.max(np.abs(d2 - sol.lam * xs * p + sol.sign * p**3)))


def solve_painleve(
    mass_target: float,
    ode_tol: float = 1e-8,
    lam: float = 1.0 / 3.0,
    sign: int = 1,
    xi_left: float = -90.0,
    xi_right: float = 10.0,
    mass_tol: float = 1e-6,
    max_iters: int = 15,
) -> PainleveSolution:
    """Shoot on k until the regularised mass equals ``mass_target``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if mass_target == 0:
        xs = np.linspace(xi_left, xi_right, 8001)
        z = np.zeros_like(xs)
        return PainleveSolution(xs, z, z.copy(), 0.0, 0.0, lam, sign, xi_right, _dense=lambda x: np.zeros((2, np.size(x))))

    def F(k):
        return profile_mass(k, lam, sign, xi_left, xi_right) - mass_target

    k0 = mass_target / airy_mass(lam)
    k1 = 1.05 * k0
    last_ok = None
    try:
        f0 = F(k0)
        last_ok = k0
        f1 = F(k1)
        last_ok = k1
    except ShootingBlowUp as e:
        raise ShootingBlowUp(str(e), last_ok) from None
    it = 0
    while abs(f1) > mass_tol:
        it += 1
        if it > max_iters:
            raise SecantError(f"secant did not converge: residual {f1:.3e} at k = {k1}")
        if f1 == f0:
            raise SecantError("secant stalled (flat mass map)")
        k2 = k1 - f1 * (k1 - k0) / (f1 - f0)
        try:
            f2 = F(k2)
        except ShootingBlowUp as e:
            raise ShootingBlowUp(f"{e}; last stable k = {last_ok}", last_ok) from None
        k0, f0, k1, f1 = k1, f1, k2, f2
        last_ok = k1
    k = float(k1)
    xs, phi, dphi, dense = shoot(k, lam, sign, xi_left, xi_right)
    m, m_err = profile_mass(k, lam, sign, xi_left, xi_right, return_parts=True)
    sol = PainleveSolution(xs, phi, dphi, k, m, lam, sign, xi_right, mass_error=m_err, secant_iterations=it, _dense=dense)
    sol.ode_residual = ode_residual(sol)
    # deviation from the linear branch one unit inside the matching point
    p_lin = airy_profile(xi_right - 1.0, lam, k)[0]
    sol.right_match = float(abs(dense(xi_right - 1.0)[0] - p_lin) / max(abs(p_lin), 1e-300))
    if sol.ode_residual > ode_tol:
        raise PainleveError(f"ODE residual {sol.ode_residual:.3e} exceeds {ode_tol:.1e}")
    return sol


# --------------------------------------------------------------------------
# PDE oracle for the linear coefficient
# --------------------------------------------------------------------------


def pde_residual(sol: PainleveSolution, t: float = 2.0, h: float = 0.02, x_range=(-6.0, 6.0), n: int = 241) -> float:
    """sup |u_t + u_xxx + s (u^3)_x| for u = t^{-1/3} phi(x t^{-1/3}).

    All derivatives are fourth-order central differences of the profile
    evaluated through its interpolant, so the check does not use the ODE.
    """
    s3 = 1.0 / 3.0

    def u(tt, xx):
        return sol(xx / tt**s3) / tt**s3

    x = np.linspace(*x_range, n)
    ut = (-u(t + 2 * h, x) + 8 * u(t + h, x) - 8 * u(t - h, x) + u(t - 2 * h, x)) / (12 * h)
    # fourth-order stencil for the third derivative
    c3 = {-3: 1.0 / 8, -2: -1.0, -1: 13.0 / 8, 1: -13.0 / 8, 2: 1.0, 3: -1.0 / 8}
    uxxx = sum(c * u(t, x + j * h) for j, c in c3.items()) / h**3
    c1 = {-2: 1.0 / 12, -1: -2.0 / 3, 1: 2.0 / 3, 2: -1.0 / 12}
    cube_x = sum(c * u(t, x + j * h) ** 3 for j, c in c1.items()) / h
    return float(np.max(np.abs(ut + uxxx + sol.sign * cube_x)))


@dataclass
class LambdaSelection:
    selected: float
    residuals: dict
    steps: list
    ratio: float
    unique: bool

    def to_dict(self) -> dict:
        return asdict(self)


def select_lambda(
    mass_target: float,
    candidates: Sequence[float] = LAMBDA_CANDIDATES,
    sign: int = 1,
    steps: Sequence[float] = (0.08, 0.04, 0.02),
    t: float = 2.0,
    min_ratio: float = 1e3,
) -> LambdaSelection:
    """Solve for each candidate and keep the one whose PDE residual vanishes
    under refinement.  ``residuals[lam]`` lists the residual per step."""
    res = {}
    for lam in candidates:
        sol = solve_painleve(mass_target, lam=lam, sign=sign)
        res[float(lam)] = [pde_residual(sol, t=t, h=h) for h in steps]
    finest = {lam: r[-1] for lam, r in res.items()}
    # a valid candidate must converge: residual shrinks with h
    converging = [lam for lam, r in res.items() if r[-1] < 0.5 * r[0]]
    best = min(finest, key=finest.get)
    others = [finest[l] for l in finest if l != best]
    ratio = min(others) / finest[best] if others and finest[best] > 0 else np.inf
    unique = converging == [best] and ratio >= min_ratio
    return LambdaSelection(best, {str(k): v for k, v in res.items()}, list(steps), float(ratio), bool(unique))


# --------------------------------------------------------------------------
# comparison against runs
# --------------------------------------------------------------------------


@dataclass
class SelfSimilarComparison:
    times: list
    region_halfwidth: list
    sup_error: list
    normalized_error: list
    gamma: float
    mass: float
    lam: float
    claim: str = "|u - t^{-1/3} phi(x/t^{1/3})| <~ eps t^{-1/3-3 gamma/2} on |x| <= t^{1/3+2 gamma}"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def rows(self):
        return list(zip(self.times, self.region_halfwidth, self.sup_error, self.normalized_error))


def compare_self_similar(states, sol: PainleveSolution, gamma: float = 0.05, mass_tol: float = 1e-4) -> SelfSimilarComparison:
    """Sup error against the self-similar profile on |x| <= t^{1/3 + 2 gamma}.

    ``states`` are RunState-like objects (``.t``, ``.u``).
    """
    times, widths, errs, norm = [], [], [], []
    for s in states:
        u = s.u
        P = u.grid.spacing * float(np.sum(u.values))
        if abs(P - sol.mass) > mass_tol * max(1.0, abs(sol.mass)):
            raise MassMismatchError(f"run mass {P:.8f} vs profile mass {sol.mass:.8f} at t = {s.t}")
        t = float(s.t)
        half = t ** (1.0 / 3.0 + 2.0 * gamma)
        x = u.grid.x
        sel = np.abs(x) <= half
        pred = sol(x[sel] / t ** (1.0 / 3.0)) / t ** (1.0 / 3.0) if np.any(u.values) else np.zeros(np.count_nonzero(sel))
        e = float(np.max(np.abs(u.values[sel] - pred))) if np.any(sel) else 0.0
        times.append(t)
        widths.append(half)
        errs.append(e)
        norm.append(e * t ** (1.0 / 3.0 + 1.5 * gamma))
    return SelfSimilarComparison(times, widths, errs, norm, gamma, sol.mass, sol.lam)


def collapse_differences(states, xi_max: float = 3.0, n: int = 601) -> list:
    """sup_{|xi| <= xi_max} |v(t_{j+1}) - v(t_j)| for consecutive snapshots."""
    xi = np.linspace(-xi_max, xi_max, n)
    snaps = [rescale(s.u, s.t, xi) for s in states]
    if any(sn.clipped for sn in snaps):
        raise ValueError("collapse window exceeds the mapped domain")
    return [float(np.max(np.abs(b.v - a.v))) for a, b in zip(snaps, snaps[1:])]


def write_comparison_csv(path, cmp: SelfSimilarComparison):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "region_halfwidth", "sup_error", "normalized_error"])
        for row in cmp.rows():
            w.writerow([repr(float(v)) for v in row])
