"""Interaction profile, logarithmic phase and modified-scattering checks.

The profile is f^(t, xi) = exp(-i t xi^3) u^(t, xi), which undoes the Airy
flow exactly.  For small solutions its modulus freezes while its phase
drifts like kappa sign(xi) |f^|^2 log t.  Stationary phase on the cubic
term of the equation (with the continuum transform normalised by
1/sqrt(2 pi)) gives kappa = -1/2; a nominal value kappa = 1/6 is kept for
comparison.

Correspondingly, for x <= -t^(1/3 + 2 gamma) and xi0 = sqrt(-x / (3t)),

    u(t, x) ~ A(t, xi0) Re[ exp(-2 i t xi0^3 + i pi/4 + i kappa |f_inf|^2 log t) f_inf(xi0) ],

with A = sqrt(2 / (3 t xi0)) (derived) or 1 / sqrt(3 t xi0) (nominal).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fitting import linear_fit, loglog_fit
from .grid import Grid, PhysicalField, SpectralField, fractional_derivative, spectral_derivative, transform

DERIVED_PHASE_COEFFICIENT = -0.5
NOMINAL_PHASE_COEFFICIENT = 1.0 / 6.0

CONVENTIONS = {
    # name: (phase coefficient kappa, amplitude factor in A = factor / sqrt(t xi0))
    "derived": (DERIVED_PHASE_COEFFICIENT, np.sqrt(2.0 / 3.0)),
    "nominal": (NOMINAL_PHASE_COEFFICIENT, np.sqrt(1.0 / 3.0)),
}


def _fields(snapshot):
    """Accept a RunState or a PhysicalField."""
    if isinstance(snapshot, PhysicalField):
        return snapshot
    return snapshot.u


def extract_profile(u_snapshot, t: float) -> SpectralField:
    """f^ = exp(-i t xi^3) u^ in the continuum normalisation of ``transform``."""
    if t < 1.0:
        raise ValueError("profiles are defined for t >= 1")
    u = _fields(u_snapshot)
    U = transform(u)
    k = u.grid.k
    return SpectralField(u.grid, np.exp(-1j * t * k**3) * U.coeffs)


@dataclass
class ProfileTrack:
    times: list
    profiles: list

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if len(self.times) != len(self.profiles):
            raise ValueError("one profile per time")
        if t.size and (t[0] < 1.0 or np.any(np.diff(t) <= 0)):
            raise ValueError("track times must be increasing and >= 1")

    @property
    def grid(self) -> Grid:
        return self.profiles[0].grid

    @property
    def xi(self) -> np.ndarray:
        return self.grid.k

    def matrix(self) -> np.ndarray:
        return np.array([p.coeffs for p in self.profiles])

    @classmethod
    def from_states(cls, states) -> "ProfileTrack":
        ok = [s for s in states if s.t >= 1.0]
        return cls([float(s.t) for s in ok], [extract_profile(s, s.t) for s in ok])


@dataclass
class PhaseTrack:
    times: list
    B: list
    coefficient: float = DERIVED_PHASE_COEFFICIENT
    t_start: float = 1.0


def accumulate_B(track: ProfileTrack, coefficient: float = DERIVED_PHASE_COEFFICIENT) -> PhaseTrack:
    """B(t, xi) = coefficient sign(xi) int_{t0}^t |f^(s, xi)|^2 ds / s.

    Trapezoid rule in tau = log s; t0 is the first track time (recorded as
    ``t_start``).
    """
    t = np.asarray(track.times, float)
    if t.size == 0:
        return PhaseTrack([], [], coefficient)
    tau = np.log(t)
    mod2 = np.abs(track.matrix()) ** 2
    sgn = np.sign(track.xi)
    B = np.zeros_like(mod2)
    if t.size > 1:
        dtau = np.diff(tau)[:, None]
        B[1:] = np.cumsum(0.5 * dtau * (mod2[1:] + mod2[:-1]), axis=0)
    B = coefficient * sgn[None, :] * B
    return PhaseTrack(t.tolist(), list(B), coefficient, float(t[0]))


def modified_profile(track: ProfileTrack, phases: PhaseTrack) -> np.ndarray:
    """w^ = exp(-i B) f^ as a (times x xi) array."""
    return np.exp(-1j * np.array(phases.B)) * track.matrix()


@dataclass
class AsymptoticProfile:
    xi: np.ndarray
    f_inf: np.ndarray
    w_inf: np.ndarray
    mask: np.ndarray
    t_late: float
    gamma: float
    cauchy: list = field(default_factory=list)
    cauchy_decreasing: bool = True
    coefficient: float = DERIVED_PHASE_COEFFICIENT

    def at(self, xi0) -> np.ndarray:
        """Linear interpolation of f_inf on the sorted xi grid."""
        order = np.argsort(self.xi)
        xs = self.xi[order]
        fr = np.interp(xi0, xs, self.f_inf.real[order])
        fi = np.interp(xi0, xs, self.f_inf.imag[order])
        return fr + 1j * fi


def estimate_f_infinity(
    track: ProfileTrack,
    phases: PhaseTrack,
    t_late: Optional[float] = None,
    gamma: float = 0.05,
    xi_max: Optional[float] = None,
    richardson: bool = False,
) -> AsymptoticProfile:
    """f_inf estimated as w^ at ``t_late`` with a dyadic Cauchy table.

    The validity mask keeps t_late^(-1/3 + gamma) <= |xi| (<= xi_max when
    given).  With ``richardson`` the last two dyadic snapshots are combined
    assuming a t^(-1/3) approach, instead of taking w^(t_late) itself.
    """
    t = np.asarray(track.times, float)
    if t_late is None:
        t_late = float(t[-1])
    if t_late < 10.0 * t[0]:
        raise ValueError("t_late must be at least ten times the first track time")
    W = modified_profile(track, phases)
    i_late = int(np.argmin(np.abs(t - t_late)))
    t_late = float(t[i_late])
    xi = track.xi
    mask = np.abs(xi) >= t_late ** (-1.0 / 3.0 + gamma)
    if xi_max is not None:
        mask &= np.abs(xi) <= xi_max
    # dyadic ladder t_late / 2^j, oldest pair first
    ladder = [t_late]
    while ladder[-1] / 2 >= t[0] * (1 - 1e-9):
        ladder.append(ladder[-1] / 2)
    ladder = ladder[::-1]
    table = []
    for t1, t2 in zip(ladder, ladder[1:]):
        i1 = int(np.argmin(np.abs(t - t1)))
        i2 = int(np.argmin(np.abs(t - t2)))
        if i2 > i1:
            d = float(np.max(np.abs(W[i2] - W[i1])[mask])) if mask.any() else 0.0
            table.append((float(t[i1]), float(t[i2]), d))
    diffs = [row[2] for row in table]
    decreasing = all(b <= a for a, b in zip(diffs, diffs[1:]))
    w_inf = W[i_late].copy()
    if richardson and len(table) >= 1:
        ta, tb = table[-1][0], table[-1][1]
        ia, ib = int(np.argmin(np.abs(t - ta))), int(np.argmin(np.abs(t - tb)))
        r = (ta / tb) ** (1.0 / 3.0)
        w_inf = (W[ib] - r * W[ia]) / (1.0 - r)
    return AsymptoticProfile(
        xi=xi.copy(),
        f_inf=w_inf.copy(),
        w_inf=w_inf,
        mask=mask,
        t_late=t_late,
        gamma=gamma,
        cauchy=table,
        cauchy_decreasing=bool(decreasing),
        coefficient=phases.coefficient,
    )


# --------------------------------------------------------------------------
# region checks
# --------------------------------------------------------------------------


class EmptyRegionError(ValueError):
    pass


@dataclass
class RegionErrorTable:
    t: float
    convention: str
    x: list
    xi0: list
    errors: list
    normalized_errors: list
    max_error: float
    max_normalized_error: float
    region: tuple

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def modified_scattering_prediction(x, t, profile: AsymptoticProfile, convention: str = "derived"):
    kappa, amp = CONVENTIONS[convention]
    x = np.asarray(x, float)
    xi0 = np.sqrt(-x / (3.0 * t))
    f = profile.at(xi0)
    phase = -2.0 * t * xi0**3 + np.pi / 4 + kappa * np.abs(f) ** 2 * np.log(t)
    return amp / np.sqrt(t * xi0) * np.real(np.exp(1j * phase) * f), xi0


def check_modified_scattering(
    u_snapshot,
    t: float,
    profile: AsymptoticProfile,
    convention: str = "derived",
    gamma: Optional[float] = None,
    x_left: Optional[float] = None,
) -> RegionErrorTable:
    """Pointwise errors of the modified-scattering formula on x <= -t^(1/3+2 gamma).

    Errors are normalised by t^(-1/3) (-x / t^(1/3))^(-3/10).  ``x_left``
    bounds the region from the left (default: the grid's left edge); the
    region is further limited to xi0 inside the profile's validity mask.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    u = _fields(u_snapshot)
    g = u.grid
    gamma = profile.gamma if gamma is None else gamma
    x_right = -(t ** (1.0 / 3.0 + 2.0 * gamma))
    x_left = g.x_min if x_left is None else x_left
    sel = (g.x <= x_right) & (g.x >= x_left)
    xs_all = g.x[sel]
    xi0_all = np.sqrt(-xs_all / (3.0 * t))
    valid_xi = np.abs(profile.xi[profile.mask])
    if valid_xi.size:
        keep = (xi0_all >= valid_xi.min()) & (xi0_all <= valid_xi.max())
    else:
        keep = np.zeros_like(xi0_all, bool)
    xs = xs_all[keep]
    if xs.size == 0:
        raise EmptyRegionError(f"modified-scattering region is empty at t={t}")
    pred, xi0 = modified_scattering_prediction(xs, t, profile, convention)
    err = np.abs(u.values[sel][keep] - pred)
    scale = t ** (-1.0 / 3.0) * (-xs / t ** (1.0 / 3.0)) ** (-3.0 / 10.0)
    nerr = err / scale
    return RegionErrorTable(
        t=float(t),
        convention=convention,
        x=xs.tolist(),
        xi0=xi0.tolist(),
        errors=err.tolist(),
        normalized_errors=nerr.tolist(),
        max_error=float(err.max()),
        max_normalized_error=float(nerr.max()),
        region=(float(xs.min()), float(xs.max())),
    )


def dispersive_diagnostics(u_snapshot, t: float) -> dict:
    """Scaled sup and L^2 functionals whose boundedness expresses the decay rates."""
    if t < 1.0:
        raise ValueError("diagnostics are defined for t >= 1")
    u = _fields(u_snapshot)
    g = u.grid
    v = u.values
    s = g.x / t ** (1.0 / 3.0)
    bracket = np.sqrt(1.0 + s * s)
    ux = spectral_derivative(v, g, 1)
    right = s >= 1.0
    cube = PhysicalField(g, v**3)
    row = {
        "t": float(t),
        "sup": float(np.max(np.abs(v))),
        "sup_scaled": float(np.max(np.abs(v) * t ** (1 / 3) * bracket**0.25)),
        "dsup_scaled": float(np.max(np.abs(ux) * t ** (2 / 3) * bracket**-0.25)),
        "right_scaled": float(np.max(np.abs(v[right]) * t ** (1 / 3) * s[right] ** 0.75)) if right.any() else 0.0,
        "bilinear_scaled": float(t * np.max(np.abs(v * ux))),
    }
    for alpha in (0.0, 0.4):
        d = fractional_derivative(cube, alpha) if alpha else cube
        row[f"cubic_L2_alpha{alpha:g}_scaled"] = float(d.l2() * t ** (5 / 6 + alpha / 3))
    return row


def scaled_trend(rows: Sequence[dict], key: str):
    """Log-log slope of a diagnostic column against t."""
    t = np.array([r["t"] for r in rows])
    v = np.array([r[key] for r in rows])
    if not np.any(v > 0):
        return 0.0, 1.0
    return loglog_fit(t, v).as_tuple()


def phase_slope(track: ProfileTrack, xi_star: float, t_min: Optional[float] = None):
    """Slope of unwrapped arg f^(t, xi*) against log t, and |f^(t_last, xi*)|^2."""
    t = np.asarray(track.times, float)
    j = int(np.argmin(np.abs(track.xi - xi_star)))
    vals = track.matrix()[:, j]
    sel = t >= (t_min if t_min is not None else t[0])
    ph = np.unwrap(np.angle(vals[sel]))
    fit = linear_fit(np.log(t[sel]), ph)
    return fit.slope, float(np.abs(vals[sel][-1]) ** 2), float(track.xi[j]), fit


def modulus_variation(track: ProfileTrack, xi_star: float, t_range: tuple) -> float:
    """(max - min) / min of |f^(t, xi*)| over t in ``t_range``."""
    t = np.asarray(track.times, float)
    j = int(np.argmin(np.abs(track.xi - xi_star)))
    sel = (t >= t_range[0]) & (t <= t_range[1])
    m = np.abs(track.matrix()[sel, j])
    return float((m.max() - m.min()) / m.min())


def write_profile_csv(path, track: ProfileTrack, phases: PhaseTrack, xi_range: Optional[tuple] = None):
    """Long format: t, xi, |f|, arg f, B."""
    xi = track.xi
    order = np.argsort(xi)
    if xi_range is not None:
        order = order[(xi[order] >= xi_range[0]) & (xi[order] <= xi_range[1])]
    M = track.matrix()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "xi", "abs_f", "arg_f", "B"])
        for i, t in enumerate(track.times):
            B = phases.B[i]
            for j in order:
                w.writerow([repr(float(t)), repr(float(xi[j])), repr(float(abs(M[i, j]))), repr(float(np.angle(M[i, j]))), repr(float(B[j]))])
