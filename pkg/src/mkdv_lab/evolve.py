"""Time integration of mKdV and of its linearisation about a soliton.

The equation integrated is

    u_t + u_xxx + s a(t) (u^3)_x = 0,      s = +1 focusing, -1 defocusing,

optionally written in a frame moving with speed ``frame_speed`` (which adds
``-frame_speed * u_x``).  In Fourier space the linear part
``i (k^3 + frame_speed k)`` is treated exactly, either with an integrating
factor (Lawson RK4, ``if_rk4``) or with exponential time differencing
(``etdrk4``, coefficients from contour averages).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import (
    Grid,
    PhysicalField,
    SQRT_2PI,
    antiderivative,
    quadrature,
    spectral_derivative,
    transform,
)


class BlowUpError(RuntimeError):
    """Raised when a run leaves the small-data regime or produces NaNs."""

    def __init__(self, msg, t, sup):
        super().__init__(msg)
        self.t = t
        self.sup = sup


@dataclass(frozen=True)
class EvolveConfig:
    dt: float = 2e-3
    t_end: float = 1.0
    scheme: str = "if_rk4"
    dealias: bool = True
    sign: int = 1
    a_of_t: Optional[Callable[[float], float]] = None
    snapshot_times: Sequence[float] = ()
    frame_speed: float = 0.0
    blowup_factor: float = 100.0
    check_every: int = 200
    absorb_width: float = 0.0
    absorb_strength: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")
        if self.scheme not in ("if_rk4", "etdrk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 (focusing) or -1 (defocusing)")
        ts = list(self.snapshot_times)
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot times must be sorted")
        if ts and (ts[0] < 0 or ts[-1] > self.t_end + 1e-12):
            raise ValueError("snapshot times must lie in [0, t_end]")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in ts))
        if self.absorb_width < 0 or self.absorb_strength < 0:
            raise ValueError("absorbing layer width and strength must be non-negative")

    def variant_constraint_holds(self, t_grid=None) -> bool:
        """Whether |a| <= 1 and |a'(t)| <= <t>^(-7/6) on a sample of times.

        Recorded for the variable-coefficient variant, never enforced.
        """
        if self.a_of_t is None:
            return True
        if t_grid is None:
            t_grid = np.linspace(0.0, self.t_end, 2001)
        a = np.array([self.a_of_t(t) for t in t_grid])
        da = np.gradient(a, t_grid)
        return bool(np.all(np.abs(a) <= 1.0) and np.all(np.abs(da) <= (1 + t_grid**2) ** (-7 / 12) + 1e-12))


@dataclass(frozen=True, eq=False)
class RunState:
    """A snapshot: time, field, spectral state and conserved-quantity drift."""

    t: float
    u: PhysicalField
    conserved_baseline: tuple = (0.0, 0.0, 0.0)
    conserved: tuple = (0.0, 0.0, 0.0)
    u_hat: Optional[np.ndarray] = None

    @property
    def drift(self) -> tuple:
        out = []
        for q0, q in zip(self.conserved_baseline, self.conserved):
            scale = abs(q0) if q0 != 0 else 1.0
            out.append(abs(q - q0) / scale)
        return tuple(out)


def conserved_quantities(u: PhysicalField, sign: int = 1) -> tuple:
    """Mass, energy and momentum (int u^2, int u_x^2/2 - s u^4/4, int u)."""
    v = u.values
    g = u.grid
    ux = spectral_derivative(v, g, 1)
    M = g.spacing * float(np.sum(v * v))
    H = g.spacing * float(np.sum(0.5 * ux * ux - 0.25 * sign * v**4))
    P = g.spacing * float(np.sum(v))
    return M, H, P


def absorbing_profile(grid: Grid, width: float, strength: float = 1.0) -> Optional[np.ndarray]:
    """sigma(x) = strength * sin^2(pi (x - x_min) / width) on the left layer, else 0."""
    if width <= 0 or strength == 0:
        return None
    if width >= grid.length:
        raise ValueError("absorbing layer wider than the domain")
    s = (grid.x - grid.x_min) / width
    return np.where(s < 1.0, strength * np.sin(np.pi * s) ** 2, 0.0)


class Stepper:
    """Exponential-integrator stepper on the rfft half spectrum.

    ``potential`` switches to the linearised flow
    ``v_t - c v_y + v_yyy + (potential * v)_y = 0``.

    With ``cfg.absorb_width > 0`` a damping term ``-sigma(x) u`` acts on
    ``[x_min, x_min + width]`` so that left-moving radiation does not wrap
    around the periodic box.
    """

    def __init__(self, grid: Grid, cfg: EvolveConfig, potential: Optional[np.ndarray] = None):
        self.grid = grid
        self.cfg = cfg
        nh = grid.n // 2 + 1
        k = grid.k[:nh].copy()
        k[-1] = grid.k_max  # rfft Nyquist is +n/2
        self.k = k
        ik = 1j * k
        ik[-1] = 0.0
        self.ik = ik
        lin = 1j * (k**3 + cfg.frame_speed * k)
        lin[-1] = 0.0
        self.lin = lin
        self.mask = grid.dealias_mask()[:nh] if cfg.dealias else np.ones(nh, bool)
        self.potential = None if potential is None else np.asarray(potential, float)
        self.damping = absorbing_profile(grid, cfg.absorb_width, cfg.absorb_strength)
        self._cache = {}

    # -- right-hand side --------------------------------------------------
    def nonlinear(self, uh: np.ndarray, t: float) -> np.ndarray:
        n = self.grid.n
        u = np.fft.irfft(uh, n=n)
        if self.potential is not None:
            out = -self.ik * np.fft.rfft(self.potential * u)
        else:
            a = 1.0 if self.cfg.a_of_t is None else float(self.cfg.a_of_t(t))
            out = (-self.cfg.sign * a) * self.ik * np.fft.rfft(u * u * u)
        if self.damping is not None:
            out = out - np.fft.rfft(self.damping * u)
        if self.cfg.dealias:
            out = out * self.mask
        return out

    # -- coefficients -----------------------------------------------------
    def _coeffs(self, h: float):
        key = round(h, 14)
        if key in self._cache:
            return self._cache[key]
        L = self.lin
        E = np.exp(0.5 * h * L)
        E2 = E * E
        if self.cfg.scheme == "if_rk4":
            co = (E, E2)
        else:
            m = 32
            r = np.exp(2j * np.pi * (np.arange(m) + 0.5) / m)
            LR = h * L[:, None] + r[None, :]
            Q = h * np.mean((np.exp(LR / 2) - 1) / LR, axis=1)
            f1 = h * np.mean((-4 - LR + np.exp(LR) * (4 - 3 * LR + LR**2)) / LR**3, axis=1)
            f2 = h * np.mean((2 + LR + np.exp(LR) * (LR - 2)) / LR**3, axis=1)
            f3 = h * np.mean((-4 - 3 * LR - LR**2 + np.exp(LR) * (4 - LR)) / LR**3, axis=1)
            co = (E, E2, Q, f1, f2, f3)
        self._cache[key] = co
        return co

    def step(self, uh: np.ndarray, t: float, h: float) -> np.ndarray:
        N = self.nonlinear
        if self.cfg.scheme == "if_rk4":
            E, E2 = self._coeffs(h)
            k1 = N(uh, t)
            k2 = N(E * (uh + 0.5 * h * k1), t + 0.5 * h)
            k3 = N(E * uh + 0.5 * h * k2, t + 0.5 * h)
            k4 = N(E2 * uh + h * E * k3, t + h)
            return E2 * uh + (h / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)
        E, E2, Q, f1, f2, f3 = self._coeffs(h)
        Nu = N(uh, t)
        a = E * uh + Q * Nu
        Na = N(a, t + 0.5 * h)
        b = E * uh + Q * Na
        Nb = N(b, t + 0.5 * h)
        c = E * a + Q * (2.0 * Nb - Nu)
        Nc = N(c, t + h)
        return E2 * uh + Nu * f1 + 2.0 * (Na + Nb) * f2 + Nc * f3

    def advance(self, uh: np.ndarray, t0: float, t1: float, sup0: float) -> np.ndarray:
        """Integrate from ``t0`` to ``t1`` with steps no larger than ``cfg.dt``."""
        span = t1 - t0
        if span <= 0:
            return uh
        nsteps = max(1, int(math.ceil(span / self.cfg.dt - 1e-9)))
        h = span / nsteps
        limit = self.cfg.blowup_factor * sup0 if sup0 > 0 else np.inf
        t = t0
        for i in range(nsteps):
            uh = self.step(uh, t, h)
            t = t0 + (i + 1) * h
            if (i + 1) % self.cfg.check_every == 0 or i == nsteps - 1:
                self._check(uh, t, limit)
        return uh

    def _check(self, uh, t, limit):
        if not np.all(np.isfinite(uh)):
            raise BlowUpError(f"non-finite values at t={t:.4f}", t, np.inf)
        if self.potential is None and np.isfinite(limit):
            sup = float(np.max(np.abs(np.fft.irfft(uh, n=self.grid.n))))
            if sup > limit:
                raise BlowUpError(f"sup norm {sup:.3e} exceeded blow-up limit {limit:.3e} at t={t:.4f}", t, sup)


def _state(grid, t, uh, baseline, sign) -> RunState:
    u = PhysicalField(grid, np.fft.irfft(uh, n=grid.n))
    return RunState(t=t, u=u, conserved_baseline=baseline, conserved=conserved_quantities(u, sign), u_hat=uh.copy())


def run(u0: PhysicalField, cfg: EvolveConfig, potential: Optional[np.ndarray] = None) -> list:
    """Evolve ``u0`` to ``cfg.t_end``; returns snapshots at ``cfg.snapshot_times``.

    If no snapshot times are given, the final state alone is returned.
    """
    grid = u0.grid
    if not np.all(np.isfinite(u0.values)):
        raise ValueError("initial data contains non-finite values")
    stepper = Stepper(grid, cfg, potential)
    baseline = conserved_quantities(u0, cfg.sign)
    times = list(cfg.snapshot_times) or [cfg.t_end]
    uh = np.fft.rfft(u0.values)
    sup0 = u0.sup()
    t = 0.0
    out = []
    for ts in times:
        uh = stepper.advance(uh, t, ts, sup0)
        t = ts
        out.append(_state(grid, t, uh, baseline, cfg.sign))
    return out


def step(state: RunState, cfg: EvolveConfig) -> RunState:
    """Advance a single state by ``cfg.dt``."""
    grid = state.u.grid
    stepper = Stepper(grid, cfg)
    uh = np.fft.rfft(state.u.values)
    uh = stepper.step(uh, state.t, cfg.dt)
    stepper._check(uh, state.t + cfg.dt, np.inf)
    baseline = state.conserved_baseline
    if baseline == (0.0, 0.0, 0.0):
        baseline = conserved_quantities(state.u, cfg.sign)
    return _state(grid, state.t + cfg.dt, uh, baseline, cfg.sign)


def soliton_potential(grid: Grid, c: float, center: float = 0.0) -> np.ndarray:
    """3 Q_c^2 on the grid, the coefficient of the linearised flux."""
    from .soliton import q_profile

    return 3.0 * q_profile(c, grid.x - center) ** 2


def evolve_linearized(v0: PhysicalField, c: float, cfg: EvolveConfig, center: float = 0.0) -> list:
    """Flow of v_t - c v_y + v_yyy + 3 (Q_c^2 v)_y = 0 in the soliton frame."""
    cfg = replace(cfg, frame_speed=c, dealias=cfg.dealias)
    return run(v0, cfg, potential=soliton_potential(v0.grid, c, center))


# --------------------------------------------------------------------------
# scaling vector field
# --------------------------------------------------------------------------


def scaling_action(state: RunState, sign: int = 1, mean_tol: Optional[float] = None):
    """Su = u + x u_x + 3 t u_t (u_t from the equation) and ISu = int_{-inf}^x Su.

    ``x`` is the physical coordinate of the grid.  Returns
    ``(Su, ISu, ||Su||_2, ||ISu||_2)``.
    """
    u = state.u
    g = u.grid
    v = u.values
    ux = spectral_derivative(v, g, 1)
    uxxx = spectral_derivative(v, g, 3)
    flux = spectral_derivative(v**3, g, 1)
    su = v + g.x * ux - 3.0 * state.t * (uxxx + sign * flux)
    Su = PhysicalField(g, su)
    ISu = antiderivative(Su, mean_tol=mean_tol)
    return Su, ISu, Su.l2(), ISu.l2()


# --------------------------------------------------------------------------
# snapshot dumps
# --------------------------------------------------------------------------


def write_snapshot_csv(path, states: Sequence[RunState]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "u"])
        for s in states:
            for x, val in zip(s.u.grid.x, s.u.values):
                w.writerow([repr(float(s.t)), repr(float(x)), repr(float(val))])


def write_spectral_dump(path, state: RunState):
    """Binary layout (little endian): int64 n, float64 L, float64 t, then n
    (re, im) float64 pairs of the continuum-normalised transform in FFT order.
    """
    g = state.u.grid
    coeffs = transform(state.u).coeffs
    with open(path, "wb") as fh:
        fh.write(struct.pack("<qdd", g.n, g.length, state.t))
        fh.write(np.ascontiguousarray(np.stack([coeffs.real, coeffs.imag], axis=1), dtype="<f8").tobytes())


def read_spectral_dump(path, x_min: Optional[float] = None):
    """Inverse of :func:`write_spectral_dump`; returns ``(t, PhysicalField)``."""
    from .grid import SpectralField, inverse_transform

    with open(path, "rb") as fh:
        n, L, t = struct.unpack("<qdd", fh.read(24))
        data = np.frombuffer(fh.read(16 * n), dtype="<f8").reshape(n, 2)
    grid = Grid(int(n), float(L), x_min)
    F = SpectralField(grid, data[:, 0] + 1j * data[:, 1])
    return t, inverse_transform(F)
