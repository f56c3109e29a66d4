"""Modulated soliton decomposition and the v1 + v2 split.

A solution near the soliton family is written as

    u(t, x) = Q_{c(t)}(y) + v(t, y),    y = x - int_0^t c(s) ds + h(t),

with (c, h) chosen so that v is orthogonal to both adjoint kernel
functions.  v is further split as v1 + v2, where v1 solves mKdV from
the initial perturbation and v2 is the remainder.

Snapshots are taken in a frame moving with the initial speed c0.  Inside
a snapshot the fitted soliton sits at ``Q_c(x - p)``; its lab position is
``c0 t + p`` and h(t) = int_0^t c - (c0 t + p).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .evolve import EvolveConfig, run
from .fitting import Fit, tail_loglog_fit
from .grid import (
    Grid,
    PhysicalField,
    WeightSpec,
    edge_mass,
    shift,
    spectral_derivative,
    weighted_edge_ratio,
)
from .soliton import build_kernel, dq_dc_profile, dq_dy_profile, q_profile


class ModulationError(RuntimeError):
    """Newton did not converge; ``residual`` is the last constraint size."""

    def __init__(self, msg, residual, partial=None):
        super().__init__(msg)
        self.residual = residual
        self.partial = partial


class ModulationFit(NamedTuple):
    c: float
    h: float
    residual: float
    iterations: int


def _pair(grid: Grid, a, b) -> float:
    return grid.spacing * float(np.sum(a * b))


def constraint_pairings(u: PhysicalField, c: float, h: float) -> np.ndarray:
    """((v, zeta1), (v, zeta2)) with v = u - Q_c(. - h), adjoint kernel built numerically."""
    g = u.grid
    k = build_kernel(c, g, shift=h)
    v = u.values - q_profile(c, g.x - h)
    return np.array([_pair(g, v, k.zeta1.values), _pair(g, v, k.zeta2.values)])


def _jacobian(u: PhysicalField, c: float, h: float) -> np.ndarray:
    # closed-form derivatives of the adjoint kernel (alpha1 = sqrt(c), alpha2 = 0):
    # zeta1 = -y Q/(2 sqrt c), zeta2 = sqrt(c) Q
    g = u.grid
    y = g.x - h
    sc = np.sqrt(c)
    Q = q_profile(c, y)
    Qy = dq_dy_profile(c, y)
    Qc = dq_dc_profile(c, y)
    v = u.values - Q
    dy_z1 = -sc * Qc
    dy_z2 = sc * Qy
    dc_z1 = -(y * Qc / (2 * sc) - y * Q / (4 * c * sc))
    dc_z2 = Q / (2 * sc) + sc * Qc
    # v depends on (c, h) through -Q_c(x - h); zeta through its own arguments
    return np.array(
        [
            [-_pair(g, Qc, -y * Q / (2 * sc)) + _pair(g, v, dc_z1), _pair(g, Qy, -y * Q / (2 * sc)) - _pair(g, v, dy_z1)],
            [-_pair(g, Qc, sc * Q) + _pair(g, v, dc_z2), _pair(g, Qy, sc * Q) - _pair(g, v, dy_z2)],
        ]
    )


def fit_modulation(
    u: PhysicalField,
    guess: tuple,
    newton_tol: Optional[float] = None,
    max_iters: int = 25,
) -> ModulationFit:
    """Newton iteration for (c, h) making u - Q_c(. - h) orthogonal to zeta1, zeta2.

    The default tolerance is 1e-10 ||u||_2.  Raises :class:`ModulationError`
    when the iteration fails to converge or leaves c > 0.
    """
    if newton_tol is None:
        newton_tol = 1e-10 * max(u.l2(), 1e-300)
    c, h = float(guess[0]), float(guess[1])
    if not c > 0:
        raise ValueError("speed guess must be positive")
    F = constraint_pairings(u, c, h)
    res = float(np.max(np.abs(F)))
    for it in range(max_iters + 1):
        if res <= newton_tol:
            return ModulationFit(c, h, res, it)
        if it == max_iters:
            break
        J = _jacobian(u, c, h)
        if np.linalg.cond(J) > 1e12:
            J = _fd_jacobian(u, c, h)
        dc, dh = np.linalg.solve(J, -F)
        # damp steps that would cross c = 0 or grow the residual
        lam = 1.0
        while True:
            cn, hn = c + lam * dc, h + lam * dh
            if cn > 0:
                Fn = constraint_pairings(u, cn, hn)
                rn = float(np.max(np.abs(Fn)))
                if rn < res or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-3:
                raise ModulationError("Newton step left the soliton family", res)
        c, h, F, res = cn, hn, Fn, rn
    raise ModulationError(f"modulation fit did not converge (residual {res:.3e})", res)


def _fd_jacobian(u, c, h, eps=1e-6):
    J = np.empty((2, 2))
    J[:, 0] = (constraint_pairings(u, c + eps, h) - constraint_pairings(u, c - eps, h)) / (2 * eps)
    J[:, 1] = (constraint_pairings(u, c, h + eps) - constraint_pairings(u, c, h - eps)) / (2 * eps)
    return J


# --------------------------------------------------------------------------
# tracks and split
# --------------------------------------------------------------------------


@dataclass
class ModulationTrack:
    times: list = field(default_factory=list)
    c: list = field(default_factory=list)
    h: list = field(default_factory=list)
    constraint_residuals: list = field(default_factory=list)
    newton_iters: list = field(default_factory=list)
    # in-snapshot soliton position p, so Q_c(x - p) in frame coordinates
    positions: list = field(default_factory=list)
    frame_speed: float = 0.0

    def append(self, t, fit: ModulationFit):
        self.times.append(float(t))
        self.c.append(float(fit.c))
        self.positions.append(float(fit.h))
        self.constraint_residuals.append(float(fit.residual))
        self.newton_iters.append(int(fit.iterations))
        t_arr = np.array(self.times)
        c_arr = np.array(self.c)
        integral = float(np.trapezoid(c_arr, t_arr)) if len(t_arr) > 1 else 0.0
        self.h.append(integral - (self.frame_speed * t + fit.h))


@dataclass(frozen=True, eq=False)
class SplitState:
    t: float
    v1: PhysicalField
    v2: PhysicalField
    frame: float


def track_modulation(states, c0: float, frame_speed: float = 0.0, guess_h: float = 0.0, newton_tol=None, max_iters=25):
    track = ModulationTrack(frame_speed=frame_speed)
    guess = (c0, guess_h)
    for s in states:
        try:
            fit = fit_modulation(s.u, guess, newton_tol, max_iters)
        except ModulationError as err:
            err.partial = track
            raise
        track.append(s.t, fit)
        guess = (fit.c, fit.h)
    return track


def to_soliton_frame(f: PhysicalField, position: float) -> PhysicalField:
    """Resample a frame field so that y = 0 sits at the fitted soliton position."""
    return shift(f, -position)


def evolve_v1(v0: PhysicalField, track: ModulationTrack, cfg: EvolveConfig) -> list:
    """Free mKdV flow of v0 (in the snapshot frame), resampled into the y-frame.

    ``cfg`` supplies dt, scheme, frame speed and absorbing layer; snapshot
    times are taken from the track.
    """
    from dataclasses import replace

    times = tuple(track.times)
    if not np.any(v0.values):
        return [PhysicalField(v0.grid, np.zeros(v0.grid.n)) for _ in times]
    run_cfg = replace(cfg, snapshot_times=times, t_end=max(times[-1], cfg.dt))
    states = run(v0, run_cfg)
    return [to_soliton_frame(s.u, p) for s, p in zip(states, track.positions)]


def split(u: PhysicalField, v1_y: PhysicalField, c: float, position: float, t: float = 0.0) -> SplitState:
    uy = to_soliton_frame(u, position)
    v = uy.values - q_profile(c, uy.grid.x)
    return SplitState(t, v1_y, PhysicalField(u.grid, v - v1_y.values), position)


# --------------------------------------------------------------------------
# virial weights
# --------------------------------------------------------------------------


def virial_weight(
    k: int,
    delta: float,
    sigma: float = 0.0,
    x0: float = 0.0,
    A_k: Optional[float] = None,
    C: float = 4.0,
    y_range: tuple = (-300.0, 300.0),
) -> WeightSpec:
    """Virial weight chi_{k,delta} with chi' >= 0 and chi'' <= C delta chi'.

    With ``A_k`` unset the smallest power of two passing the check is used;
    an explicit ``A_k`` failing it raises ``ValueError``.
    """
    if k < 0 or not delta > 0:
        raise ValueError("need k >= 0 and delta > 0")
    candidates = [A_k] if A_k is not None else [2.0**j for j in range(0, 40)]
    for A in candidates:
        w = WeightSpec("virial", delta=delta, k=k, A_k=float(A), sigma=sigma, x0=x0)
        if check_virial_weight(w, C, y_range):
            return w
    raise ValueError(f"virial weight condition fails for k={k}, delta={delta}, A_k={A_k}")


def check_virial_weight(w: WeightSpec, C: float = 4.0, y_range: tuple = (-300.0, 300.0), n: int = 20001) -> bool:
    y = np.linspace(y_range[0], y_range[1], n)
    d = w.delta
    z = d * (y + w.sigma * w.time + w.x0)
    A, k = w.A_k, w.k
    p = (A + z * z) ** k
    dp = 2 * k * z * (A + z * z) ** (k - 1) if k > 0 else np.zeros_like(z)
    ddp = (2 * k * (A + z * z) ** (k - 1) + 4 * k * (k - 1) * z * z * (A + z * z) ** (k - 2)) if k > 0 else np.zeros_like(z)
    s = 1 + np.tanh(z)
    ds = 1 - np.tanh(z) ** 2
    dds = -2 * np.tanh(z) * ds
    # derivatives in y carry factors of delta
    chi1 = d * (dp * s + p * ds)
    chi2 = d * d * (ddp * s + 2 * dp * ds + p * dds)
    scale = np.max(np.abs(chi1))
    tol = 1e-12 * scale
    return bool(np.all(chi1 >= -tol) and np.all(chi2 <= C * d * chi1 + tol))


def virial_diagnostic(v1_track, w: WeightSpec, times=None) -> dict:
    """Ledgers of int chi (v^2 + v_y^2) and int chi (v_y^2/2 - v^4/4 + v^2/2) along a track."""
    h1, energy = [], []
    for i, v in enumerate(v1_track):
        g = v.grid
        ww = w if times is None else w.with_center(0.0, times[i])
        chi = ww.chi(g.x)
        vy = spectral_derivative(v.values, g, 1)
        h1.append(_pair(g, chi, v.values**2 + vy**2))
        energy.append(_pair(g, chi, 0.5 * vy**2 - 0.25 * v.values**4 + 0.5 * v.values**2))
    return {"h1": h1, "energy": energy}


def is_nonincreasing(series, rel_tol: float = 1e-6) -> bool:
    s = np.asarray(series, float)
    if s.size < 2:
        return True
    slack = rel_tol * abs(s[0])
    return bool(np.all(np.diff(s) <= slack))


# --------------------------------------------------------------------------
# stability experiment
# --------------------------------------------------------------------------


def _norm_edge(values: np.ndarray, grid: Grid, w: np.ndarray, order: int = 1):
    total, worst = 0.0, 0.0
    for j in range(order + 1):
        integrand = (w * spectral_derivative(values, grid, j)) ** 2
        peak = float(np.max(integrand))
        if peak > 0:
            worst = max(worst, max(integrand[0], integrand[-1]) / peak)
        total += float(np.sum(integrand))
    return float(np.sqrt(grid.spacing * total)), worst


def _fit_or_zero(t, v) -> Fit:
    v = np.asarray(v, float)
    if np.count_nonzero(v[len(v) // 2 :] > 0) < 2:
        return Fit(0.0, 0.0, 1.0, 0.0, len(v))
    return tail_loglog_fit(t, v, 0.5)


@dataclass
class StabilityReport:
    params: dict
    times: list
    c: list
    h: list
    positions: list
    constraint_residuals: list
    norms: dict
    fitted_exponents: dict
    c_plus: float
    h_plus: float
    virial_ledger: list
    virial_energy_ledger: list
    dissipation_ledger: list
    modulation_rates: dict
    edge_ratios: dict
    edge_mass: float
    complete: bool = True
    claim: str = "||v(t)||_{H^1_w} <~ <t>^(-m); c(t) -> c_+, h(t) -> h_+"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _zero_report(params, times, c0):
    n = len(times)
    z = [0.0] * n
    names = ("v_H1w", "v1_H1w", "v2_H1a", "v1_poly_H1")
    return StabilityReport(
        params=params,
        times=list(times),
        c=[c0] * n,
        h=z,
        positions=z,
        constraint_residuals=z,
        norms={k: z for k in names},
        fitted_exponents={k: (0.0, 1.0) for k in names},
        c_plus=c0,
        h_plus=0.0,
        virial_ledger=z,
        virial_energy_ledger=z,
        dissipation_ledger=z,
        modulation_rates={"c_dot": z, "h_dot": z, "c_dot_scaled": z, "h_dot_scaled": z},
        edge_ratios={k: 0.0 for k in names},
        edge_mass=0.0,
    )


def stability_experiment(
    c0: float,
    v0: PhysicalField,
    T: float,
    m: float,
    dt: float = 2e-3,
    n_snapshots: int = 101,
    delta: float = 0.1,
    a: Optional[float] = None,
    absorb_fraction: float = 0.4,
    scheme: str = "if_rk4",
    newton_tol: Optional[float] = None,
    dealias: bool = False,
) -> StabilityReport:
    """Full pipeline for a perturbed soliton Q_{c0} + v0 on ``v0.grid``.

    The soliton starts at x = 0 and the run is carried out in the frame
    moving with speed c0.  ``a`` (exponential rate for v2) defaults to
    half the admissible bound sqrt(c0/3).  Dealiasing is off by default:
    truncating the soliton spectrum at 2/3 of the Nyquist wavenumber sheds
    radiation that the exponential weight then amplifies at the box edge.
    """
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    if not m > 0.5:
        raise ValueError("the weighted data exponent m must exceed 1/2")
    grid = v0.grid
    if a is None:
        a = 0.5 * np.sqrt(c0 / 3.0)
    WeightSpec("exponential", a=a).check_soliton_speed(c0)
    times = np.linspace(0.0, T, n_snapshots)
    params = dict(c0=c0, T=T, m=m, dt=dt, n=grid.n, L=grid.length, x_min=grid.x_min, delta=delta, a=a,
                  absorb_fraction=absorb_fraction, scheme=scheme, dealias=dealias, n_snapshots=n_snapshots,
                  data_poly_H1=_norm_edge(v0.values, grid, WeightSpec("poly_plus", m=m)(grid.x))[0],
                  data_L2=v0.l2())
    if not np.any(v0.values):
        return _zero_report(params, times.tolist(), c0)

    cfg = EvolveConfig(
        dt=dt,
        t_end=T,
        snapshot_times=times,
        scheme=scheme,
        dealias=dealias,
        frame_speed=c0,
        absorb_width=absorb_fraction * grid.length,
        absorb_strength=min(1.0 / dt, 50.0),
    )
    u0 = PhysicalField(grid, q_profile(c0, grid.x) + v0.values)
    states = run(u0, cfg)
    track = track_modulation(states, c0, frame_speed=c0, newton_tol=newton_tol)
    v1s = evolve_v1(v0, track, cfg)

    y = grid.x
    w_tanh = WeightSpec("tanh_half", delta=delta)(y)
    w_exp = WeightSpec("exponential", a=a)(y)
    w_poly = WeightSpec("poly_plus", m=m)(y)
    # (w^2)' as the squared dissipation weight
    w_prime = np.sqrt(delta * (1.0 - np.tanh(delta * y) ** 2))
    vir = virial_weight(0, delta)

    norms = {k: [] for k in ("v_H1w", "v1_H1w", "v2_H1a", "v1_poly_H1")}
    edges = {k: 0.0 for k in norms}
    diss_rate = []
    for s, v1, c, p in zip(states, v1s, track.c, track.positions):
        st = split(s.u, v1, c, p, s.t)
        v = st.v1.values + st.v2.values
        for key, vals, w in (
            ("v_H1w", v, w_tanh),
            ("v1_H1w", st.v1.values, w_tanh),
            ("v2_H1a", st.v2.values, w_exp),
            ("v1_poly_H1", st.v1.values, w_poly),
        ):
            nv, er = _norm_edge(vals, grid, w, 1)
            norms[key].append(nv)
            edges[key] = max(edges[key], er)
        diss_rate.append(_norm_edge(v, grid, w_prime, 2)[0] ** 2)
    ledger = virial_diagnostic(v1s, vir)
    diss = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (np.array(diss_rate[1:]) + np.array(diss_rate[:-1])))])

    c_arr = np.array(track.c)
    h_arr = np.array(track.h)
    c_dot = np.gradient(c_arr, times)
    h_dot = np.gradient(h_arr, times)
    bracket = (1.0 + times**2) ** m  # <t>^{2m}
    tail = times >= 0.9 * T
    fits = {k: _fit_or_zero(times[1:], np.array(v)[1:]).as_tuple() for k, v in norms.items()}
    return StabilityReport(
        params=params,
        times=times.tolist(),
        c=track.c,
        h=track.h,
        positions=track.positions,
        constraint_residuals=track.constraint_residuals,
        norms=norms,
        fitted_exponents=fits,
        c_plus=float(np.mean(c_arr[tail])),
        h_plus=float(np.mean(h_arr[tail])),
        virial_ledger=ledger["h1"],
        virial_energy_ledger=ledger["energy"],
        dissipation_ledger=diss.tolist(),
        modulation_rates={
            "c_dot": np.abs(c_dot).tolist(),
            "h_dot": np.abs(h_dot).tolist(),
            "c_dot_scaled": (np.abs(c_dot) * bracket).tolist(),
            "h_dot_scaled": (np.abs(h_dot) * bracket).tolist(),
        },
        edge_ratios=edges,
        edge_mass=edge_mass(states[-1].u, 0.01 * grid.length),
    )
