"""Periodic grid, spectral transforms and weighted norms.

Every field of the package lives on a :class:`Grid`, a uniform periodic
discretisation of an interval ``[x_min, x_min + length)`` standing in for
the real line.  Fourier coefficients are stored in numpy FFT order and are
normalised so that they approximate the continuum transform

    u_hat(k) = (2 pi)^(-1/2) * integral exp(-i k x) u(x) dx,

i.e. ``u_hat[j] = dx / sqrt(2 pi) * sum_i exp(-i k_j x_i) u(x_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)


class DomainTooSmallError(ValueError):
    """A weighted integrand or a profile does not decay before the grid edge."""


class MeanNotZeroError(ValueError):
    """The periodic antiderivative was requested for a field with nonzero mean."""

    def __init__(self, mean, tol):
        super().__init__(f"field mean {mean:.3e} exceeds tolerance {tol:.3e}")
        self.mean = mean
        self.tol = tol


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points on ``[x_min, x_min + length)``.

    ``x_min`` defaults to ``-length / 2`` so that x is measured from the
    domain centre.
    """

    n: int
    length: float
    x_min: Optional[float] = None

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 16, got {self.n}")
        if not self.length > 0:
            raise ValueError("grid length must be positive")
        if self.x_min is None:
            object.__setattr__(self, "x_min", -0.5 * self.length)
        x = self.x_min + self.spacing * np.arange(self.n)
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        for arr in (x, k):
            arr.flags.writeable = False
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_k", k)

    @property
    def spacing(self) -> float:
        return self.length / self.n

    dx = spacing

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def k(self) -> np.ndarray:
        """Wavenumbers 2 pi j / L in FFT order (j = 0..n/2-1, -n/2..-1)."""
        return self._k

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def k_max(self) -> float:
        return np.pi / self.spacing

    @property
    def nyquist(self) -> int:
        return self.n // 2

    @property
    def x_max(self) -> float:
        return self.x_min + self.length

    def dealias_mask(self) -> np.ndarray:
        """Boolean mask keeping modes with |j| < n/3 (2/3 rule)."""
        j = np.abs(np.fft.fftfreq(self.n, d=1.0 / self.n))
        return j < self.n / 3.0

    def zeros(self) -> "PhysicalField":
        return PhysicalField(self, np.zeros(self.n))

    def field(self, values) -> "PhysicalField":
        return PhysicalField(self, values)


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real samples ``u(x_i)`` on a grid.  Values are read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values, float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def _check(self, other):
        if isinstance(other, PhysicalField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return PhysicalField(self.grid, self.values + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PhysicalField(self.grid, self.values - self._check(other))

    def __rsub__(self, other):
        return PhysicalField(self.grid, self._check(other) - self.values)

    def __mul__(self, other):
        return PhysicalField(self.grid, self.values * self._check(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return PhysicalField(self.grid, self.values / self._check(other))

    def __neg__(self):
        return PhysicalField(self.grid, -self.values)

    def __pow__(self, p):
        return PhysicalField(self.grid, self.values**p)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        return float(np.sqrt(self.grid.spacing * np.sum(self.values**2)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients in FFT order, continuum-normalised."""

    grid: Grid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = _frozen(self.coeffs, complex)
        if c.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def at(self, xi) -> np.ndarray:
        """Linear interpolation of the coefficients at frequencies ``xi``."""
        k = np.fft.fftshift(self.grid.k)
        c = np.fft.fftshift(self.coeffs)
        xi = np.asarray(xi, dtype=float)
        return np.interp(xi, k, c.real) + 1j * np.interp(xi, k, c.imag)


def _phase(grid: Grid) -> np.ndarray:
    return np.exp(-1j * grid.k * grid.x_min)


def transform(f: PhysicalField) -> SpectralField:
    """Continuum-normalised discrete Fourier transform."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("transform: field contains non-finite values")
    g = f.grid
    coeffs = g.spacing / SQRT_2PI * _phase(g) * np.fft.fft(f.values)
    return SpectralField(g, coeffs, real=True)


def inverse_transform(F: SpectralField) -> PhysicalField:
    """Inverse of :func:`transform`; returns the real part for real fields."""
    g = F.grid
    if not np.all(np.isfinite(F.coeffs)):
        raise ValueError("inverse_transform: coefficients contain non-finite values")
    vals = np.fft.ifft(F.coeffs / _phase(g)) * (SQRT_2PI / g.spacing)
    return PhysicalField(g, vals.real)


def derivative_symbol(grid: Grid, order: int) -> np.ndarray:
    """(i k)^order with the Nyquist mode zeroed for odd orders."""
    sym = (1j * grid.k) ** order
    if order % 2:
        sym = sym.copy()
        sym[grid.nyquist] = 0.0
    return sym


def differentiate(F: SpectralField, order: int) -> SpectralField:
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    return SpectralField(F.grid, F.coeffs * derivative_symbol(F.grid, order), F.real)


def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Array-level spectral derivative (used on hot paths)."""
    if order == 0:
        return np.asarray(values, dtype=float)
    sym = (1j * grid.k[: grid.n // 2 + 1]) ** order
    if order % 2:
        sym[-1] = 0.0
    return np.fft.irfft(sym * np.fft.rfft(values), n=grid.n)


def derivative(f: PhysicalField, order: int = 1) -> PhysicalField:
    """Physical-space convenience wrapper around :func:`differentiate`."""
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    return PhysicalField(f.grid, spectral_derivative(f.values, f.grid, order))


def fractional_derivative(f: PhysicalField, alpha: float) -> PhysicalField:
    """|d/dx|^alpha as the Fourier multiplier |k|^alpha."""
    g = f.grid
    kk = np.abs(g.k[: g.n // 2 + 1]) ** alpha
    return PhysicalField(g, np.fft.irfft(kk * np.fft.rfft(f.values), n=g.n))


def shift(f: PhysicalField, s: float) -> PhysicalField:
    """Spectral translation: returns x -> f(x - s)."""
    g = f.grid
    k = g.k[: g.n // 2 + 1]
    ph = np.exp(-1j * k * s)
    # a half-integer shift of the Nyquist mode is not real-representable
    ph[-1] = np.cos(k[-1] * s)
    return PhysicalField(g, np.fft.irfft(ph * np.fft.rfft(f.values), n=g.n))


def quadrature(f: PhysicalField) -> float:
    """Trapezoid rule on the periodic grid, spectrally exact for smooth fields."""
    return float(f.grid.spacing * np.sum(f.values))


def antiderivative(f: PhysicalField, mean_tol: Optional[float] = None) -> PhysicalField:
    """Spectral antiderivative pinned to zero at the left grid point.

    Stands in for ``x -> int_{-inf}^x f``; requires a numerically zero mean.
    """
    g = f.grid
    vals = f.values
    mean = float(np.mean(vals))
    if mean_tol is None:
        mean_tol = 1e-8 * float(np.max(np.abs(vals))) if vals.size else 0.0
    if abs(mean) > mean_tol:
        raise MeanNotZeroError(mean, mean_tol)
    fh = np.fft.rfft(vals - mean)
    k = g.k[: g.n // 2 + 1]
    inv = np.zeros_like(fh)
    inv[1:] = fh[1:] / (1j * k[1:])
    inv[-1] = 0.0
    out = np.fft.irfft(inv, n=g.n)
    return PhysicalField(g, out - out[0])


def cumulative_integral(f: PhysicalField) -> PhysicalField:
    """Running integral from the left grid edge, ``x -> int_{x_min}^x f``.

    The mean is integrated exactly as a linear ramp and the zero-mean
    remainder spectrally, so no zero-mean precondition is needed.
    """
    g = f.grid
    mean = float(np.mean(f.values))
    rest = antiderivative(PhysicalField(g, f.values - mean), mean_tol=np.inf).values
    return PhysicalField(g, rest + mean * (g.x - g.x_min))


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------

WEIGHT_KINDS = ("unit", "tanh_half", "exponential", "poly_plus", "virial")


@dataclass(frozen=True)
class WeightSpec:
    """A weight w(y) with y = x - center.

    kinds:
      * ``unit``         w = 1
      * ``tanh_half``    w = (1 + tanh(delta y))^(1/2)
      * ``exponential``  w = exp(a y)
      * ``poly_plus``    w = <y_+>^m
      * ``virial``       w = chi^(1/2), chi = (A_k + (delta z)^2)^k (1 + tanh(delta z)),
                         z = y + sigma t + x0
    """

    kind: str
    delta: float = 0.1
    a: float = 0.0
    m: float = 0.0
    k: int = 0
    A_k: float = 1.0
    sigma: float = 0.0
    x0: float = 0.0
    center: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def with_center(self, center: float, time: Optional[float] = None) -> "WeightSpec":
        from dataclasses import replace

        return replace(self, center=center, time=self.time if time is None else time)

    def check_soliton_speed(self, c: float):
        if self.kind == "exponential" and not 0 < self.a < np.sqrt(c / 3.0):
            raise ValueError(f"exponential weight needs 0 < a < sqrt(c/3) = {np.sqrt(c / 3):.4f}, got {self.a}")

    def chi(self, y) -> np.ndarray:
        """Virial weight chi_{k,delta}; only meaningful for kind ``virial``."""
        z = np.asarray(y, float) + self.sigma * self.time + self.x0
        d = self.delta
        return (self.A_k + (d * z) ** 2) ** self.k * (1.0 + np.tanh(d * z))

    def __call__(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) - self.center
        if self.kind == "unit":
            return np.ones_like(y)
        if self.kind == "tanh_half":
            return np.sqrt(1.0 + np.tanh(self.delta * y))
        if self.kind == "exponential":
            return np.exp(self.a * y)
        if self.kind == "poly_plus":
            return (1.0 + np.maximum(y, 0.0) ** 2) ** (0.5 * self.m)
        return np.sqrt(self.chi(y))


def _weighted_integrands(f: PhysicalField, w: WeightSpec, sobolev_order: int):
    if sobolev_order not in (0, 1, 2):
        raise ValueError("sobolev order must be 0, 1 or 2")
    g = f.grid
    wx = w(g.x)
    return [(wx * spectral_derivative(f.values, g, j)) ** 2 for j in range(sobolev_order + 1)]


def weighted_edge_ratio(f: PhysicalField, w: WeightSpec, sobolev_order: int = 0) -> float:
    """Largest edge-to-peak ratio of the weighted integrands (0 for f = 0)."""
    worst = 0.0
    for integrand in _weighted_integrands(f, w, sobolev_order):
        peak = float(np.max(integrand))
        if not np.isfinite(peak):
            return np.inf
        if peak > 0.0:
            worst = max(worst, max(integrand[0], integrand[-1]) / peak)
    return float(worst)


def weighted_norm(
    f: PhysicalField,
    w: WeightSpec,
    sobolev_order: int = 0,
    edge_tol: float = 1e-10,
) -> float:
    """sqrt(sum_{j<=s} ||w d^j f||^2) by spectral quadrature.

    Raises :class:`DomainTooSmallError` when the weighted integrand at either
    grid edge exceeds ``edge_tol`` times its maximum.
    """
    integrands = _weighted_integrands(f, w, sobolev_order)
    if w.kind != "unit":
        ratio = weighted_edge_ratio(f, w, sobolev_order)
        if ratio > edge_tol:
            raise DomainTooSmallError(
                f"{w.kind} weighted integrand not decayed at the grid edge (edge/peak = {ratio:.3e})"
            )
    total = sum(float(np.sum(i)) for i in integrands)
    return float(np.sqrt(f.grid.spacing * total))


def edge_mass(f: PhysicalField, margin: float) -> float:
    """Fraction of the L^2 mass within ``margin`` of either grid edge."""
    g = f.grid
    x = g.x
    mask = (x < g.x_min + margin) | (x > g.x_max - margin)
    tot = float(np.sum(f.values**2))
    if tot == 0.0:
        return 0.0
    return float(np.sum(f.values[mask] ** 2)) / tot
