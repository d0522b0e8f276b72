"""
Grid-level field operators for Markovian diffusion in one dimension.

Everything here is a pure function of immutable inputs. Fields live on a
uniform periodic grid; the domain is assumed wide enough that densities are
negligible at the edges, so periodic wraparound is harmless for quantities
that decay there (rho, sqrt(rho), psi).

Two differentiation schemes are provided:

``spectral``
    FFT derivative. Used for fields that vanish at the boundary.
``central``
    Second-order central differences (one-sided at the edges). Used for fields
    that grow with |x| (S, v, b, Q, Omega, phi) where a periodic extension
    would be discontinuous.
"""
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import DriftNotGradient, GridMismatch, NonPositiveDensity

#: relative density floor applied before taking logs or dividing by rho
DENSITY_FLOOR = 1e-12

SCALAR_LABELS = frozenset({"rho", "S", "Q", "Omega", "phi", "P", "residual"})
VECTOR_LABELS = frozenset({"u", "v", "b", "F", "residual"})


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [x_min, x_max) with a power-of-two node count."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self):
        return self.x_max - self.x_min

    @cached_property
    def x(self):
        x = self.x_min + self.spacing * np.arange(self.n_points)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self):
        """Angular wavenumbers in numpy FFT order."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)
        k.setflags(write=False)
        return k

    @cached_property
    def k_rfft(self):
        k = 2.0 * np.pi * np.fft.rfftfreq(self.n_points, d=self.spacing)
        k.setflags(write=False)
        return k

    def contains(self, a, b=None):
        lo, hi = (a, a) if b is None else (min(a, b), max(a, b))
        return self.x_min <= lo and hi <= self.x[-1]


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray
    label: str
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.n_points,):
            raise GridMismatch(
                f"{self.label}: {self.values.shape[0]} values for a grid of {self.grid.n_points}")
        if self.label not in SCALAR_LABELS:
            raise ValueError(f"unknown scalar label {self.label!r}")
        if self.label == "rho" and np.any(self.values < 0):
            raise NonPositiveDensity("density has negative values")

    def with_values(self, values, label=None):
        return ScalarField(self.grid, values, label or self.label, self.time)

    def normalized(self):
        """Return a copy rescaled to unit integral (rho only)."""
        mass = integrate(self.values, self.grid)
        if not mass > 0:
            raise NonPositiveDensity("density has zero mass")
        return self.with_values(self.values / mass)


@dataclass(frozen=True)
class VectorField1D:
    grid: Grid
    values: np.ndarray
    label: str
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.n_points,):
            raise GridMismatch(
                f"{self.label}: {self.values.shape[0]} values for a grid of {self.grid.n_points}")
        if self.label not in VECTOR_LABELS:
            raise ValueError(f"unknown vector label {self.label!r}")


@dataclass(frozen=True)
class DiffusionParams:
    D: float
    m: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.D > 0 and self.m > 0 and self.beta > 0):
            raise ValueError(f"D, m, beta must be positive: {self}")


class Mode(Enum):
    STANDARD = "standard"
    RECOIL = "recoil"


def density(grid, values, time=0.0):
    """Build a unit-mass density field from raw (unnormalized) values."""
    return ScalarField(grid, values, "rho", time).normalized()


def gaussian_density(grid, alpha, center=0.0, time=0.0):
    """rho(x) = exp(-(x - center)^2 / alpha^2) / sqrt(pi alpha^2), renormalized on the grid."""
    return density(grid, np.exp(-((grid.x - center) / alpha) ** 2), time)


# ---------------------------------------------------------------- numerics

def integrate(values, grid):
    """Trapezoidal integral over one period (equals the plain sum times spacing)."""
    return float(np.sum(values) * grid.spacing)


def integrate_interval(values, grid, a, b):
    """
    Integral of ``values`` over [a, b].

    Uses the exact integral of the trigonometric interpolant, which reduces to
    the trapezoidal rule over the whole period and stays spectrally accurate
    for arbitrary (off-node) endpoints.
    """
    n = grid.n_points
    c = np.fft.rfft(values) / n
    k = grid.k_rfft

    def antiderivative(x):
        s = x - grid.x_min
        total = c[0].real * s
        kk = k[1:n // 2]
        cc = c[1:n // 2]
        total += 2.0 * np.sum((cc / (1j * kk) * (np.exp(1j * kk * s) - 1.0)).real)
        # Nyquist mode taken as a pure cosine
        kn = k[n // 2]
        total += c[n // 2].real * np.sin(kn * s) / kn
        return total

    return float(antiderivative(b) - antiderivative(a))


def spectral_derivative(values, grid, order=1):
    """FFT derivative of a periodic real or complex array."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        k = grid.k
        mult = (1j * k) ** order
        if order % 2:
            mult[grid.n_points // 2] = 0.0
        return np.fft.ifft(np.fft.fft(values) * mult)
    k = grid.k_rfft
    mult = (1j * k) ** order
    if order % 2:
        mult[-1] = 0.0
    return np.fft.irfft(np.fft.rfft(values) * mult, n=grid.n_points)


def central_derivative(values, grid):
    """Second-order central difference, one-sided second order at the two edges."""
    return np.gradient(np.asarray(values, dtype=float), grid.spacing, edge_order=2)


def derivative(values, grid, scheme="central"):
    if scheme == "spectral":
        return spectral_derivative(values, grid)
    if scheme == "central":
        return central_derivative(values, grid)
    raise ValueError(f"unknown differentiation scheme {scheme!r}")


def _check_grids(*fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch(f"{f.label} lives on {f.grid}, expected {grid}")
    return grid


def _check_density(rho):
    if rho.label != "rho":
        raise ValueError(f"expected a density field, got label {rho.label!r}")
    values = rho.values
    if values.size == 0 or not np.max(values) > 0:
        raise NonPositiveDensity("density is identically zero")
    return values


def floored(values, floor=DENSITY_FLOOR):
    values = np.asarray(values, dtype=float)
    return np.maximum(values, floor * np.max(values))


def _amplitude_derivatives(rho):
    """sqrt(rho) with its floor, and its first two spectral derivatives."""
    values = _check_density(rho)
    amp = np.sqrt(values)
    amp_floor = np.maximum(amp, np.sqrt(DENSITY_FLOOR) * amp.max())
    d1 = spectral_derivative(amp, rho.grid, 1)
    d2 = spectral_derivative(amp, rho.grid, 2)
    return amp_floor, d1, d2


# ---------------------------------------------------------------- operators

def osmotic_velocity(rho, params, scheme="spectral"):
    """
    u = D d/dx ln rho.

    The spectral route differentiates sqrt(rho), which is smooth and decays,
    instead of ln rho, whose floored tail has a kink.
    """
    if scheme == "spectral":
        amp, d1, _ = _amplitude_derivatives(rho)
        u = 2.0 * params.D * d1 / amp
    elif scheme == "central":
        u = params.D * central_derivative(np.log(floored(_check_density(rho))), rho.grid)
    else:
        raise ValueError(f"unknown differentiation scheme {scheme!r}")
    return VectorField1D(rho.grid, u, "u", rho.time)


def q_potential(rho, params, scheme="spectral"):
    """Q = u^2/2 + D du/dx."""
    D = params.D
    if scheme == "spectral":
        amp, d1, d2 = _amplitude_derivatives(rho)
        u = 2.0 * D * d1 / amp
        # chain rule for du/dx keeps everything on smooth sqrt(rho)
        div_u = 2.0 * D * (d2 / amp - (d1 / amp) ** 2)
    elif scheme == "central":
        u = osmotic_velocity(rho, params, "central").values
        div_u = central_derivative(u, rho.grid)
    else:
        raise ValueError(f"unknown differentiation scheme {scheme!r}")
    return ScalarField(rho.grid, 0.5 * u ** 2 + D * div_u, "Q", rho.time)


def current_velocity(b, rho, params):
    """v = b - u."""
    _check_grids(b, rho)
    u = osmotic_velocity(rho, params)
    return VectorField1D(b.grid, b.values - u.values, "v", rho.time)


def omega_smoluchowski(F, params):
    """Omega = F^2 / (2 m^2 beta^2) + (D / m beta) dF/dx."""
    mb = params.m * params.beta
    dF = central_derivative(F.values, F.grid)
    return ScalarField(F.grid, F.values ** 2 / (2.0 * mb ** 2) + params.D / mb * dF,
                       "Omega", F.time)


def omega_recoil(Q, Omega):
    """Omega_r = 2Q - Omega."""
    _check_grids(Q, Omega)
    return ScalarField(Q.grid, 2.0 * Q.values - Omega.values, "Omega", Q.time)


def hj_residual(S, rho, Omega, mode, dS_dt, params):
    """
    Hamilton-Jacobi residual.

    Standard: dS/dt + |dS/dx|^2/2 + Q - Omega
    Recoil:   dS/dt + |dS/dx|^2/2 - Q + Omega
    """
    grid = _check_grids(S, rho, Omega, dS_dt)
    Q = q_potential(rho, params).values
    grad_S = central_derivative(S.values, grid)
    kinetic = dS_dt.values + 0.5 * grad_S ** 2
    if Mode(mode) is Mode.STANDARD:
        res = kinetic + Q - Omega.values
    else:
        res = kinetic - Q + Omega.values
    return ScalarField(grid, res, "residual", S.time)


def momentum_residual(v, Q, Omega, mode, dv_dt):
    """dv/dt + v dv/dx - d(Omega - Q)/dx, with the source sign flipped in recoil mode."""
    grid = _check_grids(v, Q, Omega, dv_dt)
    source = central_derivative(Omega.values - Q.values, grid)
    if Mode(mode) is Mode.RECOIL:
        source = -source
    res = dv_dt.values + v.values * central_derivative(v.values, grid) - source
    return VectorField1D(grid, res, "residual", v.time)


def girsanov_residual(phi, b, Omega_target, dphi_dt, params, tol=1e-6, mask=None):
    """
    Omega_target - 2D [dphi/dt + (b^2 / 2D + db/dx) / 2].

    ``b`` must equal 2D dphi/dx; the check is relative to max|b| and may be
    restricted to ``mask`` (e.g. where the density is above its floor).
    """
    grid = _check_grids(phi, b, Omega_target, dphi_dt)
    D = params.D
    mismatch = np.abs(b.values - 2.0 * D * central_derivative(phi.values, grid))
    if mask is not None:
        mismatch = mismatch[np.asarray(mask, dtype=bool)]
    scale = 1.0 + np.max(np.abs(b.values))
    if mismatch.size and mismatch.max() > tol * scale:
        raise DriftNotGradient(
            f"max|b - 2D grad phi| = {mismatch.max():.3e} exceeds {tol * scale:.3e}")
    div_b = central_derivative(b.values, grid)
    res = Omega_target.values - 2.0 * D * (dphi_dt.values + 0.5 * (b.values ** 2 / (2.0 * D) + div_b))
    return ScalarField(grid, res, "residual", phi.time)
