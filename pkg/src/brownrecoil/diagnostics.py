"""
Observables of a diffusing ensemble: energies, pressure, momentum rates,
co-moving mass balance and residual norms, plus the time-series container
the CLI serializes.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GridMismatch, NonPositiveDensity, VolumeOutsideGrid
from .fields import (Mode, ScalarField, central_derivative, integrate,
                     integrate_interval, spectral_derivative)

#: nodes with rho below this fraction of max(rho) are excluded from residual norms
VALIDITY_CUTOFF = 1e-10


@dataclass(frozen=True)
class ControlVolume:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"control volume needs a < b, got [{self.a}, {self.b}]")

    def check(self, grid):
        if not grid.contains(self.a, self.b):
            raise VolumeOutsideGrid(
                f"[{self.a}, {self.b}] not inside [{grid.x_min}, {grid.x[-1]}]")


def _same_grid(*fields):
    grid = fields[0].grid
    if any(f.grid != grid for f in fields[1:]):
        raise GridMismatch("fields live on different grids")
    return grid


def mass(rho):
    return integrate(rho.values, rho.grid)


def msd(rho):
    """Second moment about the origin, int x^2 rho."""
    return integrate(rho.grid.x ** 2 * rho.values, rho.grid)


def kinetic_energy(rho, v):
    """int rho v^2 / 2."""
    grid = _same_grid(rho, v)
    return integrate(0.5 * rho.values * v.values ** 2, grid)


def total_energy(rho, v, Q, Omega, mode=Mode.RECOIL):
    """
    Recoil: int (v^2/2 - Q + Omega) rho, conserved for static Omega.
    Standard: int (v^2/2 + Q - Omega) rho, the sign convention of the
    standard Hamilton-Jacobi equation.
    """
    grid = _same_grid(rho, v, Q, Omega)
    sign = -1.0 if Mode(mode) is Mode.RECOIL else 1.0
    return integrate((0.5 * v.values ** 2 + sign * (Q.values - Omega.values)) * rho.values, grid)


def _rho_grad(rho, f):
    """rho * f' for a growing f, written as (rho f)' - rho' f so both FFTs act on decaying data."""
    return (spectral_derivative(rho.values * f, rho.grid)
            - spectral_derivative(rho.values, rho.grid) * f)


def momentum_rate(rho, Q, Omega, vol, mode=Mode.STANDARD):
    """int_a^b rho d(Omega - Q)/dx; the negative of that in recoil mode."""
    grid = _same_grid(rho, Q, Omega)
    vol.check(grid)
    integrand = _rho_grad(rho, Omega.values - Q.values)
    rate = integrate_interval(integrand, grid, vol.a, vol.b)
    return -rate if Mode(mode) is Mode.RECOIL else rate


def pressure_field(rho, Q):
    """
    P with dP/dx = rho dQ/dx, gauge P(x_min) = 0.

    Integrates the trigonometric interpolant of rho Q' exactly, so the result
    is spectrally accurate for densities that vanish at the edges.
    """
    grid = _same_grid(rho, Q)
    if not np.max(rho.values) > 0:
        raise NonPositiveDensity("pressure needs a positive density")
    g = _rho_grad(rho, Q.values)
    n = grid.n_points
    c = np.fft.rfft(g)
    k = grid.k_rfft
    anti = np.zeros_like(c)
    anti[1:] = c[1:] / (1j * k[1:])
    anti[-1] = 0.0
    P = np.fft.irfft(anti, n=n) + c[0].real / n * (grid.x - grid.x_min)
    P -= P[0]
    return ScalarField(grid, P, "P", rho.time)


def comoving_mass_check(rho_t, rho_t_dt, v, vol, dt):
    """
    int_{V(t+dt)} rho(t+dt) - int_{V(t)} rho(t), where each endpoint of V is
    displaced by v(endpoint, t) dt. Vanishes to first order in dt.
    """
    grid = _same_grid(rho_t, rho_t_dt, v)
    vol.check(grid)
    spline = CubicSpline(grid.x, v.values)
    a2 = vol.a + float(spline(vol.a)) * dt
    b2 = vol.b + float(spline(vol.b)) * dt
    ControlVolume(a2, b2).check(grid)
    before = integrate_interval(rho_t.values, grid, vol.a, vol.b)
    after = integrate_interval(rho_t_dt.values, grid, a2, b2)
    return after - before


def residual_norm(residual, rho, remove_mean=False, cutoff=VALIDITY_CUTOFF):
    """
    rho-weighted L2 norm sqrt(int rho r^2 / int rho) over nodes where rho is
    at least ``cutoff`` times its maximum.

    ``remove_mean`` subtracts the rho-weighted mean first, which fixes the
    free additive (time-dependent) constant of S-based residuals.
    """
    _same_grid(residual, rho)
    w = np.where(rho.values >= cutoff * rho.values.max(), rho.values, 0.0)
    r = residual.values
    wsum = w.sum()
    if remove_mean:
        r = r - np.sum(w * r) / wsum
    return math.sqrt(np.sum(w * r ** 2) / wsum)


# ---------------------------------------------------------------- time series

DEFAULT_COLUMNS = ("t", "msd", "e_kin", "e_total", "hj_residual_norm", "girsanov_residual_norm")


@dataclass
class DiagnosticSeries:
    """Append-only table of per-time records; missing values are NaN."""

    columns: tuple = DEFAULT_COLUMNS
    rows: list = field(default_factory=list)

    @property
    def times(self):
        return [row[0] for row in self.rows]

    def append(self, t, **values):
        if self.rows and not t > self.rows[-1][0]:
            raise ValueError(f"time {t} does not increase past {self.rows[-1][0]}")
        unknown = set(values) - set(self.columns[1:])
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append(tuple([float(t)] + [float(values.get(c, math.nan)) for c in self.columns[1:]]))

    def column(self, name):
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_float(x) for x in row])

    def to_dict(self):
        return {c: [None if math.isnan(x) else x for x in self.column(c)] for c in self.columns}


def format_float(x):
    """Shortest round-trip representation; independent of locale."""
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) for x in row] for row in reader if row]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))
