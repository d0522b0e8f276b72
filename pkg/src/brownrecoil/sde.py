"""
Euler-Maruyama ensembles for dX = b(X, t) dt + sqrt(2D) dW.

Randomness is counter-based: the Gaussian increment of particle ``i`` at step
``s`` is a fixed function of ``(master_seed, s, i)``, computed from the Philox
bijection with key ``(master_seed, s)`` and counter ``i // 4`` (each Philox
block yields four 64-bit words). Any partition of the particles into chunks,
executed in any order on any number of threads, therefore produces the same
bits.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from . import analytic
from .errors import (CoverageTooLow, DriftDomainExceeded, TooFewParticles)
from .fields import ScalarField

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
#: stream index reserved for initial-condition sampling; dynamics use steps 1, 2, ...
INIT_STREAM = 0
#: Philox block size in 64-bit words; chunk boundaries must be multiples of it
BLOCK = 4


def counter_uniforms(seed, stream, start, count):
    """Uniform (0, 1) variates number ``start .. start + count - 1`` of stream ``(seed, stream)``."""
    first_block, offset = divmod(start, BLOCK)
    bg = np.random.Philox(key=np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64),
                          counter=np.array([first_block, 0, 0, 0], dtype=np.uint64))
    raw = bg.random_raw(offset + count)[offset:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def counter_normals(seed, stream, start, count):
    return ndtri(counter_uniforms(seed, stream, start, count))


@dataclass(frozen=True)
class Ensemble:
    positions: np.ndarray
    time: float = 0.0
    master_seed: int = 0
    step: int = 0

    def __post_init__(self):
        arr = np.array(self.positions, dtype=float, copy=True).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "positions", arr)

    @property
    def n_particles(self):
        return self.positions.size


def gaussian_ensemble(n_particles, variance, seed, mean=0.0):
    """N(mean, variance) initial positions drawn from the reserved initial stream."""
    xi = counter_normals(seed, INIT_STREAM, 0, n_particles)
    return Ensemble(mean + np.sqrt(variance) * xi, 0.0, seed, 0)


def sample_density(rho, n_particles, seed):
    """Inverse-CDF sample of a grid density (piecewise-linear CDF between nodes)."""
    grid = rho.grid
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho.values[1:] + rho.values[:-1]))))
    cdf /= cdf[-1]
    u = counter_uniforms(seed, INIT_STREAM, 0, n_particles)
    return Ensemble(np.interp(u, cdf, grid.x), 0.0, seed, 0)


# ---------------------------------------------------------------- drifts

class SmoluchowskiDrift:
    """b = F(x) / (m beta) for a time-independent force."""

    def __init__(self, force, m=1.0, beta=1.0):
        self.force = force
        self.mb = m * beta

    def __call__(self, x, t):
        return np.asarray(self.force(x), dtype=float) / self.mb

    def outside(self, x, t):
        return np.zeros(x.shape, dtype=bool)


class AnalyticRecoilDrift:
    """Closed-form recoil drift from :mod:`brownrecoil.analytic`."""

    def __init__(self, solution):
        if isinstance(solution, analytic.FreeRecoilSolution):
            self._b = analytic.free_recoil_drift
        elif isinstance(solution, analytic.HarmonicRecoilSolution):
            self._b = analytic.harmonic_recoil_drift
        else:
            raise TypeError(f"no analytic recoil drift for {type(solution).__name__}")
        self.solution = solution

    def __call__(self, x, t):
        return self._b(self.solution, x, t)

    def outside(self, x, t):
        return np.zeros(x.shape, dtype=bool)


class GridDrift:
    """
    Drift tabulated on a grid at increasing times; linear in x and t.

    Outside the grid the drift is extrapolated linearly from the two edge
    nodes (with a logged warning).
    """

    def __init__(self, times, fields):
        times = np.asarray(times, dtype=float)
        if len(times) != len(fields) or len(times) == 0:
            raise ValueError("need one drift field per time")
        if np.any(np.diff(times) <= 0):
            raise ValueError("drift snapshot times must be strictly increasing")
        self.times = times
        self.grid = fields[0].grid
        self.table = np.array([f.values for f in fields])
        self._warned = False

    def _at(self, x, row):
        g = self.grid.x
        b = np.interp(x, g, row)
        lo, hi = x < g[0], x > g[-1]
        if lo.any() or hi.any():
            if not self._warned:
                log.warning("drift extrapolated outside the grid for %d particles",
                            int(lo.sum() + hi.sum()))
                self._warned = True
            h = self.grid.spacing
            b[lo] = row[0] + (x[lo] - g[0]) * (row[1] - row[0]) / h
            b[hi] = row[-1] + (x[hi] - g[-1]) * (row[-1] - row[-2]) / h
        return b

    def __call__(self, x, t):
        times = self.times
        if len(times) == 1 or t <= times[0]:
            return self._at(x, self.table[0])
        if t >= times[-1]:
            return self._at(x, self.table[-1])
        j = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[j]) / (times[j + 1] - times[j])
        return (1 - w) * self._at(x, self.table[j]) + w * self._at(x, self.table[j + 1])

    def outside(self, x, t):
        return (x < self.grid.x[0]) | (x > self.grid.x[-1])

    def covers(self, t0, t1):
        return self.times[0] <= t0 + 1e-12 and t1 <= self.times[-1] + 1e-12


# ---------------------------------------------------------------- simulation

def _chunks(n, size):
    size = max(BLOCK, size - size % BLOCK)
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def simulate(ens0, drift, params, dt, t_end, record_every=None, workers=1, chunk_size=65536):
    """
    Euler-Maruyama from ``ens0.time`` to ``t_end``.

    Returns ensemble snapshots: the initial one, every ``record_every`` steps,
    and the final one. Bitwise independent of ``workers`` and ``chunk_size``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = int(round((t_end - ens0.time) / dt))
    if n_steps < 0 or abs(ens0.time + n_steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end - t0 = {t_end - ens0.time} is not a multiple of dt = {dt}")
    if isinstance(drift, GridDrift) and not drift.covers(ens0.time, t_end):
        raise ValueError("tabulated drift does not cover the simulated interval")
    x = np.array(ens0.positions)
    n = x.size
    sigma = np.sqrt(2.0 * params.D * dt)
    seed = ens0.master_seed
    chunks = _chunks(n, chunk_size)
    snapshots = [ens0]

    def advance(bounds, t, stream):
        lo, hi = bounds
        xi = counter_normals(seed, stream, lo, hi - lo)
        xs = x[lo:hi]
        x[lo:hi] = xs + drift(xs, t) * dt + sigma * xi

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for k in range(1, n_steps + 1):
            step = ens0.step + k
            t = ens0.time + (k - 1) * dt
            if pool is None:
                for c in chunks:
                    advance(c, t, step)
            else:
                list(pool.map(lambda c: advance(c, t, step), chunks))
            t_new = ens0.time + k * dt
            n_out = int(np.count_nonzero(drift.outside(x, t_new)))
            if n_out > 1e-3 * n:
                raise DriftDomainExceeded(
                    f"{n_out} of {n} particles outside the drift domain at t = {t_new:.6g}")
            if k == n_steps or (record_every and k % record_every == 0):
                snapshots.append(replace(ens0, positions=x, time=t_new, step=step))
    finally:
        if pool is not None:
            pool.shutdown()
    return snapshots


# ---------------------------------------------------------------- estimators

@dataclass(frozen=True)
class Moments:
    mean: float
    msd: float
    se_mean: float
    se_msd: float


def estimate_moments(ens):
    """Sample mean and second moment about 0, with plug-in standard errors."""
    x = ens.positions
    n = x.size
    if n < 2:
        raise TooFewParticles(f"need at least 2 particles, have {n}")
    x2 = x * x
    return Moments(
        mean=float(x.mean()),
        msd=float(x2.mean()),
        se_mean=float(x.std(ddof=1) / np.sqrt(n)),
        se_msd=float(x2.std(ddof=1) / np.sqrt(n)),
    )


def density_histogram(ens, grid, min_coverage=0.999):
    """Histogram with one bin per grid node (centered on it), normalized to unit integral."""
    h = grid.spacing
    idx = np.floor((ens.positions - grid.x_min) / h + 0.5).astype(np.int64)
    inside = (idx >= 0) & (idx < grid.n_points)
    coverage = inside.mean() if ens.n_particles else 0.0
    if coverage < min_coverage:
        raise CoverageTooLow(f"grid covers {coverage:.4%} of particles, need {min_coverage:.1%}")
    counts = np.bincount(idx[inside], minlength=grid.n_points).astype(float)
    return ScalarField(grid, counts / (counts.sum() * h), "rho", ens.time)


def fit_polynomial_msd(times, msds, degree):
    """Least-squares polynomial coefficients (highest power first)."""
    return np.polyfit(np.asarray(times, float), np.asarray(msds, float), degree)


def batch_msd_fit(snapshots, degree, n_batches=20):
    """
    Polynomial fit of msd(t) per particle batch.

    Returns the coefficients fitted on the whole ensemble and their standard
    errors from the spread across ``n_batches`` disjoint batches (batch means
    account for the correlation between times along one trajectory).
    """
    times = [s.time for s in snapshots]
    full = fit_polynomial_msd(times, [np.mean(s.positions ** 2) for s in snapshots], degree)
    n = snapshots[0].n_particles
    edges = np.linspace(0, n, n_batches + 1).astype(int)
    per_batch = np.array([
        fit_polynomial_msd(times, [np.mean(s.positions[lo:hi] ** 2) for s in snapshots], degree)
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    se = per_batch.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return full, se
