"""
Time evolution of the density.

Two engines:

* :class:`SplitStepSchrodinger` integrates i dpsi/dt = -D psi'' + (Omega / 2D) psi
  with Strang splitting. psi = sqrt(rho) exp(i S / 2D) carries the recoil
  dynamics (continuity + recoil Hamilton-Jacobi equation).
* :class:`FokkerPlanckETD` integrates drho/dt = -(b rho)' + D rho'' for the
  standard mode: exact exponential for diffusion, second-order exponential
  Runge-Kutta (Cox-Matthews ETD2RK) for the spectral advection term.

Both are plain steppers; :func:`evolve_schrodinger` and
:func:`evolve_fokker_planck` wrap them and collect snapshots.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import (GridMismatch, NonPositiveDensity, PhaseUnwrapFailure,
                     StabilityViolation)
from .fields import (DENSITY_FLOOR, DiffusionParams, Grid, ScalarField,
                     VectorField1D, density, integrate, osmotic_velocity,
                     spectral_derivative)

#: relative |psi|^2 level above which phase jumps are checked during unwrapping
UNWRAP_FLOOR = 1e-10


@dataclass(frozen=True)
class WaveField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        arr = np.array(self.values, dtype=complex, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if arr.shape != (self.grid.n_points,):
            raise ValueError("wave field length does not match its grid")

    @property
    def norm(self):
        return integrate(np.abs(self.values) ** 2, self.grid)


Potential = Union[ScalarField, Callable[[float], np.ndarray], None]
Drift = Union[VectorField1D, Callable[[float], np.ndarray], None]


@dataclass(frozen=True)
class EvolutionSpec:
    dt: float
    n_steps: int
    params: DiffusionParams
    potential: Potential = None
    stride: Optional[int] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")

    @property
    def snapshot_stride(self):
        if self.stride is not None:
            return max(1, int(self.stride))
        return max(1, self.n_steps // 100)


# ---------------------------------------------------------------- Madelung

def madelung_compose(rho, S, params):
    """psi = sqrt(rho) exp(i S / 2D), normalized to unit L2 norm."""
    if rho.grid != S.grid:
        raise GridMismatch("rho and S on different grids")
    if rho.label != "rho" or not np.max(rho.values) > 0:
        raise NonPositiveDensity("madelung_compose needs a positive density")
    psi = np.sqrt(rho.values) * np.exp(1j * S.values / (2.0 * params.D))
    norm = np.sqrt(integrate(np.abs(psi) ** 2, rho.grid))
    return WaveField(rho.grid, psi / norm, rho.time)


@dataclass(frozen=True)
class MadelungFields:
    rho: ScalarField
    S: ScalarField
    v: VectorField1D
    u: VectorField1D


def unwrapped_phase(psi):
    """
    Phase of psi unwrapped outward from the density peak.

    The peak node keeps its principal value, so the result does not depend on
    noise in the far tails.
    """
    values = psi.values
    dens = np.abs(values) ** 2
    significant = dens > UNWRAP_FLOOR * dens.max()
    raw = np.angle(values)
    jumps = np.abs(np.angle(values[1:] * np.conj(values[:-1])))
    bad = (jumps > np.pi / 2) & significant[1:] & significant[:-1]
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PhaseUnwrapFailure(
            f"phase jump {jumps[i]:.3f} rad near x = {psi.grid.x[i]:.4g}: node or unresolved phase")
    peak = int(np.argmax(dens))
    phase = np.empty_like(raw)
    phase[peak:] = np.unwrap(raw[peak:])
    phase[:peak + 1] = np.unwrap(raw[peak::-1])[::-1]
    return phase


def madelung_decompose(psi, params):
    """
    Split psi into rho = |psi|^2, S = 2D arg(psi), v = dS/dx and u = D d/dx ln rho.

    ``v`` is computed from the spectral current 2D Im(conj(psi) psi') / |psi|^2,
    not by differencing the unwrapped phase.
    """
    D = params.D
    grid = psi.grid
    values = psi.values
    dens = np.abs(values) ** 2
    S = 2.0 * D * unwrapped_phase(psi)
    dens_floor = np.maximum(dens, DENSITY_FLOOR * dens.max())
    dpsi = spectral_derivative(values, grid)
    v = 2.0 * D * np.imag(np.conj(values) * dpsi) / dens_floor
    rho = ScalarField(grid, dens, "rho", psi.time)
    return MadelungFields(
        rho=rho,
        S=ScalarField(grid, S, "S", psi.time),
        v=VectorField1D(grid, v, "v", psi.time),
        u=osmotic_velocity(rho, params),
    )


def phase_time_derivative(psi_before, psi_after, params):
    """Centered dS/dt from two snapshots straddling the time of interest."""
    span = psi_after.time - psi_before.time
    dtheta = np.angle(psi_after.values * np.conj(psi_before.values))
    return ScalarField(psi_before.grid, 2.0 * params.D * dtheta / span, "S",
                       0.5 * (psi_before.time + psi_after.time))


# ---------------------------------------------------------------- Schrodinger

def _sample(source, grid, t):
    if source is None:
        return np.zeros(grid.n_points)
    if callable(source):
        return np.asarray(source(t), dtype=float)
    if source.grid != grid:
        raise GridMismatch("field sampled on a different grid")
    return source.values


class SplitStepSchrodinger:
    """
    Strang split-step stepper for i dpsi/dt = -D psi'' + (Omega / 2D) psi.

    Half potential kick, exact kinetic step exp(-i D k^2 dt) in Fourier space,
    half potential kick. Unitary, so the norm is preserved to roundoff.
    """

    def __init__(self, psi0, dt, params, potential=None):
        self.grid = psi0.grid
        self.dt = dt
        self.params = params
        self.potential = potential
        self.t_start = self.time = psi0.time
        self.steps_taken = 0
        self.psi = np.array(psi0.values, dtype=complex)
        self._kinetic = np.exp(-1j * params.D * self.grid.k ** 2 * dt)
        self._static = not callable(potential)
        if self._static:
            self._half_kick = self._kick(self.time)

    def _kick(self, t):
        omega = _sample(self.potential, self.grid, t)
        phase = omega / (2.0 * self.params.D) * (0.5 * self.dt)
        worst = np.max(np.abs(phase)) if phase.size else 0.0
        if worst > np.pi:
            raise StabilityViolation(
                f"potential phase per half step reaches {worst:.3f} rad > pi; reduce dt")
        return np.exp(-1j * phase)

    def step(self):
        t0 = self.time
        first = self._half_kick if self._static else self._kick(t0)
        second = self._half_kick if self._static else self._kick(t0 + self.dt)
        psi = np.fft.ifft(np.fft.fft(self.psi * first) * self._kinetic) * second
        self.psi = psi
        self.steps_taken += 1
        self.time = self.t_start + self.steps_taken * self.dt

    def state(self):
        return WaveField(self.grid, self.psi, self.time)


def evolve_schrodinger(psi0, spec):
    """Run ``spec.n_steps`` split steps, returning snapshots every ``spec.snapshot_stride`` steps.

    The initial state and the final state are always included.
    """
    if abs(psi0.norm - 1.0) > 1e-6:
        raise ValueError(f"psi0 is not normalized (norm = {psi0.norm})")
    stepper = SplitStepSchrodinger(psi0, spec.dt, spec.params, spec.potential)
    stride = spec.snapshot_stride
    snapshots = [stepper.state()]
    for n in range(1, spec.n_steps + 1):
        stepper.step()
        if n % stride == 0 or n == spec.n_steps:
            snapshots.append(stepper.state())
    return snapshots


# ---------------------------------------------------------------- Fokker-Planck

def _phi_functions(z):
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, series near z = 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        em1 = np.expm1(zs)
        phi1 = np.where(small, 0.0, em1 / zs)
        phi2 = np.where(small, 0.0, (em1 - zs) / zs ** 2)
    zz = z[small]
    phi1[small] = 1 + zz / 2 + zz ** 2 / 6 + zz ** 3 / 24 + zz ** 4 / 120
    phi2[small] = 0.5 + zz / 6 + zz ** 2 / 24 + zz ** 3 / 120 + zz ** 4 / 720
    return phi1, phi2


class FokkerPlanckETD:
    """
    drho/dt = D rho'' - (b rho)' on the periodic grid.

    The diffusion part is integrated exactly in Fourier space; the advective
    flux is treated with ETD2RK. The zero Fourier mode is never touched, so
    mass is conserved to roundoff, and any discrete stationary state of the
    semi-discrete equation is a fixed point of the stepper.
    """

    def __init__(self, rho0, drift, dt, params):
        self.grid = rho0.grid
        self.dt = dt
        self.params = params
        self.drift = drift
        self.t_start = self.time = rho0.time
        self.steps_taken = 0
        self._hat = np.fft.rfft(rho0.values)
        self._ik = 1j * self.grid.k_rfft
        self._ik[-1] = 0.0
        z = -params.D * self.grid.k_rfft ** 2 * dt
        self._E = np.exp(z)
        self._phi1, self._phi2 = _phi_functions(z)

    def _check_cfl(self, b):
        bmax = np.max(np.abs(b)) if b.size else 0.0
        limit = self.grid.spacing / np.pi
        if bmax * self.dt > limit:
            raise StabilityViolation(
                f"advective bound dt * max|b| <= spacing/pi violated "
                f"({bmax * self.dt:.3e} > {limit:.3e})")

    def _rhs(self, hat, t):
        b = _sample(self.drift, self.grid, t)
        self._check_cfl(b)
        rho = np.fft.irfft(hat, n=self.grid.n_points)
        return -self._ik * np.fft.rfft(b * rho)

    def step(self):
        h, t = self.dt, self.time
        n0 = self._rhs(self._hat, t)
        a = self._E * self._hat + h * self._phi1 * n0
        n1 = self._rhs(a, t + h)
        self._hat = a + h * self._phi2 * (n1 - n0)
        self.steps_taken += 1
        self.time = self.t_start + self.steps_taken * h

    def state(self):
        rho = np.fft.irfft(self._hat, n=self.grid.n_points)
        # roundoff-level negatives in the tails
        return ScalarField(self.grid, np.maximum(rho, 0.0), "rho", self.time)

    def mass(self):
        return float(self._hat[0].real * self.grid.spacing)


def evolve_fokker_planck(rho0, b, spec):
    """Integrate the standard-mode Fokker-Planck equation, returning density snapshots."""
    mass = integrate(rho0.values, rho0.grid)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"rho0 is not normalized (mass = {mass})")
    stepper = FokkerPlanckETD(rho0, b, spec.dt, spec.params)
    stride = spec.snapshot_stride
    snapshots = [stepper.state()]
    for n in range(1, spec.n_steps + 1):
        stepper.step()
        if n % stride == 0 or n == spec.n_steps:
            snapshots.append(stepper.state())
    return snapshots


def stationary_density(b, params):
    """rho proportional to exp(int b / D), the zero-current state of a gradient drift."""
    grid = b.grid
    cum = cumulative_simpson(b.values / params.D, dx=grid.spacing, initial=0.0)
    logp = cum - cum.max()
    return density(grid, np.exp(logp))
