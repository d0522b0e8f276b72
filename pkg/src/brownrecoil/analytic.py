"""
Closed-form reference solutions used as oracles for the numerical engines.

Three Gaussian examples are covered:

* free Brownian expansion (standard mode, Omega = 0), in 1D or 3D;
* free diffusion with recoil (recoil mode, Omega = 0), 1D;
* harmonic diffusion with recoil, Omega = gamma^2 x^2 / 2 - D gamma, 1D,
  only for the width-matched (stationary) initial density.

All fields are returned on a :class:`~brownrecoil.fields.Grid`, together
with the analytic time derivatives the residual operators need.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NegativeTime, UnsupportedClosedForm
from .fields import ScalarField, VectorField1D


@dataclass(frozen=True)
class FreeBrownianSolution:
    D: float
    t0: float
    dim: int = 1

    def __post_init__(self):
        if not (self.D > 0 and self.t0 > 0):
            raise ValueError("D and t0 must be positive")
        if self.dim not in (1, 3):
            raise ValueError("dim must be 1 or 3")

    @classmethod
    def from_alpha(cls, D, alpha, dim=1):
        """alpha^2 = 4 D t0."""
        return cls(D, alpha ** 2 / (4.0 * D), dim)

    @property
    def alpha(self):
        return np.sqrt(4.0 * self.D * self.t0)


@dataclass(frozen=True)
class FreeRecoilSolution:
    D: float
    alpha: float

    def __post_init__(self):
        if not (self.D > 0 and self.alpha > 0):
            raise ValueError("D and alpha must be positive")


@dataclass(frozen=True)
class HarmonicRecoilSolution:
    D: float
    alpha: float
    gamma: float

    def __post_init__(self):
        if not (self.D > 0 and self.alpha > 0 and self.gamma > 0):
            raise ValueError("D, alpha and gamma must be positive")

    @property
    def matched(self):
        a2 = self.alpha ** 2
        return abs(a2 - 2.0 * self.D / self.gamma) <= 1e-12 * a2

    def omega(self, x):
        return 0.5 * self.gamma ** 2 * np.asarray(x) ** 2 - self.D * self.gamma


@dataclass(frozen=True)
class AnalyticState:
    """Fields and scalar observables of a closed-form solution at one time."""

    t: float
    rho: ScalarField
    v: VectorField1D
    u: VectorField1D
    b: VectorField1D
    S: ScalarField
    Q: ScalarField
    P: ScalarField
    Omega: ScalarField
    phi: ScalarField
    dS_dt: ScalarField
    dv_dt: VectorField1D
    dphi_dt: ScalarField
    msd: float
    e_kin: float
    e_total: float


def _check_time(t):
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")


def _state(grid, t, D, *, lnrho, v, u, S, Q, P, Omega, dS_dt, dv_dt, dlnrho_dt, msd, e_kin, e_total):
    rho = np.exp(lnrho)
    return AnalyticState(
        t=t,
        rho=ScalarField(grid, rho, "rho", t),
        v=VectorField1D(grid, v, "v", t),
        u=VectorField1D(grid, u, "u", t),
        b=VectorField1D(grid, u + v, "b", t),
        S=ScalarField(grid, S, "S", t),
        Q=ScalarField(grid, Q, "Q", t),
        P=ScalarField(grid, P, "P", t),
        Omega=ScalarField(grid, Omega, "Omega", t),
        phi=ScalarField(grid, 0.5 * lnrho + S / (2.0 * D), "phi", t),
        dS_dt=ScalarField(grid, dS_dt, "S", t),
        dv_dt=VectorField1D(grid, dv_dt, "v", t),
        dphi_dt=ScalarField(grid, 0.5 * dlnrho_dt + dS_dt / (2.0 * D), "phi", t),
        msd=msd,
        e_kin=e_kin,
        e_total=e_total,
    )


def free_brownian_eval(sol, t, grid):
    """
    Free Brownian expansion of rho0 = Gaussian with alpha^2 = 4 D t0.

    For ``dim=3`` the fields are the isotropic 3D expressions sampled along a
    coordinate axis and ``msd``/``e_kin`` are the full 3D values; for ``dim=1``
    everything is the per-axis factor. ``e_total`` is int (v^2/2 + Q) rho,
    which vanishes identically.
    """
    _check_time(t)
    D, d = sol.D, sol.dim
    T = t + sol.t0
    x = grid.x
    lnrho = -x ** 2 / (4.0 * D * T) - 0.5 * d * np.log(4.0 * np.pi * D * T)
    rho = np.exp(lnrho)
    v = x / (2.0 * T)
    Q = x ** 2 / (8.0 * T ** 2) - d * D / (2.0 * T)
    S = x ** 2 / (4.0 * T) + 0.5 * d * D * np.log(4.0 * np.pi * D * T)
    return _state(
        grid, t, D,
        lnrho=lnrho, v=v, u=-v, S=S, Q=Q,
        P=-D / (2.0 * T) * rho,
        Omega=np.zeros_like(x),
        dS_dt=-x ** 2 / (4.0 * T ** 2) + 0.5 * d * D / T,
        dv_dt=-x / (2.0 * T ** 2),
        dlnrho_dt=x ** 2 / (4.0 * D * T ** 2) - d / (2.0 * T),
        msd=2.0 * d * D * T,
        e_kin=d * D / (4.0 * T),
        e_total=0.0,
    )


def free_recoil_eval(sol, t, grid):
    """
    Free diffusion with recoil in 1D, started from the same Gaussian with v(x, 0) = 0.

    ``e_total`` is int (v^2/2 - Q) rho = D^2 / alpha^2 for all t.
    """
    _check_time(t)
    D, a = sol.D, sol.alpha
    a2, a4 = a ** 2, a ** 4
    A = a4 + 4.0 * D ** 2 * t ** 2
    dA = 8.0 * D ** 2 * t
    x = grid.x
    lnrho = np.log(a / np.sqrt(np.pi * A)) - x ** 2 * a2 / A
    rho = np.exp(lnrho)
    v = 4.0 * D ** 2 * t * x / A
    u = -2.0 * D * a2 * x / A
    S = 2.0 * D ** 2 * x ** 2 * t / A + D * np.arctan(-2.0 * D * t / a2)
    Q = 2.0 * D ** 2 * a2 / A * (a2 * x ** 2 / A - 1.0)
    return _state(
        grid, t, D,
        lnrho=lnrho, v=v, u=u, S=S, Q=Q,
        P=-2.0 * D ** 2 * a2 / A * rho,
        Omega=np.zeros_like(x),
        dS_dt=2.0 * D ** 2 * x ** 2 * (a4 - 4.0 * D ** 2 * t ** 2) / A ** 2 - 2.0 * D ** 2 * a2 / A,
        dv_dt=4.0 * D ** 2 * x * (a4 - 4.0 * D ** 2 * t ** 2) / A ** 2,
        dlnrho_dt=-0.5 * dA / A + x ** 2 * a2 * dA / A ** 2,
        msd=a2 / 2.0 + 2.0 * D ** 2 * t ** 2 / a2,
        e_kin=4.0 * D ** 4 * t ** 2 / (a2 * A),
        e_total=D ** 2 / a2,
    )


def free_recoil_drift(sol, x, t):
    """Pointwise forward drift b(x, t) of the free recoil process."""
    D, a2 = sol.D, sol.alpha ** 2
    return 2.0 * D * (2.0 * D * t - a2) * np.asarray(x) / (a2 ** 2 + 4.0 * D ** 2 * t ** 2)


def harmonic_recoil_eval(sol, t, grid):
    """
    Harmonic recoil process started from rho0 = Gaussian(alpha).

    Only the width-matched case alpha^2 = 2D/gamma has a closed form for
    t > 0 (the density is stationary and b = u = -2Dx/alpha^2). Otherwise
    :class:`UnsupportedClosedForm` is raised; t = 0 is always available.
    """
    _check_time(t)
    if t > 0 and not sol.matched:
        raise UnsupportedClosedForm(
            f"alpha^2 = {sol.alpha ** 2} != 2D/gamma = {2 * sol.D / sol.gamma}; "
            "use the Schrodinger engine")
    D, a2 = sol.D, sol.alpha ** 2
    x = grid.x
    lnrho = -x ** 2 / a2 - 0.5 * np.log(np.pi * a2)
    rho = np.exp(lnrho)
    u = -2.0 * D * x / a2
    zero = np.zeros_like(x)
    Q = 2.0 * D ** 2 * x ** 2 / a2 ** 2 - 2.0 * D ** 2 / a2
    Omega = sol.omega(x)
    return _state(
        grid, t, D,
        lnrho=lnrho, v=zero, u=u, S=zero, Q=Q,
        P=-2.0 * D ** 2 / a2 * rho,
        Omega=Omega,
        # recoil HJ with S = 0, v = 0; identically zero when matched
        dS_dt=Q - Omega,
        dv_dt=4.0 * D ** 2 * x / a2 ** 2 - sol.gamma ** 2 * x,
        dlnrho_dt=zero,
        msd=a2 / 2.0,
        e_kin=0.0,
        e_total=float(np.sum((Omega - Q) * rho) * grid.spacing),
    )


def harmonic_recoil_drift(sol, x, t):
    """b(x, t) = -2Dx/alpha^2 for the matched harmonic recoil process."""
    if t > 0 and not sol.matched:
        raise UnsupportedClosedForm("drift known only for the matched harmonic case")
    return -2.0 * sol.D * np.asarray(x) / sol.alpha ** 2
