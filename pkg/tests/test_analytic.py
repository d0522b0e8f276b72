import numpy as np
import pytest
from hypothesis import given, strategies as st

from brownrecoil import analytic, diagnostics
from brownrecoil.errors import NegativeTime, UnsupportedClosedForm
from brownrecoil.fields import (DiffusionParams, Grid, Mode, ScalarField,
                                hj_residual, integrate, q_potential,
                                spectral_derivative)

D, ALPHA = 0.5, 1.0
GRID = Grid(-25.0, 25.0, 2048)
WIDE = Grid(-100.0, 100.0, 8192)
PARAMS = DiffusionParams(D)
FREE_B = analytic.FreeBrownianSolution.from_alpha(D, ALPHA)
FREE_R = analytic.FreeRecoilSolution(D, ALPHA)
HARM = analytic.HarmonicRecoilSolution(D, ALPHA, 2 * D / ALPHA ** 2)


def _continuity(st_):
    """drho/dt + (v rho)' evaluated from the analytic fields, relative to max rho."""
    rho = st_.rho.values
    dlnrho = 2 * st_.dphi_dt.values - st_.dS_dt.values / D
    flux = spectral_derivative(st_.v.values * rho, GRID)
    return np.max(np.abs(dlnrho * rho + flux)) / rho.max()


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 4.0])
@pytest.mark.parametrize("sol,ev", [(FREE_B, analytic.free_brownian_eval),
                                    (FREE_R, analytic.free_recoil_eval),
                                    (HARM, analytic.harmonic_recoil_eval)])
def test_closed_forms_are_normalized_and_satisfy_continuity(sol, ev, t):
    s = ev(sol, t, GRID)
    assert integrate(s.rho.values, GRID) == pytest.approx(1.0, abs=1e-12)
    assert diagnostics.msd(s.rho) == pytest.approx(s.msd, rel=1e-10)
    assert diagnostics.kinetic_energy(s.rho, s.v) == pytest.approx(s.e_kin, abs=1e-12)
    assert _continuity(s) < 1e-9


def test_brownian_msd_is_linear():
    t = np.linspace(0, 3, 7)
    msd = [analytic.free_brownian_eval(FREE_B, ti, GRID).msd for ti in t]
    slope, intercept = np.polyfit(t, msd, 1)
    assert slope == pytest.approx(2 * D)
    assert intercept == pytest.approx(ALPHA ** 2 / 2)


def test_brownian_3d_msd_triples():
    sol = analytic.FreeBrownianSolution(D, 0.5, dim=3)
    assert analytic.free_brownian_eval(sol, 1.0, GRID).msd == pytest.approx(6 * D * 1.5)


def test_brownian_current_is_minus_osmotic():
    s = analytic.free_brownian_eval(FREE_B, 0.7, GRID)
    assert np.allclose(s.b.values, 0.0)
    assert np.allclose(s.v.values, -s.u.values)


def test_recoil_msd_is_quadratic():
    t = np.linspace(0, 3, 7)
    msd = [analytic.free_recoil_eval(FREE_R, ti, GRID).msd for ti in t]
    c2, c1, c0 = np.polyfit(t, msd, 2)
    assert c2 == pytest.approx(2 * D ** 2 / ALPHA ** 2)
    assert abs(c1) < 1e-12
    assert c0 == pytest.approx(ALPHA ** 2 / 2)


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0, 10.0])
def test_recoil_total_energy_is_conserved(t):
    s = analytic.free_recoil_eval(FREE_R, t, WIDE)
    Q = q_potential(s.rho, PARAMS)
    numeric = diagnostics.total_energy(s.rho, s.v, Q, s.Omega, Mode.RECOIL)
    assert s.e_total == D ** 2 / ALPHA ** 2
    assert numeric == pytest.approx(D ** 2 / ALPHA ** 2, rel=1e-9)


def test_recoil_kinetic_energy_increases_to_its_limit():
    e = [analytic.free_recoil_eval(FREE_R, t, GRID).e_kin for t in np.linspace(0, 50, 51)]
    assert np.all(np.diff(e) > 0)
    assert e[-1] < D ** 2 / ALPHA ** 2
    assert e[-1] == pytest.approx(D ** 2 / ALPHA ** 2, rel=1e-3)


def test_recoil_drift_initial_value_and_consistency():
    s = analytic.free_recoil_eval(FREE_R, 0.0, GRID)
    assert np.allclose(s.b.values, -2 * D * GRID.x / ALPHA ** 2)
    for t in (0.0, 0.4, 3.0):
        s = analytic.free_recoil_eval(FREE_R, t, GRID)
        assert np.allclose(analytic.free_recoil_drift(FREE_R, GRID.x, t), s.b.values, atol=1e-13)


@pytest.mark.parametrize("t", [0.2, 1.0, 5.0])
def test_recoil_phase_solves_hamilton_jacobi_with_numeric_q(t):
    s = analytic.free_recoil_eval(FREE_R, t, WIDE)
    res = hj_residual(s.S, s.rho, s.Omega, Mode.RECOIL, s.dS_dt, PARAMS)
    assert diagnostics.residual_norm(res, s.rho) < 1e-8


def test_sign_flipped_arctan_phase_differs_by_time_only_term():
    # the alternative phase S - 2 D arctan(-2Dt/alpha^2) fails the HJ equation only by f(t)
    t = 0.8
    s = analytic.free_recoil_eval(FREE_R, t, GRID)
    A = ALPHA ** 4 + 4 * D ** 2 * t ** 2
    alt_dS = s.dS_dt.values + 2 * D * 2 * D * ALPHA ** 2 / A
    res = hj_residual(s.S, s.rho, s.Omega, Mode.RECOIL, s.dS_dt.with_values(alt_dS), PARAMS)
    assert diagnostics.residual_norm(res, s.rho, remove_mean=True) < 1e-8
    assert diagnostics.residual_norm(res, s.rho) == pytest.approx(4 * D ** 2 * ALPHA ** 2 / A, rel=1e-8)


def test_narrower_exponent_breaks_normalization():
    # exponent alpha^2 x^2 / (alpha^4 + D^2 t^2) with the same prefactor is not a density
    t = 1.0
    A = ALPHA ** 4 + D ** 2 * t ** 2
    rho = ALPHA / np.sqrt(np.pi * (ALPHA ** 4 + 4 * D ** 2 * t ** 2)) * np.exp(-GRID.x ** 2 * ALPHA ** 2 / A)
    assert abs(integrate(rho, GRID) - 1.0) > 0.1


def test_velocity_ratio_at_long_times():
    t = 100.0
    s = analytic.free_recoil_eval(FREE_R, t, GRID)
    slope = np.polyfit(GRID.x, s.v.values, 1)[0]
    assert slope * t == pytest.approx(1.0, rel=1e-3)
    brown = analytic.free_brownian_eval(FREE_B, t, GRID)
    ratio = slope / np.polyfit(GRID.x, brown.v.values, 1)[0]
    assert ratio == pytest.approx(2.0, rel=1e-2)


def test_brownian_total_energy_vanishes_numerically():
    s = analytic.free_brownian_eval(FREE_B, 1.0, GRID)
    Q = q_potential(s.rho, PARAMS)
    assert abs(diagnostics.total_energy(s.rho, s.v, Q, s.Omega, Mode.STANDARD)) < 1e-10


@given(gamma=st.floats(0.2, 5.0), D_=st.floats(0.05, 2.0))
def test_matched_harmonic_is_stationary(gamma, D_):
    sol = analytic.HarmonicRecoilSolution(D_, np.sqrt(2 * D_ / gamma), gamma)
    assert sol.matched
    g = Grid(-30 * sol.alpha, 30 * sol.alpha, 1024)
    a, b = analytic.harmonic_recoil_eval(sol, 0.0, g), analytic.harmonic_recoil_eval(sol, 7.0, g)
    assert np.array_equal(a.rho.values, b.rho.values)
    assert np.allclose(a.dS_dt.values, 0.0, atol=1e-12 * (1 + gamma ** 2 * g.x_max ** 2))
    assert np.allclose(a.dv_dt.values, 0.0, atol=1e-12 * (1 + gamma ** 2 * g.x_max))
    assert a.msd == pytest.approx(D_ / gamma)


def test_unmatched_harmonic_has_no_closed_form():
    sol = analytic.HarmonicRecoilSolution(D, 1.0, 2.0)
    assert not sol.matched
    s0 = analytic.harmonic_recoil_eval(sol, 0.0, GRID)
    assert s0.msd == 0.5
    with pytest.raises(UnsupportedClosedForm):
        analytic.harmonic_recoil_eval(sol, 0.1, GRID)
    with pytest.raises(UnsupportedClosedForm):
        analytic.harmonic_recoil_drift(sol, GRID.x, 0.1)


@pytest.mark.parametrize("ev,sol", [(analytic.free_brownian_eval, FREE_B),
                                    (analytic.free_recoil_eval, FREE_R),
                                    (analytic.harmonic_recoil_eval, HARM)])
def test_negative_time_rejected(ev, sol):
    with pytest.raises(NegativeTime):
        ev(sol, -1e-3, GRID)


def test_fields_carry_time_stamp():
    s = analytic.free_recoil_eval(FREE_R, 1.25, GRID)
    assert s.rho.time == s.v.time == s.S.time == 1.25
    assert isinstance(s.S, ScalarField)
