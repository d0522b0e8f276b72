import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brownrecoil import analytic
from brownrecoil.diagnostics import (ControlVolume, DiagnosticSeries, comoving_mass_check,
                                     kinetic_energy, mass, momentum_rate, msd,
                                     pressure_field, read_csv, residual_norm,
                                     total_energy)
from brownrecoil.errors import GridMismatch, VolumeOutsideGrid
from brownrecoil.fields import DiffusionParams, Grid, Mode, ScalarField, q_potential

D = 0.5
PARAMS = DiffusionParams(D)
GRID = Grid(-25.0, 25.0, 2048)
RECOIL = analytic.FreeRecoilSolution(D, 1.0)
BROWN = analytic.FreeBrownianSolution.from_alpha(D, 1.0)


def test_mass_and_msd_of_closed_form():
    s = analytic.free_brownian_eval(BROWN, 0.5, GRID)
    assert mass(s.rho) == pytest.approx(1.0, abs=1e-13)
    assert msd(s.rho) == pytest.approx(2 * D * 1.0)


def test_energies_of_free_recoil():
    s = analytic.free_recoil_eval(RECOIL, 1.0, GRID)
    Q = q_potential(s.rho, PARAMS)
    assert kinetic_energy(s.rho, s.v) == pytest.approx(0.125)
    assert total_energy(s.rho, s.v, Q, s.Omega, Mode.RECOIL) == pytest.approx(0.25, rel=1e-10)
    # the standard-mode bookkeeping flips the sign of the potential terms
    std = total_energy(s.rho, s.v, Q, s.Omega, Mode.STANDARD)
    assert std == pytest.approx(2 * 0.125 - 0.25, rel=1e-9)


@pytest.mark.parametrize("half_width", [25.0, 50.0])
def test_brownian_total_vanishes_on_wider_grids(half_width):
    g = Grid(-half_width, half_width, int(2048 * half_width / 25))
    s = analytic.free_brownian_eval(BROWN, 1.0, g)
    Q = q_potential(s.rho, PARAMS)
    assert abs(total_energy(s.rho, s.v, Q, s.Omega, Mode.STANDARD)) < 1e-10


def test_pressure_matches_closed_form():
    s = analytic.free_recoil_eval(RECOIL, 0.7, GRID)
    P = pressure_field(s.rho, q_potential(s.rho, PARAMS))
    ref = s.P.values - s.P.values[0]
    assert np.max(np.abs(P.values - ref)) < 1e-10


@given(a=st.floats(-4.0, 1.0), width=st.floats(0.2, 4.0))
def test_momentum_rate_is_pressure_difference(a, width):
    s = analytic.free_recoil_eval(RECOIL, 0.7, GRID)
    Q = q_potential(s.rho, PARAMS)
    vol = ControlVolume(a, a + width)
    # with Omega = 0: int rho (Omega - Q)' = -[P]
    rate = momentum_rate(s.rho, Q, s.Omega, vol, Mode.STANDARD)
    A = 1 + 4 * D ** 2 * 0.49
    rho_at = lambda x: np.exp(-x ** 2 / A) / np.sqrt(np.pi * A)
    P_exact = lambda x: -2 * D ** 2 / A * rho_at(x)
    assert rate == pytest.approx(-(P_exact(vol.b) - P_exact(vol.a)), abs=1e-10)
    assert momentum_rate(s.rho, Q, s.Omega, vol, Mode.RECOIL) == -rate


def test_volume_outside_grid():
    s = analytic.free_recoil_eval(RECOIL, 0.0, GRID)
    with pytest.raises(VolumeOutsideGrid):
        momentum_rate(s.rho, s.Q, s.Omega, ControlVolume(-30.0, 0.0))
    with pytest.raises(ValueError):
        ControlVolume(1.0, 1.0)


def test_comoving_mass_defect_is_second_order():
    vol = ControlVolume(-0.5, 1.5)
    defects = []
    for dt in (0.04, 0.02, 0.01):
        a = analytic.free_brownian_eval(BROWN, 1.0, GRID)
        b = analytic.free_brownian_eval(BROWN, 1.0 + dt, GRID)
        defects.append(abs(comoving_mass_check(a.rho, b.rho, a.v, vol, dt)))
    orders = np.log2(np.array(defects[:-1]) / np.array(defects[1:]))
    assert np.all(orders > 1.9), orders
    assert defects[-1] < 1e-4


def test_residual_norm_weights_and_mean_removal():
    s = analytic.free_recoil_eval(RECOIL, 0.0, GRID)
    const = ScalarField(GRID, np.full(GRID.n_points, 3.0), "residual")
    assert residual_norm(const, s.rho) == pytest.approx(3.0)
    assert residual_norm(const, s.rho, remove_mean=True) < 1e-14
    # nodes below the validity cutoff are ignored
    spiky = const.with_values(np.where(s.rho.values < 1e-12, 1e6, 0.0))
    assert residual_norm(spiky, s.rho) == 0.0


def test_residual_norm_grid_check():
    s = analytic.free_recoil_eval(RECOIL, 0.0, GRID)
    other = Grid(-10.0, 10.0, 2048)
    with pytest.raises(GridMismatch):
        residual_norm(ScalarField(other, np.zeros(2048), "residual"), s.rho)


def test_series_csv_round_trip(tmp_path):
    ser = DiagnosticSeries()
    ser.append(0.0, msd=0.5, e_kin=0.1)
    ser.append(0.1, msd=0.6, e_kin=1 / 3, e_total=0.25)
    path = tmp_path / "s.csv"
    ser.to_csv(path)
    header, data = read_csv(path)
    assert tuple(header) == ser.columns
    assert data[1, 2] == 1 / 3
    assert math.isnan(data[0, 3])
    assert "nan" in path.read_text()
    assert ser.to_dict()["e_total"] == [None, 0.25]


def test_series_rejects_non_increasing_time_and_unknown_columns():
    ser = DiagnosticSeries()
    ser.append(1.0, msd=1.0)
    with pytest.raises(ValueError):
        ser.append(1.0, msd=1.0)
    with pytest.raises(KeyError):
        ser.append(2.0, bogus=1.0)
