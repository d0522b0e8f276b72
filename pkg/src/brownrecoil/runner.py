"""Engine dispatch for scenario runs, and run-to-run comparison."""
import json
import logging
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, analytic, diagnostics, sde
from .errors import (ColumnMissing, DiffusionError, EngineError, TimeAxisMismatch)
from .evolve import (FokkerPlanckETD, SplitStepSchrodinger, madelung_compose,
                     madelung_decompose, phase_time_derivative)
from .fields import (Mode, ScalarField, VectorField1D, central_derivative,
                     density, floored, girsanov_residual, gaussian_density,
                     hj_residual, omega_recoil, omega_smoluchowski,
                     q_potential)
from .scenario import load_scenario

log = logging.getLogger(__name__)

#: relative tolerance of the b = 2D grad(phi) consistency check inside engines
GRADIENT_TOL = 1e-3


# ---------------------------------------------------------------- set-up

def initial_density(sc):
    if sc.initial.kind == "gaussian":
        return gaussian_density(sc.grid, sc.initial.alpha, sc.initial.center)
    data = np.loadtxt(sc.initial.path, delimiter=",", skiprows=1, ndmin=2)
    values = np.interp(sc.grid.x, data[:, 0], data[:, 1], left=0.0, right=0.0)
    return density(sc.grid, np.maximum(values, 0.0))


def force_field(sc):
    F = sc.potential.force(sc.params)(sc.grid.x)
    return VectorField1D(sc.grid, F, "F")


def omega_field(sc):
    return omega_smoluchowski(force_field(sc), sc.params)


def smoluchowski_drift(sc):
    mb = sc.params.m * sc.params.beta
    return VectorField1D(sc.grid, force_field(sc).values / mb, "b")


def closed_form(sc):
    """The analytic solution matching the scenario, or None."""
    ini, pot, D = sc.initial, sc.potential, sc.params.D
    if ini.kind != "gaussian" or ini.center != 0.0:
        return None
    if pot.kind == "free":
        if sc.mode is Mode.STANDARD:
            return analytic.FreeBrownianSolution.from_alpha(D, ini.alpha)
        return analytic.FreeRecoilSolution(D, ini.alpha)
    if pot.kind == "harmonic":
        sol = analytic.HarmonicRecoilSolution(D, ini.alpha, pot.gamma)
        # the matched state is stationary in both modes
        return sol if sol.matched else None
    return None


def _evaluate(sol, t, grid):
    if isinstance(sol, analytic.FreeBrownianSolution):
        return analytic.free_brownian_eval(sol, t, grid)
    if isinstance(sol, analytic.FreeRecoilSolution):
        return analytic.free_recoil_eval(sol, t, grid)
    return analytic.harmonic_recoil_eval(sol, t, grid)


def _girsanov_target(mode, Q, Omega):
    return omega_recoil(Q, Omega) if mode is Mode.RECOIL else Omega


def _validity_mask(rho):
    return rho.values >= diagnostics.VALIDITY_CUTOFF * rho.values.max()


# ---------------------------------------------------------------- engines

def run_analytic(sc):
    sol = closed_form(sc)
    if sol is None:
        raise EngineError("analytic", "no closed form for this potential/initial data")
    series = diagnostics.DiagnosticSeries()
    for t in sc.record_times:
        st = _evaluate(sol, t, sc.grid)
        hj = hj_residual(st.S, st.rho, st.Omega, sc.mode, st.dS_dt, sc.params)
        target = _girsanov_target(sc.mode, st.Q, st.Omega)
        gr = girsanov_residual(st.phi, st.b, target, st.dphi_dt, sc.params,
                               tol=GRADIENT_TOL, mask=_validity_mask(st.rho))
        series.append(t, msd=st.msd, e_kin=st.e_kin, e_total=st.e_total,
                      hj_residual_norm=diagnostics.residual_norm(hj, st.rho),
                      girsanov_residual_norm=diagnostics.residual_norm(gr, st.rho))
    return series, {}


def _record_from_density(sc, rho, u, v, S, dS_dt, dlnrho_dt, Omega, remove_mean):
    """Common diagnostics for numerically evolved (rho, v, S) snapshots."""
    params, grid = sc.params, sc.grid
    Q = q_potential(rho, params)
    lnrho = np.log(floored(rho.values))
    b = VectorField1D(grid, u + v.values, "b", rho.time)
    phi = ScalarField(grid, 0.5 * lnrho + S.values / (2.0 * params.D), "phi", rho.time)
    dphi = ScalarField(grid, 0.5 * dlnrho_dt + dS_dt.values / (2.0 * params.D), "phi", rho.time)
    hj = hj_residual(S, rho, Omega, sc.mode, dS_dt, params)
    gr = girsanov_residual(phi, b, _girsanov_target(sc.mode, Q, Omega), dphi, params,
                           tol=GRADIENT_TOL, mask=_validity_mask(rho))
    return dict(
        msd=diagnostics.msd(rho),
        e_kin=diagnostics.kinetic_energy(rho, v),
        e_total=diagnostics.total_energy(rho, v, Q, Omega, sc.mode),
        hj_residual_norm=diagnostics.residual_norm(hj, rho, remove_mean=remove_mean),
        girsanov_residual_norm=diagnostics.residual_norm(gr, rho, remove_mean=remove_mean),
    )


def run_schrodinger(sc, drift_every=None):
    """
    Split-step run. Returns the diagnostic series and, if ``drift_every`` is
    set, the forward drift b = u + v tabulated every that many steps.
    """
    params, grid, dt = sc.params, sc.grid, sc.dt
    Omega = omega_field(sc)
    rho0 = initial_density(sc)
    psi0 = madelung_compose(rho0, ScalarField(grid, np.zeros(grid.n_points), "S"), params)
    # one exactly-reversed Strang step gives psi(-dt) for the centered derivative at t = 0
    back = SplitStepSchrodinger(psi0, -dt, params, Omega)
    back.step()
    stepper = SplitStepSchrodinger(psi0, dt, params, Omega)
    per_record = sc.steps_per_record
    n_total = per_record * (sc.records - 1)
    series = diagnostics.DiagnosticSeries()
    drift_times, drift_fields = [], []

    prev, cur = back.state(), psi0
    for n in range(n_total + 1):
        stepper.step()
        nxt = stepper.state()
        if n % per_record == 0 or (drift_every and (n % drift_every == 0 or n == n_total)):
            mf = madelung_decompose(cur, params)
            if n % per_record == 0:
                dS = phase_time_derivative(prev, nxt, params)
                dln = (np.log(floored(np.abs(nxt.values) ** 2))
                       - np.log(floored(np.abs(prev.values) ** 2))) / (2.0 * dt)
                series.append(cur.time, **_record_from_density(
                    sc, mf.rho, mf.u.values, mf.v, mf.S, dS, dln, Omega, remove_mean=False))
            if drift_every and (n % drift_every == 0 or n == n_total):
                drift_times.append(cur.time)
                drift_fields.append(VectorField1D(grid, mf.u.values + mf.v.values, "b", cur.time))
        prev, cur = cur, nxt
    drift = sde.GridDrift(drift_times, drift_fields) if drift_every else None
    return series, {"drift": drift}


def run_fokker_planck(sc):
    params, grid, dt = sc.params, sc.grid, sc.dt
    b = smoluchowski_drift(sc)
    Omega = omega_field(sc)
    stepper = FokkerPlanckETD(initial_density(sc), b, dt, params)
    per_record = sc.steps_per_record
    n_total = per_record * (sc.records - 1)
    series = diagnostics.DiagnosticSeries()

    def split(rho):
        lnrho = np.log(floored(rho.values))
        u = params.D * central_derivative(lnrho, grid)
        v = VectorField1D(grid, b.values - u, "v", rho.time)
        # S = integral of v anchored at the density peak; its free constant is removed in the norms
        S = np.concatenate(([0.0], np.cumsum(0.5 * (v.values[1:] + v.values[:-1]) * grid.spacing)))
        S -= S[int(np.argmax(rho.values))]
        return u, v, S, lnrho

    def emit(rho, parts, center, weights):
        u, v, S, _ = parts[center]
        dS = sum(w * p[2] for w, p in zip(weights, parts)) / (2.0 * dt)
        dln = sum(w * p[3] for w, p in zip(weights, parts)) / (2.0 * dt)
        series.append(rho.time, **_record_from_density(
            sc, rho, u, v, ScalarField(grid, S, "S", rho.time),
            ScalarField(grid, dS, "S", rho.time), dln, Omega, remove_mean=True))

    hist = [stepper.state()]
    for n in range(1, n_total + 2):
        stepper.step()
        hist = (hist + [stepper.state()])[-3:]
        if n == 2:
            # one-sided second-order derivative at t = 0
            emit(hist[0], [split(h) for h in hist], 0, (-3.0, 4.0, -1.0))
        if n >= 2 and (n - 1) % per_record == 0:
            emit(hist[1], [split(h) for h in hist], 1, (-1.0, 0.0, 1.0))
    return series, {"mass_final": stepper.mass()}


def run_sde(sc, recoil_drift=None):
    spec = sc.sde
    rho0 = initial_density(sc)
    if sc.initial.kind == "gaussian":
        ens = sde.gaussian_ensemble(spec.n_particles, sc.initial.alpha ** 2 / 2.0, sc.seed,
                                    sc.initial.center)
    else:
        ens = sde.sample_density(rho0, spec.n_particles, sc.seed)
    if sc.mode is Mode.STANDARD:
        drift = sde.SmoluchowskiDrift(sc.potential.force(sc.params), sc.params.m, sc.params.beta)
    else:
        sol = closed_form(sc)
        if sol is not None:
            drift = sde.AnalyticRecoilDrift(sol)
        elif recoil_drift is not None:
            drift = recoil_drift
        else:
            raise EngineError("sde", "recoil drift needs a closed form or the schrodinger engine")
    every = int(round(sc.t_end / (sc.records - 1) / spec.dt))
    snaps = sde.simulate(ens, drift, sc.params, spec.dt, sc.t_end, record_every=every,
                         workers=spec.workers)
    series = diagnostics.DiagnosticSeries()
    se = []
    for t, s in zip(sc.record_times, snaps):
        m = sde.estimate_moments(s)
        series.append(t, msd=m.msd)
        se.append(m.se_msd)
    return series, {"se_msd": se}


# ---------------------------------------------------------------- run / compare

@dataclass
class RunManifest:
    scenario: str
    scenario_hash: str
    software_version: str
    seed: int
    overrides: list
    started_utc: str
    wall_clock_seconds: float
    outputs: list

    def to_json(self):
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _run_engine(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except EngineError:
        raise
    except DiffusionError as exc:
        raise EngineError(name, f"{type(exc).__name__}: {exc}") from exc


def run(scenario_path, output_dir, overrides=()):
    """Execute every engine of a scenario and write CSV, summary and manifest files."""
    started = datetime.now(timezone.utc)
    clock = time.perf_counter()
    sc = load_scenario(scenario_path, overrides)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    recoil_drift = None
    if "schrodinger" in sc.engines:
        need_drift = "sde" in sc.engines and closed_form(sc) is None
        every = max(1, int(round(sc.t_end / 200 / sc.dt))) if need_drift else None
        results["schrodinger"] = _run_engine("schrodinger", run_schrodinger, sc, drift_every=every)
        recoil_drift = results["schrodinger"][1].pop("drift")
    for name in sc.engines:
        if name == "analytic":
            results[name] = _run_engine(name, run_analytic, sc)
        elif name == "fokker_planck":
            results[name] = _run_engine(name, run_fokker_planck, sc)
        elif name == "sde":
            results[name] = _run_engine(name, run_sde, sc, recoil_drift)

    columns = ("t",) + tuple(sc.outputs)
    written = []
    summary = {"scenario": sc.name, "mode": sc.mode.value, "engines": {}}
    for name in sc.engines:
        series, extra = results[name]
        table = diagnostics.DiagnosticSeries(columns)
        for row in series.rows:
            table.append(row[0], **{c: row[series.columns.index(c)] for c in columns[1:]})
        path = out / f"{sc.name}_{name}.csv"
        table.to_csv(path)
        written.append(path.name)
        final = {c: (None if math.isnan(v) else v) for c, v in zip(columns, table.rows[-1])}
        summary["engines"][name] = {"final": final, **extra}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    written.append("summary.json")

    manifest = RunManifest(
        scenario=sc.name,
        scenario_hash=sc.digest(),
        software_version=__version__,
        seed=sc.seed,
        overrides=list(overrides),
        started_utc=started.isoformat(timespec="seconds"),
        wall_clock_seconds=round(time.perf_counter() - clock, 3),
        outputs=written + ["manifest.json"],
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def _resolve_csv(path, engine=None):
    path = Path(path)
    if path.is_file():
        return path
    pattern = f"*_{engine}.csv" if engine else "*.csv"
    found = sorted(path.glob(pattern))
    if len(found) != 1:
        raise ColumnMissing(f"{path}: expected exactly one CSV matching {pattern}, found {len(found)}")
    return found[0]


@dataclass
class CompareReport:
    column: str
    tolerance: float
    relative: bool
    rows: list

    @property
    def passed(self):
        key = 4 if self.relative else 3
        return all(r[key] <= self.tolerance for r in self.rows)

    def format(self):
        lines = [f"{'t':>12} {'a':>16} {'b':>16} {'abs_diff':>12} {'rel_diff':>12}"]
        for t, a, b, d, r in self.rows:
            lines.append(f"{t:12.6g} {a:16.10g} {b:16.10g} {d:12.4e} {r:12.4e}")
        kind = "relative" if self.relative else "absolute"
        lines.append(f"{'PASS' if self.passed else 'FAIL'}: {self.column} within {kind} "
                     f"tolerance {self.tolerance:g}")
        return "\n".join(lines)


def compare(run_a, run_b, column, tolerance, relative=False, engine_a=None, engine_b=None):
    """Per-time differences of one column between two runs (directories or CSV files)."""
    ha, da = diagnostics.read_csv(_resolve_csv(run_a, engine_a))
    hb, db = diagnostics.read_csv(_resolve_csv(run_b, engine_b))
    for header, src in ((ha, run_a), (hb, run_b)):
        if column not in header:
            raise ColumnMissing(f"column {column!r} not in {src}")
        if "t" not in header:
            raise ColumnMissing(f"time column 't' not in {src}")
    ta, tb = da[:, ha.index("t")], db[:, hb.index("t")]
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=1e-12, atol=1e-12):
        raise TimeAxisMismatch(f"time axes differ ({len(ta)} vs {len(tb)} rows)")
    a, b = da[:, ha.index(column)], db[:, hb.index(column)]
    if np.isnan(a).all() or np.isnan(b).all():
        raise ColumnMissing(f"column {column!r} is unavailable in one of the runs")
    rows = []
    for t, x, y in zip(ta, a, b):
        d = abs(x - y)
        rel = d / max(abs(x), abs(y)) if max(abs(x), abs(y)) > 0 else 0.0
        if math.isnan(d):
            d = rel = math.inf
        rows.append((float(t), float(x), float(y), float(d), float(rel)))
    return CompareReport(column, tolerance, relative, rows)
