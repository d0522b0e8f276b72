"""
Declarative experiment description.

Scenarios are TOML documents (sections + typed key/value pairs). Example::

    name = "free_recoil"
    mode = "recoil"
    seed = 12345
    engines = ["analytic", "schrodinger", "sde"]

    [params]
    D = 0.5

    [potential]
    kind = "free"          # "harmonic" (gamma) or "smoluchowski_force" (coefficients)

    [initial]
    kind = "gaussian"      # or "file" with path = "rho0.csv" (columns x, rho)
    alpha = 1.0

    [grid]
    x_min = -25.0
    x_max = 25.0
    n_points = 2048

    [time]
    dt = 0.002
    t_end = 2.0
    records = 11

    [sde]
    n_particles = 100000
"""
import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from .errors import ParseError
from .fields import DiffusionParams, Grid, Mode

ENGINES = ("analytic", "schrodinger", "fokker_planck", "sde")
ALL_OUTPUTS = ("msd", "e_kin", "e_total", "hj_residual_norm", "girsanov_residual_norm")
BUNDLED_DIR = Path(__file__).parent / "scenarios"


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    gamma: float = 0.0
    coefficients: tuple = ()

    def force(self, params):
        """F(x) as a vectorized callable."""
        mb = params.m * params.beta
        if self.kind == "free":
            return lambda x: np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "harmonic":
            g = self.gamma
            return lambda x: -mb * g * np.asarray(x, dtype=float)
        coeffs = self.coefficients[::-1]
        return lambda x: np.polyval(coeffs, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    alpha: float = 1.0
    center: float = 0.0
    path: Optional[Path] = None


@dataclass(frozen=True)
class SdeSpec:
    n_particles: int
    dt: float
    workers: int = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: Mode
    seed: int
    engines: tuple
    params: DiffusionParams
    potential: PotentialSpec
    initial: InitialSpec
    grid: Grid
    dt: float
    t_end: float
    records: int
    sde: Optional[SdeSpec]
    outputs: tuple
    volume: Optional[tuple]
    raw: dict

    @property
    def record_times(self):
        return np.linspace(0.0, self.t_end, self.records)

    @property
    def steps_per_record(self):
        return int(round(self.t_end / (self.records - 1) / self.dt)) if self.records > 1 else 0

    def digest(self):
        """sha256 of the canonical JSON of the resolved scenario."""
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def resolve_path(spec):
    """Scenario path, or ``builtin:<name>`` for a bundled scenario."""
    spec = str(spec)
    if spec.startswith("builtin:"):
        path = BUNDLED_DIR / f"{spec.split(':', 1)[1]}.toml"
    else:
        path = Path(spec)
    if not path.is_file():
        raise ParseError(f"scenario file not found: {spec}")
    return path


def bundled():
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.toml"))


def parse_override(text):
    """``section.key=value`` with a TOML literal value (bare words fall back to strings)."""
    if "=" not in text:
        raise ParseError(f"override {text!r} is not of the form key=value")
    key, value = (s.strip() for s in text.split("=", 1))
    try:
        parsed = tomli.loads(f"v = {value}")["v"]
    except tomli.TOMLDecodeError:
        parsed = value
    return key, parsed


def apply_overrides(raw, overrides):
    raw = copy.deepcopy(raw)
    for text in overrides:
        key, value = parse_override(text)
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ParseError(f"override {key!r}: {part!r} is not a section")
        node[parts[-1]] = value
    return raw


def load_scenario(spec, overrides=()):
    path = resolve_path(spec)
    try:
        raw = tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return build_scenario(apply_overrides(raw, overrides), base_dir=path.parent)


def _get(table, key, kind, section, default=...):
    where = f"{section}.{key}" if section else key
    if key not in table:
        if default is ...:
            raise ParseError(f"missing key '{where}'")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ParseError(f"key '{where}': expected {kind.__name__}, got {value!r}")
    return value


def _section(raw, name, required=True):
    if name not in raw:
        if required:
            raise ParseError(f"missing section [{name}]")
        return None
    if not isinstance(raw[name], dict):
        raise ParseError(f"'{name}' must be a section")
    return raw[name]


def build_scenario(raw, base_dir=Path(".")):
    known = {"name", "mode", "seed", "engines", "outputs", "params", "potential",
             "initial", "grid", "time", "sde", "diagnostics"}
    unknown = set(raw) - known
    if unknown:
        raise ParseError(f"unknown key(s) {sorted(unknown)}")

    name = _get(raw, "name", str, "")
    try:
        mode = Mode(_get(raw, "mode", str, ""))
    except ValueError:
        raise ParseError(f"key 'mode': expected 'standard' or 'recoil', got {raw['mode']!r}") from None
    seed = _get(raw, "seed", int, "", 0)
    if seed < 0:
        raise ParseError("key 'seed' must be non-negative")
    engines = tuple(_get(raw, "engines", list, ""))
    for e in engines:
        if e not in ENGINES:
            raise ParseError(f"key 'engines': unknown engine {e!r}")
    outputs = tuple(_get(raw, "outputs", list, "", list(ALL_OUTPUTS)))
    for o in outputs:
        if o not in ALL_OUTPUTS:
            raise ParseError(f"key 'outputs': unknown diagnostic {o!r}")

    p = _section(raw, "params")
    try:
        params = DiffusionParams(_get(p, "D", float, "params"),
                                 _get(p, "m", float, "params", 1.0),
                                 _get(p, "beta", float, "params", 1.0))
    except ValueError as exc:
        raise ParseError(f"section [params]: {exc}") from None

    pot = _section(raw, "potential")
    kind = _get(pot, "kind", str, "potential")
    if kind == "free":
        potential = PotentialSpec("free")
    elif kind == "harmonic":
        gamma = _get(pot, "gamma", float, "potential")
        if not gamma > 0:
            raise ParseError("key 'potential.gamma' must be positive")
        potential = PotentialSpec("harmonic", gamma=gamma)
    elif kind == "smoluchowski_force":
        coeffs = _get(pot, "coefficients", list, "potential")
        if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
            raise ParseError("key 'potential.coefficients' must be a list of numbers")
        potential = PotentialSpec("smoluchowski_force", coefficients=tuple(float(c) for c in coeffs))
    else:
        raise ParseError(f"key 'potential.kind': unknown potential {kind!r}")

    ini = _section(raw, "initial")
    kind = _get(ini, "kind", str, "initial")
    if kind == "gaussian":
        alpha = _get(ini, "alpha", float, "initial")
        if not alpha > 0:
            raise ParseError("key 'initial.alpha' must be positive")
        initial = InitialSpec("gaussian", alpha=alpha, center=_get(ini, "center", float, "initial", 0.0))
    elif kind == "file":
        path = Path(_get(ini, "path", str, "initial"))
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ParseError(f"key 'initial.path': file not found: {path}")
        initial = InitialSpec("file", path=path)
    else:
        raise ParseError(f"key 'initial.kind': unknown initial data {kind!r}")

    g = _section(raw, "grid")
    try:
        grid = Grid(_get(g, "x_min", float, "grid"), _get(g, "x_max", float, "grid"),
                    _get(g, "n_points", int, "grid"))
    except ValueError as exc:
        raise ParseError(f"section [grid]: {exc}") from None

    tm = _section(raw, "time")
    dt = _get(tm, "dt", float, "time")
    t_end = _get(tm, "t_end", float, "time")
    records = _get(tm, "records", int, "time", 11)
    if not (dt > 0 and t_end > 0 and records >= 2):
        raise ParseError("section [time]: need dt > 0, t_end > 0, records >= 2")
    per_record = t_end / (records - 1) / dt
    if abs(per_record - round(per_record)) > 1e-9 or round(per_record) < 1:
        raise ParseError("section [time]: record spacing t_end/(records-1) must be a multiple of dt")

    sde = None
    if "sde" in engines:
        s = _section(raw, "sde")
        sde = SdeSpec(_get(s, "n_particles", int, "sde"),
                      _get(s, "dt", float, "sde", dt),
                      _get(s, "workers", int, "sde", 1))
        ratio = t_end / (records - 1) / sde.dt
        if sde.n_particles < 2 or abs(ratio - round(ratio)) > 1e-9:
            raise ParseError("section [sde]: need n_particles >= 2 and record spacing a multiple of sde.dt")

    volume = None
    diag = _section(raw, "diagnostics", required=False)
    if diag is not None:
        vol = _get(diag, "volume", list, "diagnostics", None)
        if vol is not None:
            if len(vol) != 2 or not vol[0] < vol[1]:
                raise ParseError("key 'diagnostics.volume' must be [a, b] with a < b")
            volume = (float(vol[0]), float(vol[1]))

    if mode is Mode.RECOIL and "fokker_planck" in engines:
        raise ParseError("key 'engines': fokker_planck solves the standard mode only")
    if mode is Mode.STANDARD and "schrodinger" in engines:
        raise ParseError("key 'engines': schrodinger linearizes the recoil mode only")

    return Scenario(name=name, mode=mode, seed=seed, engines=engines, params=params,
                    potential=potential, initial=initial, grid=grid, dt=dt, t_end=t_end,
                    records=records, sde=sde, outputs=outputs, volume=volume, raw=raw)
