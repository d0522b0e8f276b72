import pytest

from brownrecoil.errors import ParseError
from brownrecoil.fields import Mode
from brownrecoil.scenario import bundled, load_scenario, parse_override


def _write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


BASE = """
name = "t"
mode = "standard"
seed = 1
engines = ["analytic", "fokker_planck"]
[params]
D = 0.5
[potential]
kind = "free"
[initial]
kind = "gaussian"
alpha = 1.0
[grid]
x_min = -10.0
x_max = 10.0
n_points = 256
[time]
dt = 0.01
t_end = 1.0
records = 5
"""


def test_bundled_scenarios_load():
    names = bundled()
    assert {"free_brownian", "free_recoil", "harmonic_recoil_matched", "harmonic_smoluchowski"} <= set(names)
    for name in names:
        sc = load_scenario(f"builtin:{name}")
        assert sc.name == name


def test_defaults_and_record_times(tmp_path):
    sc = load_scenario(_write(tmp_path, BASE))
    assert sc.mode is Mode.STANDARD
    assert sc.params.m == 1.0 and sc.params.beta == 1.0
    assert list(sc.record_times) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert sc.steps_per_record == 25
    assert sc.sde is None


def test_overrides_change_digest(tmp_path):
    p = _write(tmp_path, BASE)
    a, b = load_scenario(p), load_scenario(p, ["params.D=0.25"])
    assert b.params.D == 0.25
    assert a.digest() != b.digest()
    assert load_scenario(p).digest() == a.digest()


@pytest.mark.parametrize("text,value", [
    ("1.5", 1.5),
    ("3", 3),
    ("'s'", "s"),
    ("word", "word"),
    ("[1, 2]", [1, 2]),
    ("true", True),
])
def test_override_values(text, value):
    assert parse_override(f"a.b={text}") == ("a.b", value)


def test_override_needs_equals():
    with pytest.raises(ParseError):
        parse_override("params.D")


@pytest.mark.parametrize("override,fragment", [
    ("params.D=-1.0", "params"),
    ("params.D='fast'", "params.D"),
    ("grid.n_points=100", "grid"),
    ("mode='sideways'", "mode"),
    ("engines=['warp']", "engines"),
    ("potential.kind='cubic'", "potential.kind"),
    ("time.dt=0.03", "time"),
    ("bogus=1", "bogus"),
    ("outputs=['nope']", "outputs"),
    ("initial.kind='file'", "initial.path"),
])
def test_invalid_values_name_the_key(tmp_path, override, fragment):
    with pytest.raises(ParseError, match=fragment.replace(".", r"\.")):
        load_scenario(_write(tmp_path, BASE), [override])


def test_missing_section(tmp_path):
    text = BASE.replace("[params]\nD = 0.5\n", "")
    with pytest.raises(ParseError, match=r"\[params\]"):
        load_scenario(_write(tmp_path, text))


def test_engine_mode_compatibility(tmp_path):
    p = _write(tmp_path, BASE)
    with pytest.raises(ParseError, match="fokker_planck"):
        load_scenario(p, ["mode='recoil'"])
    with pytest.raises(ParseError, match="schrodinger"):
        load_scenario(p, ["engines=['schrodinger']"])


def test_malformed_toml(tmp_path):
    with pytest.raises(ParseError):
        load_scenario(_write(tmp_path, "name = "))


def test_missing_file():
    with pytest.raises(ParseError, match="not found"):
        load_scenario("builtin:does_not_exist")


def test_initial_density_from_file(tmp_path):
    (tmp_path / "rho0.csv").write_text("x,rho\n-1,0\n0,1\n1,0\n")
    text = BASE.replace('kind = "gaussian"\nalpha = 1.0', 'kind = "file"\npath = "rho0.csv"')
    sc = load_scenario(_write(tmp_path, text))
    assert sc.initial.path == tmp_path / "rho0.csv"
