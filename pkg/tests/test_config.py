import pytest

from thermodamage import presets
from thermodamage.config import (DataSpec, RunConfig, apply_overrides, dumps, flatten, load_config, loads,
                                 parse_value)

MINIMAL = """
scheme = "reversible"
mesh.dim = 1
mesh.n = 16
schedule.T = 0.01
schedule.tau = 0.001
"""


def test_minimal_config_loads():
    cfg = loads(MINIMAL)
    assert cfg.mesh.n == 16
    assert cfg.schedule.tau == 0.001
    assert cfg.material.W == "indicator01"


def test_missing_required_key():
    with pytest.raises(ValueError, match="missing required"):
        loads("scheme = \"reversible\"\nmesh.dim = 1\n")


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown"):
        loads(MINIMAL + "material.not_a_key = 3\n")


def test_duplicate_key_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        loads(MINIMAL + "mesh.n = 8\n")


def test_irreversible_with_log_potential_rejected():
    text = MINIMAL.replace('"reversible"', '"irreversible"') + 'material.mu = 1\nmaterial.W = "log"\n'
    with pytest.raises(ValueError, match="indicator"):
        loads(text)


@pytest.mark.parametrize("override,needle", [
    ("scheme=irreversible", "mu = 1"),
    ("material.rho=0.5", "thermal expansion"),
    ("scheme=reversible_expansion", "power"),
    ("schedule.tau=0.003", "not an integer"),
    ("experiment.kind=continuous_dependence", "isothermal"),
    ("tolerances.damping=0", "damping"),
])
def test_compatibility_rules(override, needle):
    with pytest.raises(ValueError, match=needle):
        apply_overrides(loads(MINIMAL), [override])


@pytest.mark.parametrize("cfg", [
    presets.reference("reversible"), presets.reference("irreversible", dim=2, n=8),
    presets.reference("reversible_expansion"), presets.complete_damage(), presets.continuous_dependence(),
])
def test_round_trip(cfg):
    text = dumps(cfg)
    back = loads(text)
    assert flatten(back) == flatten(cfg)
    assert dumps(back) == text
    assert back.hash() == cfg.hash()


def test_load_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL + "# comment\ndata.g.kind = gaussian  # trailing\ndata.g.amplitude = 2.0\n")
    cfg = load_config(path)
    assert cfg.data.g.kind == "gaussian"
    assert cfg.data.g.amplitude == 2.0


def test_parse_value():
    assert parse_value("true") is True
    assert parse_value("[1, 2.5]") == [1, 2.5]
    assert parse_value("gaussian") == "gaussian"
    assert parse_value('"a # b"') == "a # b"


def test_copy_is_deep():
    cfg = presets.reference("reversible")
    other = cfg.copy()
    other.material.gamma_coeffs.append(3.0)
    assert cfg.material.gamma_coeffs == [0.0, -1.0]


def test_data_spec_time_factors(mesh1d):
    ramp = DataSpec(kind="constant", amplitude=2.0, ramp=0.5)
    assert ramp.evaluate(0.25, mesh1d)[0] == pytest.approx(1.0)
    steps = DataSpec(kind="constant", amplitude=1.0, times=[0.0, 0.1], values=[3.0, -1.0])
    assert steps.evaluate(0.05, mesh1d)[0] == 3.0
    assert steps.evaluate(0.2, mesh1d)[0] == -1.0
    assert steps.breakpoints() == [0.0, 0.1]


def test_sine_bump_vanishes_on_boundary(mesh2d):
    vals = DataSpec(kind="sine_bump", amplitude=[1.0, 2.0]).evaluate(0.0, mesh2d, 2)
    assert abs(vals[mesh2d.boundary]).max() < 1e-15


def test_random_data_reproducible(mesh1d):
    spec = DataSpec(kind="random", amplitude=1.0, seed=7)
    assert (spec.evaluate(0.0, mesh1d) == spec.evaluate(0.3, mesh1d)).all()


def test_bad_data_spec():
    cfg = RunConfig()
    cfg.data.f = DataSpec(kind="triangle")
    with pytest.raises(ValueError, match="kind"):
        cfg.validate()
