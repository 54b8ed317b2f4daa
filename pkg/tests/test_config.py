import pytest

from vrslicing.config import SCHEMA, ScenarioConfig, load_config, parse_config
from vrslicing.errors import ConfigError


def test_defaults():
    cfg = ScenarioConfig()
    assert cfg.network.alpha == 4.0 and cfg.network.c == 2.0
    assert cfg.jnd.eta2_floor == 0.9 and cfg.jnd.theta == 1e-2
    assert cfg["targets.r1"] == 1e-5
    assert cfg.mc.n_samples == 200_000 and cfg["sweep.points"] == 50
    assert set(dict(cfg.items())) == set(SCHEMA)


def test_dotted_and_table_forms_agree():
    a = parse_config("network.alpha = 3.5\nmc.seed = 9\n")
    b = parse_config("[network]\nalpha = 3.5\n[mc]\nseed = 9\n")
    assert a.values == b.values
    assert a.network.alpha == 3.5 and a.mc.seed == 9


def test_integer_accepted_for_float_key():
    assert parse_config("network.alpha = 3").network.alpha == 3.0


def test_numeric_c_mode_is_explicit_constant():
    cfg = parse_config("network.c_mode = 2.2")
    assert cfg.network.c == 2.2 and cfg["network.c_mode"] == "explicit"


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"line 2, key 'network.alpah': unknown key"):
        parse_config("mc.seed = 1\nnetwork.alpah = 4.0\n", "x.toml")


def test_type_error_reports_line():
    with pytest.raises(ConfigError, match=r"line 3, key 'mc.samples': expected int"):
        parse_config("\n\nmc.samples = 'lots'\n")
    with pytest.raises(ConfigError, match="expected float"):
        parse_config("targets.theta = true\n")


def test_syntax_error():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("network.alpha = = 4\n")


@pytest.mark.parametrize("text, key", [
    ("network.alpha = 2.0", "network.alpha"),
    ("targets.theta = -1.0", "targets.theta"),
    ("targets.r1 = 0.0", "targets.r1"),
    ("mc.truncation_radius_factor = 3.0", "mc.samples"),
    ("solver.coverage_model = 'guess'", "solver.coverage_model"),
    ("sweep.r1_min = 1.0", "sweep.r1_min"),
    ("sweep.thetas = [0.1, -2]", "sweep.thetas"),
])
def test_value_errors_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(text + "\n")


def test_override_validates():
    cfg = ScenarioConfig().override(mc__seed=42)
    assert cfg.mc.seed == 42
    with pytest.raises(ConfigError):
        ScenarioConfig().override(mc__nope=1)
    with pytest.raises(ConfigError):
        ScenarioConfig().override(mc__samples=0)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.toml")
    assert load_config(None).values == ScenarioConfig().values
