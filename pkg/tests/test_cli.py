import csv
import io
import math
from pathlib import Path

import pytest

from vrslicing import analytic
from vrslicing.analytic import NetworkParams
from vrslicing.cli import COMMANDS, main

GOLDEN = Path(__file__).parent / "golden"

FAST = """
mc.samples = 4000
sweep.points = 6
coverage.points = 7
sweep.r1_values = [1e-5, 1e-4]
sweep.theta_min = 1e-4
sweep.theta_max = 2e-2
"""


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.toml"
    path.write_text(FAST)
    return str(path)


def run(args, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, (out.read_text() if out.exists() else "")


def table(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


@pytest.mark.parametrize("command", list(COMMANDS))
def test_schema_matches_golden(command, fast_config, tmp_path):
    code, text = run([command, "--config", fast_config], tmp_path)
    assert code == 0
    lines = text.splitlines()
    schema = next(line for line in lines if line.startswith("# schema="))
    header = next(line for line in lines if not line.startswith("#"))
    assert f"{schema}\n{header}\n" == (GOLDEN / f"{command}.header").read_text()


def test_provenance_header(fast_config, tmp_path):
    _, text = run(["coverage", "--config", fast_config, "--seed", "77"], tmp_path)
    assert text.startswith("# vrslicing ")
    assert "# rng=numpy.PCG64" in text
    assert "# config mc.seed = 77\n" in text
    assert "# config network.alpha = 4.0\n" in text


def test_coverage_rows(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("coverage.t_min = 0.01\ncoverage.t_max = 100.0\ncoverage.points = 5\nmc.samples = 20000\n")
    code, text = run(["coverage", "--config", str(cfg)], tmp_path)
    rows = table(text)
    assert code == 0 and len(rows) == 5
    unit = next(r for r in rows if float(r["t"]) == 1.0)
    assert round(float(unit["exact"]), 6) == 0.560099
    for r in rows:
        assert float(r["bound_upper_c"]) <= float(r["exact"]) <= float(r["bound_lower_c"])
        assert r["seed"] == "1"


def test_empty_coverage_grid_is_header_only(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("coverage.points = 0\n")
    code, text = run(["coverage", "--config", str(cfg)], tmp_path)
    assert code == 0 and table(text) == []
    assert text.splitlines()[-1].startswith("t,bound_lower_c")


def test_optimize_defaults(tmp_path):
    code, text = run(["optimize"], tmp_path)
    rows = {(r["scheme"], r["search"]): r for r in table(text)}
    assert code == 0
    assert float(rows["oma", "closed_form"]["rate2"]) == pytest.approx(0.0997113, rel=1e-6)
    assert float(rows["noma", "closed_form"]["rate2"]) == pytest.approx(0.0898, abs=1e-4)
    r = rows["oma", "grid"]
    assert float(r["rate2_bits"]) == pytest.approx(float(r["rate2"]) / math.log(2))


def test_scheme_flag(tmp_path):
    _, text = run(["optimize", "--scheme", "noma"], tmp_path)
    assert {r["scheme"] for r in table(text)} == {"noma"}


def test_sweep_eta2_shape(fast_config, tmp_path):
    _, text = run(["sweep-eta2", "--config", fast_config], tmp_path)
    rows = table(text)
    assert {(r["scheme"], r["theta"]) for r in rows} == {(s, t) for s in ("oma", "noma") for t in ("0.0001", "0.01")}
    assert len(rows) == 4 * 6


def test_sweep_r1_columns(fast_config, tmp_path):
    _, text = run(["sweep-r1", "--config", fast_config], tmp_path)
    rows = table(text)
    feasible = [r for r in rows if r["rate2"]]
    assert feasible
    for r in feasible:
        assert float(r["rate2_grid_search"]) >= float(r["rate2_closed_form"]) * (1 - 1e-12)
        assert (r["rate2_power_order_sic"] == "") == (r["scheme"] == "oma")


def test_sweep_theta_has_monotone_crossovers(fast_config, tmp_path):
    _, text = run(["sweep-theta", "--config", fast_config], tmp_path)
    cross = [r for r in table(text) if r["kind"] == "crossover"]
    stars = [float(r["theta_star"]) for r in cross]
    assert len(stars) == 2 and stars[0] < stars[1]


def test_crossover_command(fast_config, tmp_path):
    code, text = run(["crossover", "--config", fast_config], tmp_path)
    rows = table(text)
    assert code == 0 and [r["status"] for r in rows] == ["ok", "ok"]


def test_simulate_matches_analytic(fast_config, tmp_path):
    _, text = run(["simulate", "--config", fast_config, "--samples", "50000"], tmp_path)
    for r in table(text):
        assert abs(float(r["rate2_mc"]) - float(r["rate2_analytic"])) <= float(r["rate2_half_width"])


def test_validate_default_exit_zero(tmp_path):
    code, text = run(["validate"], tmp_path)
    rows = table(text)
    assert code == 0
    assert all(r["within_ci"] == "true" and r["ci_too_wide"] == "false" for r in rows)
    assert {r["check"] for r in rows} >= {"coverage", "oma_success", "noma_p2_joint", "noma_rate"}


def test_validate_tiny_sample_flags_width(tmp_path, capsys):
    code, text = run(["validate", "--samples", "50"], tmp_path)
    assert code == 0
    assert all(r["ci_too_wide"] == "true" for r in table(text))
    assert "too wide" in capsys.readouterr().err


def test_validate_failure_exit_three(tmp_path, monkeypatch):
    # push one analytic reference far outside its interval
    import vrslicing.cli as cli

    real = cli.validation_checks

    def skewed(cfg):
        checks = real(cfg)
        name, case, value, est = checks[0]
        return [(name, case, value + 0.5, est)] + checks[1:]

    monkeypatch.setattr(cli, "validation_checks", skewed)
    code, text = run(["validate", "--samples", "50000"], tmp_path)
    assert code == 3 and table(text)[0]["within_ci"] == "false"


def test_validate_is_byte_identical(fast_config, tmp_path):
    _, a = run(["validate", "--config", fast_config], tmp_path, "a.csv")
    _, b = run(["validate", "--config", fast_config], tmp_path, "b.csv")
    assert a == b


def test_bad_config_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("network.alpha = 4.0\nmc.samples = 'many'\n")
    code, _ = run(["validate", "--config", str(bad)], tmp_path)
    assert code == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_config_exit_two(tmp_path):
    code, _ = run(["optimize", "--config", str(tmp_path / "nope.toml")], tmp_path)
    assert code == 2


def test_infeasible_exit_one(tmp_path, capsys):
    cfg = tmp_path / "inf.toml"
    cfg.write_text("targets.r1 = 0.1\n")
    code, _ = run(["optimize", "--config", str(cfg)], tmp_path)
    assert code == 1 and "infeasible" in capsys.readouterr().err


def test_unwritable_output_exit_two(tmp_path):
    code = main(["optimize", "--out", str(tmp_path / "missing-dir" / "x.csv")])
    assert code == 2


def test_stdout_default(capsys):
    assert main(["optimize", "--scheme", "oma"]) == 0
    assert "scheme,search" in capsys.readouterr().out


def test_cli_coverage_exact_column_uses_library(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("network.alpha = 3.0\ncoverage.points = 3\nmc.samples = 2000\n")
    _, text = run(["coverage", "--config", str(cfg)], tmp_path)
    for r in table(text):
        assert float(r["exact"]) == float(analytic.coverage_exact(NetworkParams(3.0), float(r["t"])))
