import os

import pytest

from rispls import cli, montecarlo
from rispls.errors import ConfigError

SWEEP = """
[sweep]
parameter = "p_db"
values = [0.0, 10.0]
metric = "op"
methods = ["approx", "mc"]

[mc]
trials = 20000
seed = 11
"""


def test_defaults_round_trip():
    cfg = cli.config_from_dict({})
    again = cli.parse_config_text(cli.emit_config(cfg))
    assert again == cfg
    assert cfg.scenario.K == 4 and cfg.scenario.M == 2 and cfg.scenario.L == 36
    assert cfg.scenario.pattern_user.g_main == pytest.approx(1000.0)


def test_partial_config_keeps_other_defaults():
    cfg = cli.parse_config_text("[system]\nK = 3\nM = 1\n[fading.eve]\nm = 2.0\n")
    assert (cfg.scenario.K, cfg.scenario.M) == (3, 1)
    assert cfg.scenario.fading_eve.m == 2.0 and cfg.scenario.fading_eve.m_s == 3.0


@pytest.mark.parametrize("text,needle", [
    ("[system]\nK = 3\nM = 2\n", "system"),
    ("[fading.user]\nm_s = 1.0\n", "fading.user"),
    ("[system]\nbogus = 1\n", "bogus"),
    ("[system]\nK = \"four\"\n", "K"),
    ("[system\n", "parse"),
])
def test_bad_configs_name_the_field(text, needle):
    with pytest.raises(ConfigError, match=needle):
        cli.parse_config_text(text)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        cli.SweepSpec("p_db", (), "op", ("approx",))
    with pytest.raises(ConfigError):
        cli.SweepSpec("p_db", (0.0,), "sop", ("asymptotic",))
    with pytest.raises(ConfigError):
        cli.config_from_dict({}).with_setting("system.nope", 1)


def test_single_point_mc_row_matches_estimator():
    cfg = cli.config_from_dict({"system": {"K": 3, "M": 1}, "mc": {"trials": 20000, "seed": 3}})
    row = cli.evaluate(cfg, "op", "mc")
    est = montecarlo.estimate_op(cfg.scenario, cfg.secrecy, cfg.mc)
    assert row.value == est.mean and row.stderr == est.stderr


def test_failed_method_gives_na_row():
    cfg = cli.config_from_dict({})
    row = cli.evaluate(cfg, "sop", "foxh")
    assert row.failed and row.flags.startswith("NA:MethodUnavailable")
    assert cli.exit_code_for([row]) == cli.EXIT_ALL_FAILED
    ok = cli.evaluate(cfg, "op", "approx")
    assert cli.exit_code_for([row, ok]) == cli.EXIT_PARTIAL
    assert cli.exit_code_for([ok]) == cli.EXIT_OK
    assert ",NA," in cli.rows_to_csv([row])


def test_sweep_csv_is_reproducible(tmp_path):
    spec = tmp_path / "s.toml"
    spec.write_text(SWEEP)
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}.csv"
        assert cli.main(["sweep", str(spec), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == ",".join(cli.CSV_HEADER)
    assert len(lines) == 5


def test_sweep_svg(tmp_path):
    spec = tmp_path / "s.toml"
    spec.write_text(SWEEP)
    out = tmp_path / "o.csv"
    assert cli.main(["sweep", str(spec), "--out", str(out), "--method", "approx", "--svg"]) == 0
    assert (tmp_path / "o.svg").read_text().lstrip().startswith("<svg")


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[system]\nK = 3\nM = 2\n")
    assert cli.main(["eval", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert cli.main(["eval", "--config", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG


def test_write_atomic_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "x.csv"
    cli.write_atomic(str(target), "a,b\n")
    cli.write_atomic(str(target), "c,d\n")
    assert target.read_text() == "c,d\n"
    assert os.listdir(target.parent) == ["x.csv"]


def test_validate_command(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[system]\nK = 3\nM = 1\np_db = 20.0\n[mc]\ntrials = 50000\n")
    out = tmp_path / "v.csv"
    code = cli.main(["validate", "--config", str(cfg), "--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0].startswith("metric,analytic,mc")
    assert len(lines) == 5
    assert code == (0 if all(l.endswith("PASS") for l in lines[1:]) else 1)


def test_tolerance_rules():
    est = montecarlo.McEstimate(0.5, 0.01, 1000)
    assert cli.tolerance("op", est) == pytest.approx(0.03)
    assert cli.tolerance("asr", montecarlo.McEstimate(2.0, 1e-4, 1000)) == pytest.approx(0.1)
    assert cli.tolerance("sop", montecarlo.McEstimate(0.5, 1e-4, 1000)) == pytest.approx(0.01)
