import csv
import json

import pytest

from fdcell.cli import CSV_SCHEMAS, main, run_preset
from fdcell.config import ConfigError, SimConfig, format_config, parse_config, write_config


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("", encoding="utf-8")
    cfg = parse_config(p)
    assert cfg == SimConfig()
    assert cfg.bandwidth_hz == 10e6 and cfg.noise_density_dbm_hz == -174
    assert (cfg.nf_bs_db, cfg.nf_user_db) == (8, 9)
    assert (cfg.shadowing_los_db, cfg.shadowing_nlos_db) == (3, 4)


@pytest.mark.parametrize("text, key", [
    ("rho = 1.5", "rho"), ("bogus = 1", "bogus"), ("n_users = x", "n_users"),
    ("[power]\nrate_model = qam", "rate_model"), ("power_strategy = grid:1", "power_strategy"),
    ("weights_ul = 0.5, 0.6\nweights_dl = 0, 0\nn_users = 2", "weights_ul"),
    ("rate_table = /nonexistent.txt", "rate_table"), ("drops = 0", "drops"),
    ("rho = 0.1\n[utility]\nrho = 0.2", "rho")])
def test_errors_name_the_key(tmp_path, text, key):
    p = tmp_path / "c.ini"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        parse_config(p)
    assert exc.value.key == key
    assert str(exc.value).startswith(key)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.ini")


def test_round_trip(tmp_path):
    cfg = SimConfig(rho=0.3, n_hotspots=2, rate_model="lte", power_strategy="grid:5",
                    weights_ul=(0.1, 0.2), weights_dl=(0.3, 0.4), n_users=2,
                    bs_user_los=True, calibration_distance_m=50.123456789)
    write_config(cfg, tmp_path / "c.ini")
    assert parse_config(tmp_path / "c.ini") == cfg
    write_config(SimConfig(), tmp_path / "d.ini")
    assert parse_config(tmp_path / "d.ini") == SimConfig()


def test_sections_optional(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("rho = 0.7\n[geometry]\nn_hotspots = 1\n", encoding="utf-8")
    cfg = parse_config(p)
    assert cfg.rho == 0.7 and cfg.n_hotspots == 1


def test_derived_properties():
    cfg = SimConfig(power_strategy="grid:7", si_cancellation_db=80)
    assert cfg.strategy == "grid" and cfg.levels == 7
    assert cfg.psi == pytest.approx(1e-8)
    assert SimConfig(scenario="HD+FD").modes == frozenset({"HD", "FD"})
    assert SimConfig().weights().sum() == pytest.approx(1.0)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


TINY = SimConfig(drops=2, slots_per_drop=20)


def test_preset_asymmetry(tmp_path):
    run_preset("asymmetry", TINY, tmp_path)
    head, rows = _read_csv(tmp_path / "asymmetry.csv")
    assert head == CSV_SCHEMAS["asymmetry.csv"][1]
    assert len(rows) == 9
    assert {(r[0], float(r[1])) for r in rows} == {(s, rho) for s in ("HD", "HD+FD", "HD+FD+SIC")
                                                   for rho in (0.3, 0.5, 0.7)}
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["preset"] == "asymmetry" and "asymmetry.csv" in man["outputs"]


def test_preset_gains(tmp_path):
    run_preset("gains", TINY.replace(drops=1, slots_per_drop=5), tmp_path)
    head, rows = _read_csv(tmp_path / "gains.csv")
    assert head == CSV_SCHEMAS["gains.csv"][1]
    keys = {(r[0], int(r[1]), float(r[2]), r[3]) for r in rows}
    assert len(rows) == len(keys) == 3 * 4 * 2 * 2
    assert {k[1] for k in keys} == {0, 1, 2, 3} and {k[2] for k in keys} == {80.0, 100.0}
    assert all(float(r[6]) == 0.0 for r in rows if r[0] == "HD")


def test_preset_fig2_and_replay(tmp_path):
    out = tmp_path / "a"
    assert main(["preset", "fig2", "--samples", "20", "--out-dir", str(out)]) == 0
    head, rows = _read_csv(out / "fig2.csv")
    assert head == CSV_SCHEMAS["fig2.csv"][1] and len(rows) == 40
    assert all(float(r[3]) >= float(r[2]) for r in rows)
    again = tmp_path / "b"
    assert main(["replay", str(out / "manifest.json"), "--out-dir", str(again)]) == 0
    for name in ("fig2.csv", "metrics.json"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_run_and_replay(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[scheduler]\nscenario = HD+FD\n", encoding="utf-8")
    out = tmp_path / "a"
    assert main(["run", "--config", str(cfg), "--drops", "2", "--slots", "30", "--seed", "5",
                 "--out-dir", str(out)]) == 0
    head, rows = _read_csv(out / "drops.csv")
    assert head == CSV_SCHEMAS["drops.csv"][1] and len(rows) == 2
    assert all(int(r[9]) == 0 for r in rows)
    man = json.loads((out / "manifest.json").read_text())
    assert man["master_seed"] == 5 and man["command"] == "run"
    assert main(["replay", str(out / "manifest.json"), "--out-dir", str(tmp_path / "b")]) == 0
    for name in ("drops.csv", "metrics.json"):
        assert (out / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "c.ini"
    bad.write_text("rho = 1.5\n", encoding="utf-8")
    assert main(["run", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "rho" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["preset", "nope"])
    assert exc.value.code != 0
    with pytest.raises(ConfigError):
        run_preset("nope", TINY, tmp_path)


def test_defaults_command(capsys):
    assert main(["defaults"]) == 0
    assert capsys.readouterr().out == format_config(SimConfig())


def test_commented_example(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("""[geometry]
n_hotspots = 1

[channel]
si_cancellation_db = 80

[power]
rate_model = lte            # shannon | lte
rate_table =                # optional "<sinr_db> <bps/Hz>" file for lte
power_strategy = analytic   # analytic | binary | grid:<n>

[scheduler]
scenario = HD+FD+SIC        # HD | HD+FD | HD+FD+SIC
""", encoding="utf-8")
    cfg = parse_config(p)
    assert (cfg.n_hotspots, cfg.si_cancellation_db, cfg.rate_model) == (1, 80.0, "lte")
    assert cfg.rate_table == "" and cfg.scenario == "HD+FD+SIC"
