import csv
import json
import shutil
import subprocess
from fractions import Fraction

import numpy as np
import pytest

from swent.cli import main
from swent.config import ConfigError, format_value, parse_config, parse_value
from swent.presets import EXAMPLE1_INI, EXAMPLE2_INI, SIGNAL_INI, example_config
from swent.switching import SwitchingSignal

SCALAR_INI = """\
[system]
type = linear
A = [[[1]]]
S = [[0, 1]]

[signal]
kind = constant
mode = 0
horizon = 4

[estimate]
K = [[0, 1]]
eps = 1/20
T = [1, 2, 3, 4]
"""

ZERO_INI = """\
[system]
type = linear
A = [[[0, 0], [0, 0]]]
S = [[0, 1], [0, 1]]

[signal]
kind = constant
horizon = 3

[estimate]
K = [[0, 1], [0, 1]]
eps = 1/10
T = [1, 2, 3]
resolution = 21

[simulate]
x0 = [[0.25, 0.75]]
T = 1
step = 1/10
"""

NON_UUB_INI = """\
[system]
type = lotka-volterra
r = [[1, 1]]
A = [[[-1, 2], [0, -1]]]
S = auto

[signal]
kind = constant
horizon = 10
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- config ------------------------------------------------------------------

def test_rational_literals_parse_exactly():
    assert parse_value("10/3") == Fraction(10, 3)
    assert parse_value("[1/10, -2, 3.5]") == [Fraction(1, 10), -2, Fraction(7, 2)]
    assert parse_value("1e7") == Fraction(10 ** 7)
    assert parse_value("[[0, 10/3], [0, 20/9]]") == [[0, Fraction(10, 3)], [0, Fraction(20, 9)]]
    assert parse_value("auto") == "auto"
    assert parse_value("block-diagonal") == "block-diagonal"


@pytest.mark.parametrize("value", [Fraction(10, 3), [Fraction(1, 10), 2], "inf", [[1, Fraction(-1, 2)]]])
def test_value_formatting_round_trips(value):
    assert parse_value(format_value(value)) == value


@pytest.mark.parametrize("text", [EXAMPLE1_INI, EXAMPLE2_INI, SCALAR_INI, ZERO_INI])
def test_config_round_trips_through_ini(text):
    cfg = parse_config(text)
    back = parse_config(cfg.to_ini())
    assert back == cfg
    assert back.build_signal().same_as(cfg.build_signal())


def test_bundled_signals_match_constructors():
    for name in SIGNAL_INI:
        cfg = example_config(1, name)
        sig = cfg.build_signal()
        assert SwitchingSignal.from_dict(sig.to_dict()).same_as(sig)
    assert example_config(1, "sigma2").build_signal().horizon == 9 ** 11 + 9 ** 10


def test_config_errors_name_the_line_and_key():
    bad = EXAMPLE1_INI.replace("r = [[-1, 2], [3, -1]]", "r = [[-1, 2, 5], [3, -1]]")
    with pytest.raises(ConfigError, match=r"line \d+.*\[system\]"):
        parse_config(bad)
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(EXAMPLE1_INI + "\n[plots]\nx = 1\n")
    with pytest.raises(ConfigError, match=r"missing section \[signal\]"):
        parse_config("[system]\ntype = linear\nA = [[[1]]]\n")
    with pytest.raises(ConfigError):
        parse_config(EXAMPLE1_INI.replace("kind = periodic", "kind = random"))


# -- commands ---------------------------------------------------------------

def test_bounds_command_prints_table_one_row(tmp_path, capsys):
    code, out, _ = run(capsys, "bounds", "--config", write(tmp_path, EXAMPLE1_INI), "--format", "json",
                       "--out", str(tmp_path / "o"))
    assert code == 0
    values = json.loads(out)["values"]
    assert [round(values[t], 2) for t in ("Eq16", "Eq20", "Eq21")] == [5.56, 5.56, 6.44]
    assert (tmp_path / "o" / "bounds.json").exists() and (tmp_path / "o" / "bounds.txt").exists()


def test_bounds_command_on_block_system(tmp_path, capsys):
    code, out, _ = run(capsys, "bounds", "--config", write(tmp_path, EXAMPLE2_INI), "--format", "csv")
    assert code == 0
    rows = {r[0]: float(r[1]) for r in list(csv.reader(out.splitlines()))[1:]}
    expected = {"Eq16": 9.6, "Eq20": 14.4, "Eq21": 10, "Eq34": 6.06, "Eq39": 7.57, "Eq40": 6.2,
                "Eq41": 7.8, "Eq42": 6.67}
    for tag, v in expected.items():
        assert abs(rows[tag] - v) <= 0.01


def test_refusal_exit_code_cites_failed_condition(tmp_path, capsys):
    code, _, err = run(capsys, "bounds", "--config", write(tmp_path, NON_UUB_INI))
    assert code == 2
    assert "row" in err


def test_config_error_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "bounds", "--config", write(tmp_path, "[system]\nA = [[[1]]]\n"))
    assert code == 1 and "config error" in err
    code, _, _ = run(capsys, "bounds", "--config", str(tmp_path / "missing.ini"))
    assert code == 1
    code, _, _ = run(capsys, "bounds")
    assert code == 1


def test_usage_errors_exit_with_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 1
    code, _, err = run(capsys, "reproduce", "table9")
    assert code == 1 and "unknown table" in err


@pytest.mark.parametrize("table,cells", [("table1", 6), ("table2", 16)])
def test_reproduce_tables(tmp_path, capsys, table, cells):
    code, out, _ = run(capsys, "reproduce", table, "--format", "json", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert len(doc["cells"]) == cells and doc["max_deviation"] <= 0.01
    assert (tmp_path / f"reproduce_{table}.csv").read_bytes().count(b"\r") == 0


def test_reproduce_deviation_exit_code(capsys, monkeypatch):
    from swent import cli, presets
    shifted = {k: dict(v) for k, v in presets.TABLES.items()}
    shifted["table1"]["published"] = {"sigma1": (5.0, 5.56, 6.45), "sigma2": (6.27, 10.0, 6.45)}
    monkeypatch.setattr(presets, "TABLES", shifted)
    monkeypatch.setattr(cli, "TABLES", shifted)
    code, _, err = run(capsys, "reproduce", "table1")
    assert code == 3 and "sigma1/Eq16" in err


def test_simulate_writes_csv_with_duplicated_switch_rows(tmp_path, capsys):
    text = EXAMPLE1_INI + "\n[simulate]\nstep = 1/20\n"
    code, _, _ = run(capsys, "simulate", "--config", write(tmp_path, text), "--x0", "4,3",
                     "--x0", "1,1", "--horizon", "1100", "--out", str(tmp_path))
    assert code == 0
    raw = (tmp_path / "trajectory_0.csv").read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["t", "x_1", "x_2", "mode"]
    at_switch = [r for r in rows[1:] if r[0] == "1000"]
    assert [r[-1] for r in at_switch] == ["0", "1"]
    assert (tmp_path / "trajectory_1.csv").exists()
    last = [float(v) for v in rows[-1][1:3]]
    assert 0 <= last[0] <= 10 / 3 and 0 <= last[1] <= 20 / 9


def test_simulate_static_system_gives_constant_columns(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--config", write(tmp_path, ZERO_INI), "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "trajectory_0.csv")))[1:]
    assert {(r[1], r[2]) for r in rows} == {("0.25", "0.75")}


def test_simulate_divergence_writes_partial_file(tmp_path, capsys):
    text = SCALAR_INI.replace("A = [[[1]]]", "A = [[[40]]]") + "\n[simulate]\nx0 = [[1]]\nT = 5\n"
    code, _, err = run(capsys, "simulate", "--config", write(tmp_path, text), "--out", str(tmp_path))
    assert code == 4 and "diverged" in err
    rows = list(csv.reader(open(tmp_path / "trajectory_0.csv")))
    assert len(rows) > 2


def test_estimate_command_on_expanding_scalar(tmp_path, capsys):
    code, out, _ = run(capsys, "estimate", "--config", write(tmp_path, SCALAR_INI), "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["rate"] == pytest.approx(1.0, abs=0.15)
    assert set(doc) == {"counts", "fit", "rate", "seed", "parameters"}


def test_estimate_command_on_static_system(tmp_path, capsys):
    code, out, _ = run(capsys, "estimate", "--config", write(tmp_path, ZERO_INI), "--format", "json")
    assert code == 0 and json.loads(out)["rate"] == 0


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, ZERO_INI.replace("resolution = 21", "resolution = 21\nseed = 7"))
    seeds = []
    monkeypatch.delenv("SWENT_SEED", raising=False)
    for argv, env in (([], None), ([], "11"), (["--seed", "13"], "11")):
        if env is not None:
            monkeypatch.setenv("SWENT_SEED", env)
        code, out, _ = run(capsys, "estimate", "--config", path, "--format", "json", *argv)
        assert code == 0
        seeds.append(json.loads(out)["seed"])
    assert seeds == [7, 11, 13]
    monkeypatch.delenv("SWENT_SEED")
    code, out, _ = run(capsys, "estimate", "--config", write(tmp_path, ZERO_INI, "b.ini"), "--format", "json")
    assert json.loads(out)["seed"] == 42


def test_outputs_are_byte_identical_across_runs(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("SWENT_SEED", raising=False)
    cfg = write(tmp_path, EXAMPLE2_INI)
    for k in range(2):
        assert run(capsys, "bounds", "--config", cfg, "--out", str(tmp_path / f"b{k}"))[0] == 0
        assert run(capsys, "estimate", "--config", write(tmp_path, ZERO_INI, "z.ini"),
                   "--out", str(tmp_path / f"e{k}"))[0] == 0
    assert (tmp_path / "b0" / "bounds.json").read_bytes() == (tmp_path / "b1" / "bounds.json").read_bytes()
    assert (tmp_path / "e0" / "estimate.json").read_bytes() == (tmp_path / "e1" / "estimate.json").read_bytes()


def test_signal_info_reports_rates(tmp_path, capsys):
    code, out, _ = run(capsys, "signal-info", "--config", write(tmp_path, EXAMPLE2_INI), "--format", "json")
    assert code == 0
    rates = json.loads(out)["rates"]
    assert np.allclose(rates["rho_hat"], [0.9, 0.9])
    code, out, _ = run(capsys, "signal-info", "--config", write(tmp_path, EXAMPLE1_INI), "--format", "csv")
    assert out.splitlines()[0] == "mode,rho_hat,estimated_rho_hat,persistent,strongly_persistent"


@pytest.mark.skipif(shutil.which("swent") is None, reason="console script not installed")
def test_console_script_runs():
    proc = subprocess.run(["swent", "reproduce", "table1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "max deviation" in proc.stdout
