import csv
import json

import pytest

from metapop.cli import main


@pytest.fixture
def model_files(tmp_path):
    land = tmp_path / "land.txt"
    main(["landscape", "gen", "--kind", "uniform", "--n", "3", "--d", "1", "--seed", "1", "-o", str(land)])
    rates = tmp_path / "rates.txt"
    rates.write_text("colonisation = linear(1.0)\nextinction = const(0.5)\n")
    return land, rates


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_landscape_gen_kinds(tmp_path, capsys):
    for kind in ("uniform", "ring", "grid"):
        out = tmp_path / f"{kind}.txt"
        assert main(["landscape", "gen", "--kind", kind, "--n", "9", "--d", "2", "-o", str(out)]) == 0
        assert out.exists()
    assert "wrote 9 patches" in capsys.readouterr().out


def test_simulate_discrete_coupled(model_files, tmp_path):
    land, rates = model_files
    out = tmp_path / "disc"
    main(["simulate", "discrete", "--landscape", str(land), "--rates", str(rates), "--T", "3", "--m", "2",
          "--reps", "2", "--coupled", "-o", str(out)])
    X = _rows(out / "rep0001_X.csv")
    assert X[0] == ["t", "X_1", "X_2", "X_3"] and len(X) == 8
    summ = _rows(out / "rep0000_coupled.csv")
    assert summ[0] == ["t", "sumJ_weighted", "l1_XW", "tv_Xp", "sup_rect_Xp"]
    assert all(float(r[4]) <= float(r[3]) + 1e-12 for r in summ[1:])


def test_simulate_ctmc_ode_and_coupled_ct(model_files, tmp_path):
    land, rates = model_files
    common = ["--landscape", str(land), "--rates", str(rates), "--T", "1", "--x0", "101"]
    main(["simulate", "ctmc", *common, "-o", str(tmp_path / "c")])
    assert _rows(tmp_path / "c" / "rep0000_events.csv")[0] == ["time", "patch", "new_value"]
    main(["simulate", "ode", *common, "--h", "0.1", "-o", str(tmp_path / "o")])
    ode = _rows(tmp_path / "o" / "ode.csv")
    assert len(ode) == 12 and ode[1][1:] == ["1.0", "0.0", "1.0"]
    main(["simulate", "coupled-ct", *common, "-o", str(tmp_path / "cc")])
    assert _rows(tmp_path / "cc" / "rep0000_events.csv")[0][-1] == "sumJ_weighted"


def test_bad_initial_state(model_files, tmp_path):
    land, rates = model_files
    with pytest.raises(SystemExit):
        main(["simulate", "ctmc", "--landscape", str(land), "--rates", str(rates), "--T", "1", "--x0", "10",
              "-o", str(tmp_path / "c")])


def test_bounds_json(model_files, capsys):
    land, rates = model_files
    main(["bounds", "--landscape", str(land), "--rates", str(rates), "--theorem", "3", "--T", "1", "--r", "7",
          "--json"])
    rep = json.loads(capsys.readouterr().out)
    assert [b["theorem"] for b in rep["bounds"]] == ["T3a", "T3b"]
    assert rep["V"] == 4 and rep["constants"]["n"] == 3
    main(["bounds", "--landscape", str(land), "--rates", str(rates), "--theorem", "2", "--T", "1"])
    assert "T2: threshold" in capsys.readouterr().out


def test_oracle_commands(model_files, capsys):
    land, rates = model_files
    common = ["--landscape", str(land), "--rates", str(rates), "--T", "1", "--exact"]
    main(["oracle", "chain", *common])
    lines = capsys.readouterr().out.split()
    assert len(lines) == 16 and abs(sum(float(v) for v in lines[1::2]) - 1) < 1e-12
    main(["oracle", "ctmc", *common])
    assert len(capsys.readouterr().out.splitlines()) == 8
    main(["oracle", "coupled", *common])
    assert capsys.readouterr().out.startswith("E[sum a_i J_i]")
    main(["oracle", "coupled-ct", *common])
    assert "Var" in capsys.readouterr().out


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("landscape = equal\nn = 40\nm = 2\nT = 1\nreps = 3\ntheorems = T2\n")
    out = tmp_path / "res"
    main(["experiment", "verify", "--config", str(cfg), "-o", str(out)])
    for name in ("results.csv", "bounds.json", "manifest.json"):
        assert (out / name).exists()
    assert "outputs in" in capsys.readouterr().out
