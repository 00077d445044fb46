import argparse
import json
import subprocess
import sys

import pytest

from kerrsqueeze import cli

SMALL = ["--dim", "60", "--n-starts", "3", "--seed", "2"]


@pytest.fixture(scope="module")
def cubic_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cubic")
    assert cli.run(["sweep", "--kind", "cubic", "--grid", "0.4,0.8,1.2", *SMALL, "--out", str(out)]) == 0
    return out


def test_fmt():
    assert cli.fmt(3) == "3"
    assert cli.fmt(0.1) == "0.1"
    assert cli.fmt(1 / 3) == "0.333333333333"


@pytest.mark.parametrize("spec,expected", [
    ("0:1:3", [0.0, 0.5, 1.0]),
    ("0.2,0.5", [0.2, 0.5]),
    ([1, 2], [1.0, 2.0]),
])
def test_parse_grid(spec, expected):
    assert cli.parse_grid(spec) == pytest.approx(expected)


@pytest.mark.parametrize("spec", ["", "1:0:0", "0.5,0.2", "1,1", 3])
def test_parse_grid_rejects(spec):
    with pytest.raises(cli.ConfigError):
        cli.parse_grid(spec)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dim": 90, "seed": 5}))
    args = argparse.Namespace(profile="ci", config=str(cfg), seed=11, dim=None, kind="cubic")
    config = cli.resolve_config("sweep", args)
    assert config["n_starts"] == 40  # profile over default
    assert config["dim"] == 90  # file over profile
    assert config["seed"] == 11  # flag over file
    assert config["max_evals"] == cli.DEFAULTS["sweep"]["max_evals"]


def test_unknown_config_key_is_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dimension": 90}))
    code = cli.run(["sweep", "--kind", "linear", "--grid", "0.5", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_sweep_outputs(cubic_run):
    header, data = cli.read_csv(cubic_run / "sweep_cubic.csv")
    assert tuple(header) == cli.SWEEP_COLUMNS["cubic"]
    assert list(data[:, 0]) == [0.4, 0.8, 1.2]
    assert (data[:, 2] < 1).all()
    pheader, pdata = cli.read_csv(cubic_run / "params_cubic.csv")
    assert tuple(pheader) == cli.PARAMS_COLUMNS["cubic"]
    assert pdata.shape == (3, 5)
    manifest = json.loads((cubic_run / "manifest.json").read_text())
    for key in ("version", "csv_schema", "command", "config", "convention", "seed", "dim",
                "input_hash", "outputs", "timings", "diagnostics"):
        assert key in manifest
    assert manifest["dim"] == 60 and manifest["seed"] == 2
    assert set(manifest["outputs"]) == {"sweep_cubic.csv", "params_cubic.csv"}
    assert not list(cubic_run.glob(".*"))  # no leftover temporary files


def test_sweep_rerun_identical(cubic_run, tmp_path):
    assert cli.run(["sweep", "--kind", "cubic", "--grid", "0.4,0.8,1.2", *SMALL, "--out", str(tmp_path)]) == 0
    for name in ("sweep_cubic.csv", "params_cubic.csv"):
        assert (tmp_path / name).read_bytes() == (cubic_run / name).read_bytes()
    a = json.loads((cubic_run / "manifest.json").read_text())
    b = json.loads((tmp_path / "manifest.json").read_text())
    assert a["input_hash"] == b["input_hash"] and a["outputs"] == b["outputs"]


def test_replay(cubic_run, tmp_path):
    assert cli.run(["replay", str(cubic_run / "manifest.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep_cubic.csv").read_bytes() == (cubic_run / "sweep_cubic.csv").read_bytes()


def test_mc_from_sweep(cubic_run, tmp_path):
    args = ["mc", "--kind", "cubic", "--sweep-dir", str(cubic_run), "--gamma", "0", "0.05",
            "--n-runs", "40", "--fix", "alpha", "--out", str(tmp_path)]
    assert cli.run(args) == 0
    _, ideal = cli.read_csv(cubic_run / "sweep_cubic.csv")
    header, zero = cli.read_csv(tmp_path / "mc_cubic_0.csv")
    assert tuple(header) == cli.MC_COLUMNS
    assert zero[:, 1] == pytest.approx(ideal[:, 2], abs=1e-9)
    assert (zero[:, 2:4] == 0).all()
    _, noisy = cli.read_csv(tmp_path / "mc_cubic_0.05.csv")
    assert (noisy[:, 4] + noisy[:, 5] <= 40).all()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["dim"] == 60  # taken from the sweep manifest
    assert manifest["diagnostics"]["fixed_mask"] == [True, False, False, False, False]
    assert set(manifest["diagnostics"]["per_gamma"]) == {"0", "0.05"}
    assert "params_cubic.csv" in manifest["inputs"]


def test_mc_inline_mu(tmp_path):
    args = ["mc", "--kind", "quartic", "--mu", "0.3,0.1,0.5,0.2,0.3", "--gamma", "0.01", "--n-runs", "20",
            "--dim", "60", "--convention", "twoNplus1Sq", "--out", str(tmp_path)]
    assert cli.run(args) == 0
    _, data = cli.read_csv(tmp_path / "mc_quartic_0.01.csv")
    assert data.shape == (1, len(cli.MC_COLUMNS))


def test_mc_missing_sweep_is_exit_2(tmp_path, capsys):
    code = cli.run(["mc", "--kind", "cubic", "--sweep-dir", str(tmp_path / "nowhere"), "--out", str(tmp_path)])
    assert code == 2
    assert "run `kerrsqueeze sweep" in capsys.readouterr().err


def test_mc_bad_fix_name_is_exit_2(cubic_run, tmp_path):
    code = cli.run(["mc", "--kind", "cubic", "--sweep-dir", str(cubic_run), "--fix", "omega",
                    "--n-runs", "5", "--out", str(tmp_path)])
    assert code == 2


def test_empty_csv_is_exit_2(tmp_path):
    (tmp_path / "params_cubic.csv").write_text("")
    assert cli.run(["mc", "--kind", "cubic", "--sweep-dir", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
    (tmp_path / "params_cubic.csv").write_text(",".join(cli.PARAMS_COLUMNS["cubic"]) + "\n")
    assert cli.run(["mc", "--kind", "cubic", "--sweep-dir", str(tmp_path), "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_is_exit_3(tmp_path, capsys):
    # a coherent amplitude of 3 does not fit in 12 levels
    code = cli.run(["sweep", "--kind", "linear", "--grid", "3", "--dim", "12", "--n-starts", "2",
                    "--out", str(tmp_path)])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err
    assert not (tmp_path / "sweep_linear.csv").exists()


def test_missing_grid_is_exit_2(tmp_path):
    assert cli.run(["sweep", "--kind", "linear", "--out", str(tmp_path)]) == 2


def test_baselines(capsys):
    assert cli.run(["baselines"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("n=3") and "variance=0.94494" in out[0]
    assert out[1].startswith("n=4")


def test_plotdata_svg_and_tidy(cubic_run, tmp_path):
    svg = tmp_path / "c.svg"
    assert cli.run(["plotdata", str(cubic_run / "sweep_cubic.csv"), "--out", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and text.count('class="series"') == len(cli.SWEEP_COLUMNS["cubic"]) - 1
    tidy = tmp_path / "c.csv"
    assert cli.run(["plotdata", str(cubic_run / "sweep_cubic.csv"), "--format", "tidy", "--out", str(tidy)]) == 0
    lines = tidy.read_text().splitlines()
    assert lines[0] == "series,primary_param,value"
    assert len(lines) == 1 + 3 * (len(cli.SWEEP_COLUMNS["cubic"]) - 1)


def test_plotdata_band(cubic_run, tmp_path):
    cli.run(["mc", "--kind", "cubic", "--sweep-dir", str(cubic_run), "--gamma", "0.05", "--n-runs", "20",
             "--out", str(tmp_path)])
    text = cli.plotdata(tmp_path / "mc_cubic_0.05.csv", "svg")
    assert text.count('class="band"') == 1 and text.count('class="series"') == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kerrsqueeze", "baselines"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("n=3")
