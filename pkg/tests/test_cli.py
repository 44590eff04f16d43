import csv
import json
import subprocess
import sys

import pytest

from nhsta.cli import main, parse_real
from nhsta.experiments import sha256


def last_row(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return rows[-1]


@pytest.mark.parametrize(
    "text,value",
    [("pi", 3.141592653589793), ("-pi", -3.141592653589793), ("pi/10", 0.3141592653589793),
     ("100pi", 314.1592653589793), ("0.25", 0.25), ("1e-12", 1e-12)],
)
def test_parse_real(text, value):
    assert parse_real(text) == pytest.approx(value, rel=1e-15)


def test_spectrum_row_count(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["spectrum", "-q", "--which", "h0", "--res", "101", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 101 * 101
    assert json.loads(out.with_suffix(".json").read_text())["config"]["res"] == 101


def test_spectrum_hm_needs_trajectory(tmp_path, capsys):
    assert main(["spectrum", "-q", "--which", "hm", "--out", str(tmp_path / "s.csv")]) == 2
    assert "--r" in capsys.readouterr().err


def test_spectrum_hm_with_trajectory(tmp_path):
    out = tmp_path / "hm.csv"
    argv = ["spectrum", "-q", "--which", "hm", "--r", "1.5", "--omega", "pi/10", "--res", "21", "--out", str(out)]
    assert main(argv) == 0
    assert (tmp_path / "hm_trajectory.csv").exists()


def test_evolve_sta(tmp_path):
    out = tmp_path / "a.csv"
    argv = ["evolve", "-q", "--trajectory", "modified", "--hamiltonian", "hm", "--cd", "real",
            "--init", "minus", "--r", "0.5", "--omega", "pi/10", "--phi0", "pi", "--out", str(out)]
    assert main(argv) == 0
    assert float(last_row(out)["f_plus"]) >= 0.999
    out2 = tmp_path / "b.csv"
    assert main(argv[:-1] + [str(out2), "--periods", "2"]) == 0
    assert float(last_row(out2)["f_minus"]) >= 0.999


@pytest.mark.parametrize("init", ["up", "1,2,3", "a,b", "0,0"])
def test_evolve_bad_init(tmp_path, init, capsys):
    assert main(["evolve", "-q", "--init", init, "--out", str(tmp_path / "x.csv")]) == 2
    assert "init" in capsys.readouterr().err


def test_evolve_numeric_failure(tmp_path, capsys):
    # starts on the branch cut at (0, 0.5)
    argv = ["evolve", "-q", "--trajectory", "original", "--r", "0.5", "--phi0", "0", "--out", str(tmp_path / "x.csv")]
    assert main(argv) == 3
    assert "branch cut" in capsys.readouterr().err


def test_sweep_even_res(tmp_path, capsys):
    assert main(["sweep", "-q", "--res", "4", "--out", str(tmp_path / "w.csv")]) == 2
    assert "--res" in capsys.readouterr().err


def test_sweep_jobs_do_not_change_output(tmp_path):
    base = ["sweep", "-q", "--axes", "k,eps", "--range", "0.05", "--res", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(base + ["--jobs", "1", "--out", str(a)]) == 0
    assert main(base + ["--jobs", "8", "--out", str(b)]) == 0
    assert sha256(a) == sha256(b)
    assert json.loads(a.with_suffix(".json").read_text())["config"]["axes"] == ["k", "epsilon"]


def test_manifest_round_trip(tmp_path):
    first = tmp_path / "first.csv"
    argv = ["evolve", "-q", "--r", "1.5", "--omega", "pi", "--samples", "200", "--out", str(first)]
    assert main(argv) == 0
    second = tmp_path / "second.csv"
    assert main(["evolve", "-q", "--config", str(first.with_suffix(".json")), "--out", str(second)]) == 0
    assert sha256(first) == sha256(second)
    doc = json.loads(second.with_suffix(".json").read_text())
    assert doc["config"]["r"] == 1.5 and doc["config"]["samples"] == 200


def test_config_files(tmp_path):
    toml = tmp_path / "run.toml"
    toml.write_text('r = 1.5\nomega = "pi"\nsamples = 100\ninit = "plus"\n')
    out = tmp_path / "t.csv"
    assert main(["evolve", "-q", "--config", str(toml), "--out", str(out)]) == 0
    assert float(last_row(out)["f_minus"]) >= 0.999
    doc = json.loads(out.with_suffix(".json").read_text())
    assert doc["config"]["init"] == "plus"
    assert doc["config"]["rtol"] == 1e-10  # defaults echoed back

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"r": 1.5, "radius": 2}))
    assert main(["evolve", "-q", "--config", str(bad), "--out", str(out)]) == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"r": 0.5, "samples": 50}))
    out = tmp_path / "o.csv"
    assert main(["evolve", "-q", "--config", str(cfg), "--samples", "60", "--out", str(out)]) == 0
    doc = json.loads(out.with_suffix(".json").read_text())
    assert doc["config"]["samples"] == 60 and doc["config"]["r"] == 0.5


def test_shapes_and_transfer(tmp_path):
    assert main(["shapes", "-q", "--samples", "11", "--out", str(tmp_path / "sh.csv")]) == 0
    assert main(["shapes", "-q", "--trajectory", "original", "--r", "0.5",
                 "--out", str(tmp_path / "bad.csv")]) == 3
    assert main(["transfer", "-q", "--set", "sta", "--samples", "50", "--out", str(tmp_path / "tr")]) == 0
    doc = json.loads((tmp_path / "tr" / "manifest.json").read_text())
    assert doc["tool"] == "nhsta"


def test_help_lists_units():
    text = subprocess.run(
        [sys.executable, "-m", "nhsta.cli", "evolve", "--help"], capture_output=True, text=True, check=True
    ).stdout
    for flag in ("--trajectory", "--hamiltonian", "--cd", "--init", "--r", "--omega", "--phi0",
                 "--periods", "--samples", "--rtol", "--out"):
        assert flag in text
    assert "[rad per time unit]" in text
    assert "(default: pi/10)" in text
