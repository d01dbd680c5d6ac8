import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from peakcap import cli
from peakcap.errors import ConvergenceError

from conftest import load_table


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_reduce(capsys):
    code, out, _ = run(capsys, "reduce", "--h", "1", "0", "0", "0.5")
    assert code == 0
    assert out.strip() == "r_p=1 r_m=0.5"
    code, out, _ = run(capsys, "reduce", "--h", "1", "1", "0", "1")
    assert out.startswith("r_p=1.61803398875 r_m=0.61803398875")


def test_parse_errors(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["reduce", "--h", "1", "nan", "0", "1"])
    assert info.value.code == 2
    assert "finite" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main([])


def test_capacity_circle_and_round_trip(tmp_path, capsys):
    out_json = tmp_path / "cap.json"
    code, _, _ = run(capsys, "capacity", "--rp", "1", "--rm", "1", "--json", str(out_json))
    assert code == 0
    doc = json.loads(out_json.read_text())
    assert doc["regime_label"] == "circle_uniform"
    assert doc["units"] == "nats"
    csv = (tmp_path / "cap.csv").read_text().splitlines()
    assert csv[0] == "x1,x2,mass"
    assert math.fsum(float(r.split(",")[2]) for r in csv[1:]) == pytest.approx(1.0, abs=1e-12)
    # the whole result document and the bare distribution are both accepted
    code, out, _ = run(capsys, "kkt-check", "--dist", str(out_json))
    assert code == 0 and json.loads(out)["passed"] is True
    dist = tmp_path / "dist.json"
    dist.write_text(json.dumps(doc["distribution"]))
    code, out, _ = run(capsys, "kkt-check", "--dist", str(dist))
    assert code == 0


def test_capacity_stdout_and_explicit_csv(tmp_path, capsys):
    csv = tmp_path / "atoms.csv"
    code, out, _ = run(capsys, "capacity", "--rp", "0.8", "--rm", "0.3", "--csv", str(csv))
    assert code == 0
    doc = json.loads(out)
    assert doc["regime_label"] == "two_point"
    assert csv.read_text() == "x1,x2,mass\n0.8,0,0.5\n-0.8,0,0.5\n"


def test_capacity_regime_refusal(capsys):
    code, _, err = run(capsys, "capacity", "--rp", "1.6", "--rm", "0.5")
    assert code == 1 and "sqrt(2)" in err


def test_capacity_nonconvergence(capsys, monkeypatch):
    def fail(*a, **k):
        raise ConvergenceError("did not settle")

    monkeypatch.setattr(cli, "solve_capacity", fail)
    code, _, err = run(capsys, "capacity", "--rp", "1", "--rm", "0.5")
    assert code == 2 and "did not settle" in err


def test_kkt_check_failure_and_invalid(tmp_path, capsys):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"r_p": 1.2, "r_m": 0.8, "atoms": [{"x1": 1.2, "mass": 1.0}]}))
    code, out, _ = run(capsys, "kkt-check", "--dist", str(pair))
    assert code == 1 and json.loads(out)["passed"] is False
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"r_p": 1.0, "r_m": 0.5, "atoms": [{"x1": 0.5, "mass": 0.9}]}))
    code, _, err = run(capsys, "kkt-check", "--dist", str(bad))
    assert code == 1 and "deficit" in err
    code, _, _ = run(capsys, "kkt-check", "--dist", str(tmp_path / "missing.json"))
    assert code == 1
    (tmp_path / "junk.json").write_text("{not json")
    code, _, _ = run(capsys, "kkt-check", "--dist", str(tmp_path / "junk.json"))
    assert code == 1


def test_boundary_and_waterfilling(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(capsys, "boundary", "--kind", "two-point", "--rp-min", "0.1", "--rp-max", "1", "--n", "4", "--csv", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r_p,r_m" and len(lines) == 5
    code, text, _ = run(capsys, "boundary", "--kind", "waterfilling", "--rp-min", "0.5", "--rp-max", "1", "--n", "2")
    assert text == "r_p,r_m\n0.5,0.4472135955\n1,0.707106781187\n"
    code, text, _ = run(capsys, "waterfilling", "--rp", "1", "--rm", "1")
    doc = json.loads(text)
    assert (doc["p1"], doc["p2"], doc["nu"]) == pytest.approx((0.5, 0.5, 1.5))
    code, text, _ = run(capsys, "waterfilling", "--n", "3")
    assert code == 0 and len(text.splitlines()) == 4
    code, _, err = run(capsys, "boundary", "--kind", "two-point", "--rp-min", "1", "--rp-max", "0.5")
    assert code == 1 and err


def test_mc_verify_and_bits(tmp_path, capsys):
    dist = tmp_path / "pair.json"
    dist.write_text(json.dumps({"r_p": 0.8, "r_m": 0.3, "atoms": [{"x1": 0.8, "mass": 1.0}]}))
    code, out, _ = run(capsys, "mc-verify", "--dist", str(dist), "--samples", "20000", "--seed", "3")
    assert code == 0
    nats = json.loads(out)
    code, out, _ = run(capsys, "--bits", "mc-verify", "--dist", str(dist), "--samples", "20000", "--seed", "3")
    bits = json.loads(out)
    assert bits["units"] == "bits"
    assert bits["value"] == pytest.approx(nats["value"] / math.log(2), rel=1e-15)
    assert bits["stderr"] == pytest.approx(nats["stderr"] / math.log(2), rel=1e-15)
    assert bits["samples"] == nats["samples"] == 20000
    code, _, _ = run(capsys, "mc-verify", "--dist", str(dist), "--samples", "10")
    assert code == 1


def test_figure1(tmp_path, capsys):
    code, _, _ = run(capsys, "figure1", "--n", "51", "--out", str(tmp_path / "fig"))
    assert code == 0
    blue = np.loadtxt(tmp_path / "fig" / "two_point_boundary.csv", delimiter=",", skiprows=1)
    table = load_table("two_point_boundary_table.csv")
    assert np.max(np.abs(blue[:, 1] - table[:, 1])) <= 2e-3
    magenta = np.loadtxt(tmp_path / "fig" / "waterfilling_boundary.csv", delimiter=",", skiprows=1)
    assert magenta.shape == (100, 2)
    assert (tmp_path / "fig" / "diagonal.csv").read_text().startswith("r_p,r_m\n")


def test_byte_identical_reruns(tmp_path, capsys):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        run(capsys, "capacity", "--rp", "1.2", "--rm", "0.8", "--json", str(d / "c.json"))
        run(capsys, "figure1", "--n", "11", "--n-waterfilling", "7", "--out", str(d / "fig"))
        run(capsys, "mc-verify", "--dist", str(d / "c.json"), "--samples", "5000", "--seed", "9", "--json", str(d / "mc.json"))
        outs.append({p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()})
    assert len(outs[0]) == 6
    assert outs[0] == outs[1]


@pytest.mark.skipif(shutil.which("peakcap") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["peakcap", "reduce", "--h", "2", "0", "0", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "r_p=2 r_m=1"
