import csv
import json

import numpy as np
import pytest

from monolev import cli
from monolev import measure as ms


@pytest.fixture
def files(tmp_path):
    def w(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)
    return {
        "bm": w("bm.json", {"pair": {"a": 0, "rho": {"atoms": [[0, 1]]}}, "seed": 3}),
        "drift": w("drift.json", {"pair": {"a": 0.7}}),
        "trivial": w("trivial.json", {"pair": {"a": 0}}),
        "bern": w("bern.json", {"atoms": [[-1, 0.5], [1, 0.5]]}),
        "dir": tmp_path,
    }


def _rows(text):
    return [r for r in csv.reader(l for l in text.splitlines() if not l.startswith("#"))]


def test_evolve_writes_arcsine(files):
    out = files["dir"] / "ev"
    assert cli.run(["evolve", "--pair", files["bm"], "--times", "0.5,1",
                    "--grid=-1.6:1.6:1601", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["density_000_t0.5.csv", "density_001_t1.0.csv"]
    mu = ms.from_csv((out / names[1]).read_text())
    sel = np.abs(mu.x) <= 0.95 * np.sqrt(2)
    assert np.max(np.abs(mu.density[sel] - ms.arcsine_density(mu.x[sel]))) <= 2e-3


def test_convolve_writes_json_and_csv(files):
    pre = files["dir"] / "bb"
    assert cli.run(["convolve", "--mu", files["bern"], "--nu", files["bern"], "--out", str(pre)]) == 0
    mu = ms.from_dict(json.loads((pre.parent / "bb.json").read_text()))
    assert ms.moment(mu, 2) == pytest.approx(2.0, abs=1e-6)
    assert (pre.parent / "bb.csv").exists()


def test_kernel_to_stdout(files, capsys):
    assert cli.run(["kernel", "--pair", files["drift"], "--t", "1", "--x", "0.5"]) == 0
    mu = ms.from_csv(capsys.readouterr().out)
    assert mu.atom_pos == pytest.approx([-0.2])


def test_drift_paths_are_constant_velocity(files, capsys):
    assert cli.run(["path", "--pair", files["drift"], "--times", "0.5,1,2", "--n", "3"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["path_id", "t", "x"]
    for _, t, x in rows[1:]:
        assert float(x) == pytest.approx(-0.7 * float(t), abs=1e-6)


def test_paths_are_byte_identical_per_seed(files):
    outs = []
    for i in range(2):
        p = files["dir"] / f"p{i}.csv"
        assert cli.run(["path", "--pair", files["bm"], "--times", "0.5,1", "--n", "20",
                        "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    p = files["dir"] / "p2.csv"
    cli.run(["path", "--pair", files["bm"], "--times", "0.5,1", "--n", "20", "--seed", "4",
             "--out", str(p)])
    assert p.read_bytes() != outs[0]


def test_moments(files, capsys):
    assert cli.run(["moments", "--pair", files["bm"], "--t", "1", "--kmax", "4"]) == 0
    rows = _rows(capsys.readouterr().out)[1:]
    assert [float(r[1]) for r in rows] == pytest.approx([1, 0, 1, 0, 1.5], abs=1e-4)
    assert max(float(r[3]) for r in rows) <= 1e-3


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["kernel", "--pair", "missing.json", "--t", "1", "--x", "0"],
    ["moments", "--pair", "PAIR", "--t", "1", "--kmax", "30"],
    ["evolve", "--pair", "PAIR", "--times", "-1", "--out", "o"],
    ["evolve", "--pair", "PAIR", "--times", "1", "--grid", "1:0:5", "--out", "o"],
])
def test_input_errors_exit_1(files, argv):
    argv = [files["bm"] if a == "PAIR" else a for a in argv]
    assert cli.run(argv) == 1


def test_trivial_pair_exit_1(files):
    assert cli.run(["kernel", "--pair", files["trivial"], "--t", "1", "--x", "0"]) == 1


def test_numerical_failure_exit_3(files):
    # a grid too narrow to hold the arcsine loses mass in the inversion
    assert cli.run(["evolve", "--pair", files["bm"], "--times", "1", "--grid=-0.5:0.5:101",
                    "--out", str(files["dir"] / "n")]) == 3


def test_verify_errata_report(files, monkeypatch, capsys):
    monkeypatch.setenv("MONOLEV_THREADS", "2")
    out = files["dir"] / "r.json"
    assert cli.run(["verify", "--suite", "errata", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["failed"] == 0 and rep["checks"] == len(rep["results"]) > 0
    printed = [r for r in rep["results"] if r["name"].startswith("printed")]
    assert printed and all(r["relation"] == "gt" and r["value"] > r["tolerance"] for r in printed)


def test_verify_unmet_tolerance_exit_2(files):
    cfg = files["dir"] / "tight.json"
    cfg.write_text(json.dumps({"tolerances": {"oracle_agreement": 1e-15}}))
    assert cli.run(["verify", "--suite", "errata", "--config", str(cfg),
                    "--out", str(files["dir"] / "t.json")]) == 2


def test_atomic_write_leaves_no_temporaries(tmp_path):
    p = tmp_path / "sub" / "x.txt"
    cli.atomic_write(p, "a")
    cli.atomic_write(p, "b")
    assert p.read_text() == "b"
    assert [q.name for q in p.parent.iterdir()] == ["x.txt"]
