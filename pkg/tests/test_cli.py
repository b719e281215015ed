import json

import pytest

from spinc_lab import cli
from spinc_lab.report import strip_timing


def run_main(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list_scenarios(capsys):
    code, out, _ = run_main(["list-scenarios"], capsys)
    assert code == 0 and "torus2-flat" in out and "cylinder-sphere-cone" in out
    code, out, _ = run_main(["list-scenarios", "--json"], capsys)
    rows = json.loads(out)
    assert {"name", "dim", "signature", "backends", "reference"} <= set(rows[0])


def test_verify_gauss_exit_zero(tmp_path, capsys):
    out = tmp_path / "g.json"
    code, _, err = run_main(["verify", "gauss", "--immersion", "sphere2-in-r3", "--samples", "100",
                             "--seed", "7", "--tol", "1e-5", "--out", str(out)], capsys)
    assert code == 0, err
    body = json.loads(out.read_text())
    assert body["summary"]["all_passed"] and len(body["checks"][0]["samples"]) == 100
    assert body["checks"][0]["anchor"]


def test_failure_exit_two(tmp_path, capsys):
    code, _, _ = run_main(["verify", "gauss", "--seed", "1", "--samples", "3", "--tol", "1e-20",
                           "--out", str(tmp_path / "f.json")], capsys)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["verify", "gauss", "--immersion", "klein-bottle", "--seed", "1"],
    ["verify", "gauss", "--samples", "3"],
    ["spectrum", "--scenario", "no-such", "--grid", "8"],
    ["spectrum", "--scenario", "torus2-flat", "--grid", "4"],
    ["bound", "--scenario", "torus2-flat", "--flux", "2"],
])
def test_infra_errors_exit_one(argv, capsys):
    code, _, err = run_main(argv, capsys)
    assert code == 1 and err.startswith("error:")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"immersion": "sphere2-in-r3", "samples": 4, "seed": 3}))
    out = tmp_path / "r.json"
    code, _, _ = run_main(["verify", "dirac-gauss", "--config", str(cfg), "--samples", "2",
                           "--out", str(out)], capsys)
    assert code == 0
    body = json.loads(out.read_text())
    assert body["config"]["samples"] == 2 and body["config"]["scenario"] == "sphere2-in-r3"


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 1, "colour": "red"}))
    code, _, err = run_main(["verify", "gauss", "--config", str(cfg)], capsys)
    assert code == 1 and "colour" in err


def test_workers_env(monkeypatch, capsys, tmp_path):
    monkeypatch.setenv(cli.WORKERS_ENV, "zero")
    code, _, _ = run_main(["verify", "gauss", "--seed", "1", "--samples", "2"], capsys)
    assert code == 1
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    out = tmp_path / "w.json"
    code, _, _ = run_main(["verify", "gauss", "--seed", "1", "--samples", "2", "--out", str(out)], capsys)
    assert code == 0 and json.loads(out.read_text())["timing"]["workers"] == 3


def test_stdout_and_csv_format(capsys):
    code, out, _ = run_main(["verify", "morel", "--seed", "2", "--samples", "2", "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("name,residual") and len(lines) == 4


def test_same_seed_same_report(tmp_path, capsys):
    texts = []
    for _ in range(2):
        p = tmp_path / "d.json"
        run_main(["verify", "curvature-commutator", "--seed", "11", "--samples", "5", "--out", str(p)], capsys)
        texts.append(strip_timing(p.read_text()))
    assert texts[0] == texts[1]
    p2 = tmp_path / "d.json"
    run_main(["verify", "curvature-commutator", "--seed", "12", "--samples", "5", "--out", str(p2)], capsys)
    assert strip_timing(p2.read_text()) != texts[0]


def test_bound_lists_three_zero_modes(tmp_path, capsys):
    out = tmp_path / "b.json"
    code, _, _ = run_main(["bound", "--scenario", "torus-magnetic", "--flux", "3", "--grid", "24",
                           "--eigs", "8", "--out", str(out)], capsys)
    assert code == 0
    assert len(json.loads(out.read_text())["data"]["zero_modes"]) == 3


def test_spectrum_dumps(tmp_path, capsys):
    csv = tmp_path / "ev.csv"
    vec = tmp_path / "vec.csv"
    op = tmp_path / "op.bin"
    code, out, _ = run_main(["spectrum", "--scenario", "torus2-flat", "--grid", "16", "--eigs", "4",
                             "--csv", str(csv), "--dump-eigenvectors", str(vec), "--dump-operator", str(op)],
                            capsys)
    assert code == 0
    assert len(csv.read_text().splitlines()) == 5
    assert len(vec.read_text().splitlines()) == 257
    assert op.stat().st_size == (256 * 2) ** 2 * 16


def test_variation_and_frkim_commands(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, _, err = run_main(["variation", "--scenario", "torus2-flat", "--k", "conformal", "--psi", "plane:1,0",
                             "--grid", "12", "--calibrate", "--out", str(out)], capsys)
    assert code == 0, err
    body = json.loads(out.read_text())
    assert body["data"]["calibration"]["resolved"] == 1
    assert body["data"]["variation"]["spinor_reading"] == "l2-unitary"
    code, _, err = run_main(["frkim", "--scenario", "torus2-flat", "--eps", "1", "--lambda", "auto",
                             "--grid", "8", "--out", str(tmp_path / "f.json")], capsys)
    assert code == 0, err
