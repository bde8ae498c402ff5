import csv
import json
import math

import pytest

from striplab.cli import EXIT_DIVERGENCE, EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_eval_kernel_feller(tmp_path):
    code, out = run(tmp_path, "eval-kernel", "--kernel", "feller", "--eta-side", "upper",
                    "--start", "0", "--stop", "2", "--step", "1", "--svg")
    assert code == EXIT_OK
    rows = read_csv(out / "kernel_feller.csv")
    assert [float(r["u"]) for r in rows] == [0.0, 1.0, 2.0]
    assert float(rows[0]["value"]) == pytest.approx(1 / (8 * math.pi), rel=1e-15)
    m = json.loads((out / "manifest.json").read_text())
    assert set(m["artifacts"]) == {"kernel_feller.csv", "kernel_feller.svg"}
    assert m["exit_code"] == 0 and m["params"]["kernel"] == "feller"


def test_eval_kernel_poisson_grid(tmp_path):
    code, out = run(tmp_path, "eval-kernel", "--kernel", "poisson")
    assert code == EXIT_OK
    assert len(read_csv(out / "kernel_poisson.csv")) == 17


@pytest.mark.parametrize("argv", [
    ["eval-kernel", "--kernel", "bogus"],
    ["eval-kernel", "--kernel", "h", "--start", "0"],
    ["energy", "--form", "A2", "--lower", "nope(1)"],
    ["acceptance", "--criteria", "11"],
    ["acceptance", "--tolerance", "6.bogus=1"],
    ["frobnicate"],
])
def test_usage_errors(tmp_path, argv):
    assert run(tmp_path, *argv)[0] == EXIT_USAGE


def test_energy_values_and_divergence(tmp_path):
    code, out = run(tmp_path, "energy", "--form", "A0", "--upper", "gauss(1)")
    assert code == EXIT_OK
    doc = json.loads((out / "energy.json").read_text())
    assert doc["results"]["value"] == pytest.approx(0.19947114020071635, rel=1e-14)
    assert run(tmp_path, "energy", "--form", "Ainf", "--lower", "indicator(0,1)")[0] == EXIT_DIVERGENCE


def test_feller_check_default_pair(tmp_path):
    code, out = run(tmp_path, "feller-check")
    assert code == EXIT_OK
    doc = json.loads((out / "feller.json").read_text())
    assert doc["results"]["relative_gap"] < 1e-6
    assert run(tmp_path, "feller-check", "--alphas", "1,2", "--gap-tol", "1e-6")[0] == EXIT_TOLERANCE


def test_mosco_scan_outputs(tmp_path):
    code, out = run(tmp_path, "mosco-scan", "--target", "inf", "--schedule", "1,4", "--R", "4", "--m", "33")
    assert code == EXIT_OK
    assert len(read_csv(next(out.glob("*.csv")))) == 2
    assert list(out.glob("*.svg"))
    assert run(tmp_path, "mosco-scan", "--schedule", "1", "--R", "4", "--m", "33", "--max-gap", "1e-9")[0] \
        == EXIT_TOLERANCE


def test_simulate_exit_is_deterministic(tmp_path):
    argv = ["simulate", "--mode", "exit", "--n-paths", "500", "--dt", "1e-3", "--seed", "4"]
    c1, o1 = run(tmp_path / "a", *argv)
    c2, o2 = run(tmp_path / "b", *argv)
    assert c1 == c2 == EXIT_OK
    assert (o1 / "exit_samples.csv").read_bytes() == (o2 / "exit_samples.csv").read_bytes()
    m1 = json.loads((o1 / "manifest.json").read_text())
    m2 = json.loads((o2 / "manifest.json").read_text())
    assert m1["artifacts"] == m2["artifacts"]


def test_simulate_excursions(tmp_path):
    code, out = run(tmp_path, "simulate", "--mode", "excursions", "--n-paths", "1", "--dt", "1e-3",
                    "--horizon", "200")
    assert code == EXIT_OK
    rows = read_csv(out / "excursions.csv")
    assert rows and all(abs(float(r["end_x1"]) - float(r["start_x1"])) > 1 for r in rows)
    doc = json.loads((out / "excursion_report.json").read_text())
    assert doc["errors"]  # too few records for the law comparison


def test_config_overlay(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kernel": "k2", "ell": 2.0, "start": 1.0, "stop": 1.0}))
    code, out = run(tmp_path, "eval-kernel", "--config", str(cfg), "--ell", "1")
    assert code == EXIT_OK
    (row,) = read_csv(out / "kernel_k2.csv")
    # explicit flag wins over the config value
    assert float(row["value"]) == pytest.approx(1 / (math.cosh(1.0) - 1), rel=1e-14)
    cfg.write_text(json.dumps({"kernel": "k2", "colour": "red"}))
    assert run(tmp_path, "eval-kernel", "--config", str(cfg))[0] == EXIT_USAGE
    cfg.write_text(json.dumps({"kernel": "bogus"}))
    assert run(tmp_path, "eval-kernel", "--config", str(cfg))[0] == EXIT_USAGE


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("STRIPLAB_OUT", str(tmp_path / "env"))
    assert main(["eval-kernel", "--kernel", "k1", "--start", "0", "--stop", "0"]) == EXIT_OK
    assert (tmp_path / "env" / "kernel_k1.csv").exists()


def test_acceptance_subset_and_failing_tolerance(tmp_path):
    code, out = run(tmp_path, "acceptance", "--criteria", "1,10")
    assert code == EXIT_OK
    doc = json.loads((out / "acceptance.json").read_text())
    assert doc["results"]["passed"] and [c["number"] for c in doc["results"]["criteria"]] == [1, 10]
    code, out = run(tmp_path, "acceptance", "--criteria", "1", "--tolerance", "1.rel=1e-12")
    assert code == EXIT_TOLERANCE
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == EXIT_TOLERANCE
