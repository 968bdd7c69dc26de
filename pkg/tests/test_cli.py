import json
import math
import shutil
import subprocess
import sys
from importlib import resources

import pytest

from heatcontent import cli
from heatcontent.scenario import bundled_scenario

DATA = resources.files("heatcontent") / "data"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _scenario_file(tmp_path, name, **changes):
    cfg = dict(bundled_scenario(name))
    cfg.update(changes)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    return path


def test_coeffs_unit_jet(capsys):
    code, out, _ = run(capsys, "coeffs", "--alpha", "0", "--bc", "dirichlet")
    assert code == 0
    assert json.loads(out)["b0"] == pytest.approx(-2 / math.sqrt(math.pi), rel=1e-15)


def test_coeffs_jet_file_and_complex_alpha(capsys, tmp_path):
    jet = tmp_path / "jet.json"
    jet.write_text(json.dumps({"phi0": 2.0, "rho0": 1.5}))
    code, out, _ = run(capsys, "coeffs", "--alpha", "0", "--jet", str(jet))
    assert code == 0
    assert json.loads(out)["b0"] == pytest.approx(-6 / math.sqrt(math.pi))
    code, out, _ = run(capsys, "coeffs", "--alpha", "0.3+0.2j", "--bc", "robin")
    assert code == 0 and "b1" in json.loads(out)


def test_coeffs_pole_is_numerical_failure(capsys):
    code, _, err = run(capsys, "--error-json", "coeffs", "--alpha", "2")
    assert code == 3
    assert json.loads(err)["error"] == "PoleError"


def test_verify_grid(capsys):
    code, out, _ = run(capsys, "verify", "--alpha-grid", "-1:1.9:0.1")
    assert code == 0
    rows = [line.split() for line in out.splitlines()[1:] if not line.strip().startswith(("notice", "dirichlet"))]
    residuals = [float(r[3]) for r in rows if len(r) >= 5 and r[4] == "pass"]
    assert len(residuals) > 20 and max(residuals) <= 1e-10
    assert "notice" in out


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--alpha-grid", "0.25,0.5", "--json")
    assert code == 0
    reports = json.loads(out)
    assert len(reports) == 2 and all(r["passed"] for r in reports)


@pytest.mark.parametrize("spec,expected", [
    ("-1:1:0.5", [-1.0, -0.5, 0.0, 0.5, 1.0]),
    ("0.1,0.2", [0.1, 0.2]),
    ("-1:1.9:0.1", None),
])
def test_parse_alpha_grid(spec, expected):
    grid = cli.parse_alpha_grid(spec)
    if expected is None:
        assert len(grid) == 30 and grid[-1] == 1.9
    else:
        assert grid == expected


def test_fit_reproduces_shipped_report(capsys):
    with resources.as_file(DATA / "halfline-dirichlet-a05.csv") as csv_path:
        code, out, _ = run(capsys, "fit", "--samples", str(csv_path), "--alpha", "0.5", "--kmax", "2", "--nmax", "1")
    assert code == 0
    assert out == (DATA / "halfline-dirichlet-a05.fit.json").read_text()


def test_simulate_reproduces_shipped_samples(capsys, tmp_path):
    out_csv = tmp_path / "s.csv"
    code, _, _ = run(capsys, "simulate", "--scenario", "halfline-dirichlet-a05", "--out", str(out_csv))
    assert code == 0
    assert out_csv.read_bytes() == (DATA / "halfline-dirichlet-a05.csv").read_bytes()


def test_regularize(capsys):
    code, out, _ = run(capsys, "regularize", "--scenario", "halfline-dirichlet-a05")
    assert code == 0
    # phi = rho = 1 at alpha = 0.5: the plain integral of r**-0.5
    assert json.loads(out)["i_reg"] == pytest.approx(2.0, rel=1e-12)


def test_scenario_run_and_determinism(capsys):
    code, first, err = run(capsys, "scenario", "run", "halfline-dirichlet-a05")
    assert code == 0 and "pass" in err
    report = json.loads(first)
    assert report["passed"] and report["anchor"]
    assert "runtime" not in report
    _, second, _ = run(capsys, "scenario", "run", "halfline-dirichlet-a05")
    assert first == second


def test_scenario_batch_threads(capsys, monkeypatch):
    monkeypatch.setenv("HEATCONTENT_THREADS", "2")
    code, out, _ = run(capsys, "scenario", "run", "halfline-dirichlet-a05", "product-circle")
    assert code == 0
    assert [r["scenario"] for r in json.loads(out)] == ["halfline-dirichlet-a05", "product-circle"]
    monkeypatch.setenv("HEATCONTENT_THREADS", "many")
    code, _, _ = run(capsys, "scenario", "run", "product-circle")
    assert code == 2


def test_scenario_list(capsys):
    code, out, _ = run(capsys, "scenario", "list")
    names = out.split()
    assert code == 0 and "alpha1-log" in names and len(names) == 10


def test_negative_tolerance_names_field(capsys, tmp_path):
    path = _scenario_file(tmp_path, "halfline-dirichlet-a05", tolerances={"b0": -1e-3})
    code, _, err = run(capsys, "--error-json", "scenario", "run", str(path))
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "validation" and payload["field"] == "tolerances.b0"


def test_failed_comparison_exit_code(capsys, tmp_path):
    path = _scenario_file(tmp_path, "halfline-dirichlet-a05", tolerances={"b0": 1e-16, "interior0": 1e-16})
    code, out, _ = run(capsys, "scenario", "run", str(path))
    assert code == 1
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize("argv,code", [
    ([], 2),
    (["frobnicate"], 2),
    (["coeffs"], 2),
    (["coeffs", "--alpha", "abc"], 2),
    (["fit", "--samples", "/nonexistent.csv", "--alpha", "0.5"], 2),
    (["scenario", "run", "/nonexistent.json"], 2),
])
def test_usage_errors(capsys, argv, code):
    got, _, err = run(capsys, *argv, "--error-json")
    assert got == code
    assert json.loads(err)["exit_code"] == code


def test_malformed_json(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, _ = run(capsys, "scenario", "run", str(path))
    assert code == 2


def test_plot_files(capsys, tmp_path):
    prefix = tmp_path / "fig"
    with resources.as_file(DATA / "halfline-dirichlet-a05.csv") as csv_path:
        code, _, _ = run(capsys, "fit", "--samples", str(csv_path), "--alpha", "0.5", "--plot", str(prefix))
    assert code == 0
    dat = (tmp_path / "fig.dat").read_text().splitlines()
    assert dat[0] == "# t beta err fit" and len(dat) == 41
    assert "plot 'fig.dat'" in (tmp_path / "fig.gp").read_text()


@pytest.mark.skipif(shutil.which("heatcontent") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["heatcontent", "coeffs", "--alpha", "0"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["b0"] == pytest.approx(-2 / math.sqrt(math.pi))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heatcontent.cli", "scenario", "list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "recursion" in proc.stdout
