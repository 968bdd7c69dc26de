import copy
import json

import numpy as np
import pytest

from heatcontent import scenario as scen
from heatcontent.errors import ConvergenceError, ValidationError
from heatcontent.specfun import EULER_GAMMA

NAMES = scen.bundled_names()


@pytest.fixture(scope="module")
def reports():
    return {name: scen.run_scenario(name) for name in NAMES}


def test_bundled_set():
    assert set(NAMES) == {
        "alpha1-log", "factorized-pair", "halfline-dirichlet-a-05", "halfline-dirichlet-a05",
        "halfline-dirichlet-a15", "product-circle", "recursion", "robin-a-05", "robin-a-1",
        "warped-interval-a05",
    }


@pytest.mark.parametrize("name", NAMES)
def test_bundled_scenario_passes(reports, name):
    r = reports[name]
    assert r.passed, r.to_json()
    assert r.anchor
    assert r.passed == all(c.rel_error <= c.tolerance for c in r.comparisons)


def test_halfline_a05_b0(reports):
    comp = {c.term: c for c in reports["halfline-dirichlet-a05"].comparisons}
    assert comp["b0"].rel_error <= 1e-3


def test_alpha1_log0(reports):
    r = reports["alpha1-log"]
    comp = {c.term: c for c in r.comparisons}
    assert comp["log0"].fitted == pytest.approx(-0.5, abs=1e-3)
    # the merged constant is the regularised interior term plus gamma / 2
    merged = next(c for c in r.comparisons if c.exponent == 0.0 and not c.is_log)
    problem = scen.load_scenario(scen.bundled_scenario("alpha1-log")).problem
    ireg = scen.interior_pairings(problem, 0)[0]
    assert merged.analytic == pytest.approx(EULER_GAMMA / 2 + ireg, abs=1e-12)


def test_report_json_is_deterministic(reports):
    a = reports["product-circle"].to_json()
    b = scen.run_scenario("product-circle").to_json()
    assert a == b
    d = json.loads(a)
    assert "runtime" not in d and d["passed"] is True
    assert "runtime" in json.loads(reports["product-circle"].to_json(timing=True))


def test_report_without_comparisons_fails():
    r = scen.Report("x", "", "expansion", "spectral", [])
    assert not r.passed


def _config(name="halfline-dirichlet-a05", **changes):
    cfg = copy.deepcopy(scen.bundled_scenario(name))
    cfg.update(changes)
    return cfg


@pytest.mark.parametrize("changes,field", [
    ({"tolerances": {"b0": -1e-3}}, "tolerances.b0"),
    ({"tolerances": {"b9": 1e-3}}, "tolerances.b9"),
    ({"tolerances": {"b3": 1e-3}}, "tolerances.b3"),
    ({"kind": "mystery"}, "kind"),
    ({"method": "euler"}, "method"),
    ({"alpha": 2.5}, "alpha"),
    ({"name": ""}, "name"),
    ({"colour": "blue"}, "colour"),
    ({"basis": {"k_max": 9, "n_max": 1}}, "basis.k_max"),
    ({"t_grid": {"start": 1e-3, "stop": 1e-2, "num": 40}}, "t_grid"),
    ({"t_grid": {"start": 1e-6, "stop": 1e-2, "num": 3}}, "t_grid.num"),
    ({"t_grid": [0.1, 0.05]}, "t_grid"),
    ({"rho": {"smooth": [2.0]}}, "rho"),
    ({"phi": {"smooth": []}}, "phi.smooth"),
    ({"phi": {"smooth": [1.0], "shape": 1}}, "phi.shape"),
    ({"manifold_factor": -1.0}, "manifold_factor"),
])
def test_validation_names_field(changes, field):
    with pytest.raises(ValidationError) as info:
        scen.load_scenario(_config(**changes))
    assert info.value.field == field


def test_load_from_text_and_path(tmp_path):
    cfg = _config()
    text = json.dumps(cfg)
    path = tmp_path / "s.json"
    path.write_text(text)
    a, b, c = scen.load_scenario(cfg), scen.load_scenario(text), scen.load_scenario(str(path))
    assert a.name == b.name == c.name
    np.testing.assert_array_equal(a.t_grid, c.t_grid)


def test_default_grid_is_forty_geometric_points():
    cfg = _config()
    del cfg["t_grid"]
    sc = scen.load_scenario(cfg)
    assert sc.t_grid.size == 40
    assert sc.t_grid[0] == pytest.approx(1e-6) and sc.t_grid[-1] == pytest.approx(1e-2)


def test_manifold_factor_scales_both_sides():
    base = scen.run_scenario(_config())
    scaled = scen.run_scenario(_config(manifold_factor=3.0))
    for c0, c1 in zip(base.comparisons, scaled.comparisons):
        assert c1.fitted == pytest.approx(3 * c0.fitted, rel=1e-12)
        assert c1.analytic == pytest.approx(3 * c0.analytic, rel=1e-12)


def test_run_error_carries_scenario(monkeypatch):
    def boom(*args, **kw):
        raise ConvergenceError("no luck")

    monkeypatch.setattr(scen.solver, "halfline_heat_content", boom)
    with pytest.raises(scen.ScenarioRunError) as info:
        scen.run_scenario("halfline-dirichlet-a05")
    assert info.value.scenario == "halfline-dirichlet-a05"
    assert isinstance(info.value.cause, ConvergenceError)


def test_unknown_bundled_name():
    with pytest.raises(ValidationError):
        scen.bundled_scenario("nope")
