"""
Scenarios and the command line
==============================

Scenario documents describe a full pipeline: problem, solver, t-grid,
basis and tolerances. The same runs are available from the shell:

    heatcontent scenario list
    heatcontent scenario run halfline-dirichlet-a05 robin-a-1
    heatcontent coeffs --alpha 0.5 --bc dirichlet
    heatcontent verify --alpha-grid "-1:1.9:0.1"
"""
import json

from heatcontent import load_scenario, run_scenario
from heatcontent.cli import main
from heatcontent.scenario import bundled_names, bundled_scenario

print("bundled:", ", ".join(bundled_names()))

config = bundled_scenario("robin-a-1")
print("\nrobin-a-1 config:")
print(json.dumps(config, indent=2))

report = run_scenario(load_scenario(config))
print("\nreport:", "pass" if report.passed else "FAIL")
for c in report.comparisons:
    print(f"  {c.term}: rel error {c.rel_error:.2e} (tolerance {c.tolerance:g})")

print("\nexit code of `heatcontent coeffs --alpha 0`:")
code = main(["coeffs", "--alpha", "0"])
print("->", code)
