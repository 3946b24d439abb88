"""Why the rail lattice cannot fit the reference market views at p=0.02, q=0.07.

At every step the calibration must match the variance of the time-1 log
yields (measured against the rail yield) to beta(n)^2.  With a rail at
x0 = 0.25% and yields of a few percent, the log-ratios to the rail are large,
and the ternary branch puts a floor of roughly p(1-p)l^2 under that variance.
This script prints, per scenario, the first step whose target lies outside
the attainable range, then shows how the picture changes under the opt-in
"variance" reading of beta and a smaller jump probability.

    python demos/rail_feasibility.py
"""

import json
from pathlib import Path

import numpy as np

from zbdt import CalibrationError, ZbdtParams, calibrate_zbdt
from zbdt.scenarios import load_config

ROOT = Path(__file__).resolve().parents[1]
REFERENCE = json.loads((ROOT / "tests" / "data" / "reference_tables.json").read_text())


def attempt(view, params, role):
    try:
        return calibrate_zbdt(view, params, beta_role=role), None
    except CalibrationError as exc:
        return None, exc


def main():
    nominal = ZbdtParams(0.02, 0.07, 0.0025)
    alt = ZbdtParams(0.0025, 0.05, 0.0025)
    for label, ref in REFERENCE.items():
        view = load_config(ROOT / "scenarios" / f"scenario_{label}.json").direct_input
        print(f"== scenario {label}")
        _, err = attempt(view, nominal, "stdev")
        print(f"  nominal parameters: {err}" if err else "  nominal parameters: calibrated")
        lat, err = attempt(view, alt, "variance")
        if err:
            print(f"  variance reading, p=0.0025, q=0.05: {err}")
            continue
        gap = max(np.max(np.abs(lvl * 100 - row)) for lvl, row in zip(lat.rates, ref["zbdt_rates"]))
        print(f"  variance reading, p=0.0025, q=0.05: worst rate gap to the reference grid {gap:.3f}pp")


if __name__ == "__main__":
    main()
