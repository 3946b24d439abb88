"""Recalibrate the binomial lattice for each shipped scenario and compare.

Each scenario config carries the market view read back from a reference BDT
grid.  Calibrating on it should return the same grid up to the 2-decimal
rounding of the reference, and the option table should follow.

    python demos/reproduce_bdt.py [I II ...]
"""

import json
import sys
from pathlib import Path

import numpy as np

from zbdt import calibrate_bdt, option_table, price_bond
from zbdt.report import grid_text, rate_grid
from zbdt.scenarios import load_config

ROOT = Path(__file__).resolve().parents[1]
REFERENCE = json.loads((ROOT / "tests" / "data" / "reference_tables.json").read_text())


def show(label):
    cfg = load_config(ROOT / "scenarios" / f"scenario_{label}.json")
    lat = calibrate_bdt(cfg.direct_input)
    ref = REFERENCE[label]
    print(f"== scenario {label} ({ref['date']})")
    print(grid_text(rate_grid(lat)))

    rate_err = max(np.max(np.abs(lvl * 100 - row)) for lvl, row in zip(lat.rates, ref["bdt_rates"]))
    bonds = price_bond(lat, 5)
    bond_err = max(np.max(np.abs(bonds.layers[i] - row)) for i, row in enumerate(ref["bdt_bonds"]))
    print(f"worst rate gap {rate_err:.4f}pp, worst bond gap {bond_err:.4f}")

    rows = option_table(lat, None, cfg.strikes)
    print(" strike   price  ref price      iv  ref iv")
    for r, (k, p_ref, v_ref, *_) in zip(rows, ref["options"]):
        flag = "  <--" if abs(r["bdt_iv"] - v_ref) > 0.01 else ""
        print(f"{k:7.0f} {r['bdt_price']:7.4f} {p_ref:10.4f} {r['bdt_iv']:7.4f} {v_ref:7.4f}{flag}")
    print()


if __name__ == "__main__":
    for label in sys.argv[1:] or list(REFERENCE):
        show(label)
