"""Regenerate scenarios/*.json from the published BDT rate grids.

The raw yield histories behind the six reference dates are not available, so
each config carries a ``direct_input`` block: the market view (y(k), beta(k))
implied by the published BDT tree, read back through ``extract_market_view``.
Calibrating on that input reproduces the published tree (see the tests).

    python demos/build_scenario_configs.py
"""

import datetime as dt
import json
from pathlib import Path

from zbdt import BdtLattice, extract_market_view
from zbdt.market_data import CalibrationInput

ROOT = Path(__file__).resolve().parents[1]
TABLES = ROOT / "tests" / "data" / "reference_tables.json"


def market_view_from_grid(grid_pct, as_of):
    lat = BdtLattice([[r / 100 for r in level] for level in grid_pct])
    mv = extract_market_view(lat)
    return CalibrationInput(mv.entries, as_of=as_of, window=mv.window)


def main():
    tables = json.loads(TABLES.read_text())
    out_dir = ROOT / "scenarios"
    out_dir.mkdir(exist_ok=True)
    for label, tab in tables.items():
        as_of = dt.date.fromisoformat(tab["date"])
        mv = market_view_from_grid(tab["bdt_rates"], as_of)
        config = {
            "name": f"scenario_{label}",
            "direct_input": mv.to_dict(),
            "zbdt": {"p": 0.02, "q": 0.07, "x0": 0.0025},
            "option": {"strikes": list(range(80, 100)), "exercise": 2, "maturity": 5},
            "outputs": ["market_view", "options", "bonds", "rates"],
        }
        path = out_dir / f"scenario_{label}.json"
        path.write_text(json.dumps(config, indent=2) + "\n")
        print(f"{path.name}: y = {[round(e.y, 6) for e in mv.entries]}")


if __name__ == "__main__":
    main()
