"""End to end from a daily yield file: volatilities, both lattices, option quotes.

No market history ships with the package, so the script writes a synthetic
CSV first (iid log noise around a fixed upward-sloping curve), then runs the
same path the CLI takes for an ``as_of`` config.  The rail model needs a
small jump probability to fit this curve.

    python demos/from_yield_history.py [out_dir]
"""

import datetime as dt
import math
import sys
from pathlib import Path

import numpy as np

from zbdt import ZbdtParams
from zbdt.market_data import parse_yield_csv
from zbdt.report import grid_text, options_text, rate_grid
from zbdt.scenarios import ScenarioConfig, emit_plot_series, plot_series_csv, run_scenario

TENORS = ("6M", "1Y", "2Y", "3Y", "4Y", "5Y")
CURVE = (1.20, 1.36, 2.00, 2.60, 3.07, 3.42)     # percent
DAILY = (0.40, 0.40, 0.40, 0.35, 0.30, 0.25)     # target beta per tenor


def synthetic_csv(path, days=400, seed=3):
    rng = np.random.default_rng(seed)
    d, dates = dt.date(2009, 1, 2), []
    while len(dates) < days:
        if d.weekday() < 5:
            dates.append(d)
        d += dt.timedelta(days=1)
    lines = ["DATE," + ",".join(TENORS)]
    for i, day in enumerate(dates):
        shock = np.zeros(6) if i == days - 1 else rng.normal(0, 1, 6) * np.array(DAILY) / math.sqrt(504)
        lines.append(day.isoformat() + "," + ",".join(f"{c * math.exp(s):.6f}" for c, s in zip(CURVE, shock)))
    path.write_text("\n".join(lines) + "\n")
    return dates[-1]


def main(out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    data = out_dir / "yields.csv"
    as_of = synthetic_csv(data)

    series = parse_yield_csv(data.read_text())
    (out_dir / "series.csv").write_text(plot_series_csv(emit_plot_series(series)))
    print(f"wrote {data} and the long-format volatility table {out_dir / 'series.csv'}")

    cfg = ScenarioConfig("synthetic", as_of=as_of, zbdt=ZbdtParams(0.002, 0.05, 0.0025), strikes=range(88, 100))
    rep = run_scenario(cfg, data)
    for e in rep.market_view.entries:
        print(f"  y({e.k}) = {e.y:.4%}" + ("" if e.k == 1 else f"   beta({e.k}) = {e.beta:.4f}"))
    print("binomial rates (%)\n" + grid_text(rate_grid(rep.bdt)))
    print("rail rates (%)\n" + grid_text(rate_grid(rep.zbdt)))
    print(options_text(rep.options))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output"))
