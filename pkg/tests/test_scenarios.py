import datetime as dt
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from zbdt import CalibrationInput, YieldSeries, ZbdtParams, build_calibration_input, parse_yield_csv, extract_market_view, rolling_volatility
from zbdt.report import lattice_from_dict, lattice_to_dict, options_csv, parse_options_csv, rate_grid, bond_grid
from zbdt.scenarios import ScenarioConfig, ScenarioError, emit_plot_series, plot_series_csv, run_scenario

from conftest import PUBLISHED_PARAMS
from synthetic import planted_zbdt


@pytest.fixture(scope="module")
def planted_view():
    z = planted_zbdt(np.random.default_rng(0), params=PUBLISHED_PARAMS)
    return extract_market_view(z)


def business_days(start, count):
    out, d = [], start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return tuple(out)


def test_config_exactly_one_source(planted_view):
    with pytest.raises(ValueError, match="exactly one"):
        ScenarioConfig("x")
    with pytest.raises(ValueError, match="exactly one"):
        ScenarioConfig("x", as_of=dt.date(2003, 5, 23), direct_input=planted_view)
    with pytest.raises(ValueError, match="strike"):
        ScenarioConfig("x", direct_input=planted_view, strikes=())
    with pytest.raises(ValueError, match="strike"):
        ScenarioConfig("x", direct_input=planted_view, strikes=(80, -1))
    with pytest.raises(ValueError, match="outputs"):
        ScenarioConfig("x", direct_input=planted_view, outputs={"plots"})


def test_config_dict_round_trip(planted_view):
    cfg = ScenarioConfig("x", direct_input=planted_view, strikes=(85, 90))
    assert ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    cfg2 = ScenarioConfig("y", as_of=dt.date(2008, 8, 8))
    assert ScenarioConfig.from_dict(cfg2.to_dict()) == cfg2
    with pytest.raises(ValueError, match="unknown"):
        ScenarioConfig.from_dict({"name": "z", "as_of": "2008-08-08", "colour": 1})


def test_shipped_configs_load_and_match_reference_views(published_bdt):
    from pathlib import Path

    from zbdt.scenarios import load_config

    root = Path(__file__).resolve().parents[1] / "scenarios"
    for label, lat in published_bdt.items():
        cfg = load_config(root / f"scenario_{label}.json")
        assert cfg.zbdt == PUBLISHED_PARAMS and cfg.strikes == tuple(float(k) for k in range(80, 100))
        mv = extract_market_view(lat)
        assert_allclose(cfg.direct_input.yields, mv.yields, rtol=1e-15)
        assert_allclose(cfg.direct_input.betas[1:], mv.betas[1:], rtol=1e-15)


def test_report_contents(planted_view):
    rep = run_scenario(ScenarioConfig("p", direct_input=planted_view, zbdt=PUBLISHED_PARAMS))
    assert rep.bdt.periods == rep.zbdt.periods == 5
    assert rep.bdt_bonds.maturity == 5 and rep.zbdt_bonds.rail is not None
    assert [r["strike"] for r in rep.options] == list(range(80, 100))
    assert rep.market_view == planted_view
    d = rep.to_dict()
    assert set(d) == {"name", "market_view", "rates", "bonds", "options"}
    assert lattice_from_dict(d["rates"]["zbdt"]) == rep.zbdt
    assert lattice_from_dict(d["rates"]["bdt"]) == rep.bdt


def test_single_period_input_rejects_options():
    ci = CalibrationInput.from_arrays([0.0136], [None])
    with pytest.raises(ScenarioError, match="scenario tiny.*maturity 5 exceeds"):
        run_scenario(ScenarioConfig("tiny", direct_input=ci))
    rep = run_scenario(ScenarioConfig("tiny", direct_input=ci, outputs={"rates", "bonds"}))
    assert rate_grid(rep.bdt) == [["1.36"]]
    assert rep.bdt_bonds.maturity == 1


def test_errors_carry_scenario_name(published_bdt):
    cfg = ScenarioConfig("scenario_I", direct_input=extract_market_view(published_bdt["I"]))
    with pytest.raises(ScenarioError, match="scenario_I.*ZBDT step 3") as info:
        run_scenario(cfg)
    assert info.value.scenario == "scenario_I"


def test_as_of_mode(tmp_path):
    # iid log noise around a fixed curve; the last row sits on the curve
    rng = np.random.default_rng(21)
    tenors = (0.5, 1, 2, 3, 4, 5)
    curve = dict(zip(tenors, (1.2, 1.36, 2.0, 2.6, 3.07, 3.42)))
    noise = dict(zip(tenors, (0.4, 0.4, 0.4, 0.35, 0.3, 0.25)))
    dates = business_days(dt.date(2006, 1, 2), 300)
    lines = ["DATE," + ",".join(f"{int(k * 12)}M" if k < 1 else f"{k}Y" for k in tenors)]
    for i, d in enumerate(dates):
        last = i == len(dates) - 1
        vals = [curve[k] * (1.0 if last else math.exp(rng.normal(0, noise[k] / math.sqrt(504)))) for k in tenors]
        lines.append(",".join([d.isoformat()] + [repr(v) for v in vals]))
    data = tmp_path / "yields.csv"
    data.write_text("\n".join(lines) + "\n")
    cfg = ScenarioConfig("dated", as_of=dates[-1], zbdt=ZbdtParams(0.002, 0.05, 0.0025))
    with pytest.raises(ScenarioError, match="data file"):
        run_scenario(cfg)
    rep = run_scenario(cfg, data)
    assert rep.market_view.as_of == dates[-1] and rep.market_view.n == 5
    assert_allclose(rep.market_view.yields, [0.0136, 0.02, 0.026, 0.0307, 0.0342], rtol=1e-14)
    assert 0.3 < rep.market_view.beta(2) < 0.5
    series = parse_yield_csv(data.read_text())
    sample = build_calibration_input(series, dates[-1], normalization="sample")
    assert_allclose(sample.betas[1:], rep.market_view.betas[1:] / math.sqrt(251), rtol=1e-14)
    # the 6M column is ingested but plays no part
    assert [s.label for s in series][0] == "6M"


def test_plot_series_window_rule():
    s = YieldSeries(1.0, business_days(dt.date(2010, 1, 4), 300), np.linspace(0.01, 0.02, 300))
    rows = emit_plot_series([s], 252)
    assert len(rows) == 300
    assert all(r[3] is None for r in rows[:252])
    assert all(r[3] is not None for r in rows[252:])
    text = plot_series_csv(rows)
    assert text.splitlines()[0] == "date,tenor,yield,beta"
    assert text.splitlines()[1].endswith(",")


def test_plot_series_constant():
    s = YieldSeries(2.0, business_days(dt.date(2010, 1, 4), 280), np.full(280, 0.02))
    assert [r[3] for r in emit_plot_series([s])[252:]] == [0.0] * 28


def test_plot_series_matches_pointwise():
    rng = np.random.default_rng(99)
    s = YieldSeries(3.0, business_days(dt.date(2010, 1, 4), 400), 0.02 * np.exp(np.cumsum(rng.normal(0, 0.01, 400))))
    for norm in ("paper_sum", "sample"):
        rows = emit_plot_series([s], 252, norm)
        for d, _, _, b in rows[252:]:
            assert b == pytest.approx(rolling_volatility(s, d, 252, norm), rel=1e-12)


def test_options_csv_round_trip(planted_view):
    rep = run_scenario(ScenarioConfig("p", direct_input=planted_view, zbdt=PUBLISHED_PARAMS, strikes=(80, 95)))
    text = options_csv(rep.options)
    assert text.splitlines()[0] == "strike,bdt_price,bdt_iv,zbdt_price,zbdt_iv"
    back = parse_options_csv(text)
    for a, b in zip(back, rep.options):
        for k in a:
            assert a[k] == pytest.approx(b[k], abs=5e-5)


def test_grid_layout(tables, published_bdt, published_zbdt):
    grid = rate_grid(published_bdt["I"])
    assert grid[-1] == ["1.36", "1.54", "1.87", "2.13", "2.29"]
    assert grid[0] == ["", "", "", "", "9.32"]
    zgrid = rate_grid(published_zbdt["I"])
    assert zgrid[-1] == ["", "0.25", "0.25", "0.25", "0.25"]
    from zbdt import price_bond

    bgrid = bond_grid(price_bond(published_bdt["I"], 5))
    assert len(bgrid[0]) == 5 and bgrid[-1][0] == "84.53"
    d = lattice_to_dict(published_zbdt["I"])
    assert d["zirp"] == {"p": 0.02, "q": 0.07, "x0": 0.0025} and d["periods"] == 5
