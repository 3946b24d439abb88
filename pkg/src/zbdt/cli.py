"""Command-line entry point: ``zbdt run`` for scenarios, ``zbdt series`` for plot data."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import report
from .lattice import ZbdtParams
from .market_data import CsvFormat, parse_yield_csv
from .rootfind import SolverConfig
from .scenarios import ScenarioError, emit_plot_series, load_config, plot_series_csv, run_scenario

log = logging.getLogger("zbdt")


def _trace_json(rep) -> str:
    steps = {
        model: [{"level": s.level, "sigma": s.sigma, "rates": [float(r) for r in s.rates],
                 "residuals": [float(v) for v in s.residuals], "iterations": s.iterations}
                for s in seq]
        for model, seq in rep.trace.items()
    }
    return json.dumps({"scenario": rep.config.name, "steps": steps}, sort_keys=True)


def render(rep, fmt: str) -> dict[str, str]:
    """File name -> content for one report; nothing is written here."""
    name, kinds = rep.config.name, rep.config.outputs
    files = {}
    if fmt == "json":
        files[f"{name}_report.json"] = report.dumps(rep.to_dict())
    elif fmt == "csv":
        if "rates" in kinds:
            files[f"{name}_rates_bdt.csv"] = report.grid_csv(report.rate_grid(rep.bdt))
            files[f"{name}_rates_zbdt.csv"] = report.grid_csv(report.rate_grid(rep.zbdt))
        if "bonds" in kinds:
            files[f"{name}_bonds_bdt.csv"] = report.grid_csv(report.bond_grid(rep.bdt_bonds))
            files[f"{name}_bonds_zbdt.csv"] = report.grid_csv(report.bond_grid(rep.zbdt_bonds))
        if "options" in kinds:
            files[f"{name}_options.csv"] = report.options_csv(rep.options)
    if fmt != "table" and "market_view" in kinds:
        files[f"{name}_market_view.json"] = rep.market_view.to_json()
    return files


def render_table(rep) -> str:
    kinds, parts = rep.config.outputs, [f"== {rep.config.name} =="]
    if "market_view" in kinds:
        mv = rep.market_view
        parts.append("k        y(k)     beta(k)")
        parts += [f"{e.k:<3}{e.y:>10.6f}  " + ("" if e.beta is None else f"{e.beta:>10.6f}") for e in mv.entries]
    if "rates" in kinds:
        parts += ["-- BDT rates (%)", report.grid_text(report.rate_grid(rep.bdt)).rstrip(),
                  "-- ZBDT rates (%)", report.grid_text(report.rate_grid(rep.zbdt)).rstrip()]
    if "bonds" in kinds:
        parts += ["-- BDT bond", report.grid_text(report.bond_grid(rep.bdt_bonds)).rstrip(),
                  "-- ZBDT bond", report.grid_text(report.bond_grid(rep.zbdt_bonds)).rstrip()]
    if "options" in kinds:
        parts += ["-- calls", report.options_text(rep.options).rstrip()]
    return "\n".join(parts) + "\n"


def _configs(args):
    out = []
    for path in args.config:
        cfg = load_config(path)
        prm = cfg.zbdt
        over = {k: getattr(args, k) for k in ("p", "q", "x0") if getattr(args, k) is not None}
        if over:
            cfg = dataclasses.replace(cfg, zbdt=dataclasses.replace(prm, **over))
        if args.beta_role:
            cfg = dataclasses.replace(cfg, beta_role=args.beta_role)
        out.append(cfg)
    return out


def cmd_run(args) -> int:
    solver = SolverConfig(abs_tol=args.tol, max_iter=args.max_iter)
    configs = _configs(args)

    def one(cfg):
        return run_scenario(cfg, args.data, solver, args.yields_in, trace=args.trace)

    with ThreadPoolExecutor(max_workers=max(1, min(len(configs), 8))) as pool:
        futures = [pool.submit(one, c) for c in configs]
    status = 0
    out = Path(args.out) if args.out else None
    for cfg, fut in zip(configs, futures):
        try:
            rep = fut.result()
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
            continue
        if args.trace:
            print(_trace_json(rep), file=sys.stderr)
        if args.format == "table":
            sys.stdout.write(render_table(rep))
            continue
        files = render(rep, args.format)
        target = out or Path(".")
        target.mkdir(parents=True, exist_ok=True)
        for fname, text in files.items():
            (target / fname).write_text(text, encoding="utf-8")
            log.info("wrote %s", target / fname)
    return status


def cmd_series(args) -> int:
    raw = Path(args.data).read_text(encoding="utf-8")
    series = parse_yield_csv(raw, CsvFormat(yields_in=args.yields_in))
    text = plot_series_csv(emit_plot_series(series, args.window, args.vol_normalization))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zbdt", description="BDT / ZBDT lattice calibration and bond option tables")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="calibrate and price one or more scenarios")
    run.add_argument("--config", required=True, action="append", help="scenario JSON file (repeatable)")
    run.add_argument("--data", help="yield CSV, needed for as_of configs")
    run.add_argument("--out", help="output directory (default: current directory)")
    run.add_argument("--format", choices=("table", "csv", "json"), default="csv")
    run.add_argument("--p", type=float)
    run.add_argument("--q", type=float)
    run.add_argument("--x0", type=float)
    run.add_argument("--beta-role", choices=("stdev", "variance"), dest="beta_role")
    run.add_argument("--tol", type=float, default=SolverConfig.abs_tol)
    run.add_argument("--max-iter", type=int, default=SolverConfig.max_iter, dest="max_iter")
    run.add_argument("--trace", action="store_true", help="per-step solver diagnostics on stderr (JSON lines)")
    run.add_argument("--yields-in", choices=("percent", "decimal"), default="percent", dest="yields_in")
    run.set_defaults(func=cmd_run)

    ser = sub.add_parser("series", help="long-format yield/volatility table for plotting")
    ser.add_argument("--data", required=True)
    ser.add_argument("--out")
    ser.add_argument("--window", type=int, default=252)
    ser.add_argument("--vol-normalization", choices=("paper_sum", "sample"), default="paper_sum",
                     dest="vol_normalization")
    ser.add_argument("--yields-in", choices=("percent", "decimal"), default="percent", dest="yields_in")
    ser.set_defaults(func=cmd_series)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
