"""Scenario configs and the end-to-end runner: market data -> lattices -> option table."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .calibration import StepSolution, calibrate_bdt, calibrate_zbdt
from .derivatives import option_table
from .lattice import BdtLattice, PriceLattice, ZbdtLattice, ZbdtParams, price_bond
from .market_data import (
    CalibrationInput,
    CsvFormat,
    YieldSeries,
    build_calibration_input,
    parse_yield_csv,
)
from .report import lattice_to_dict, price_lattice_to_dict
from .rootfind import SolverConfig

__all__ = [
    "OUTPUT_KINDS",
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioReport",
    "emit_plot_series",
    "load_config",
    "plot_series_csv",
    "run_scenario",
]

OUTPUT_KINDS = frozenset({"rates", "bonds", "options", "market_view"})
DEFAULT_STRIKES = tuple(float(k) for k in range(80, 100))


class ScenarioError(RuntimeError):
    def __init__(self, scenario: str, cause: BaseException):
        super().__init__(f"scenario {scenario}: {type(cause).__name__}: {cause}")
        self.scenario = scenario
        self.cause = cause


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    as_of: dt.date | None = None
    direct_input: CalibrationInput | None = None
    zbdt: ZbdtParams = ZbdtParams()
    strikes: tuple[float, ...] = DEFAULT_STRIKES
    exercise: int = 2
    maturity: int = 5
    outputs: frozenset = OUTPUT_KINDS
    window: int = 252
    vol_normalization: str = "paper_sum"
    beta_role: str = "stdev"

    def __post_init__(self):
        if not self.name or any(c in self.name for c in "/\\"):
            raise ValueError(f"invalid scenario name {self.name!r}")
        if (self.as_of is None) == (self.direct_input is None):
            raise ValueError("exactly one of as_of and direct_input must be given")
        if not self.strikes or any(not k > 0 for k in self.strikes):
            raise ValueError("strike grid must be non-empty and positive")
        unknown = set(self.outputs) - OUTPUT_KINDS
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}")
        object.__setattr__(self, "strikes", tuple(float(k) for k in self.strikes))
        object.__setattr__(self, "outputs", frozenset(self.outputs))

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {"name", "as_of", "direct_input", "zbdt", "option", "outputs", "window",
                 "vol_normalization", "beta_role"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        opt = d.get("option", {})
        kw = dict(
            name=d["name"],
            as_of=dt.date.fromisoformat(d["as_of"]) if d.get("as_of") else None,
            direct_input=CalibrationInput.from_dict(d["direct_input"]) if d.get("direct_input") else None,
            zbdt=ZbdtParams(**d.get("zbdt", {})),
            strikes=tuple(opt.get("strikes", DEFAULT_STRIKES)),
            exercise=int(opt.get("exercise", 2)),
            maturity=int(opt.get("maturity", 5)),
            outputs=frozenset(d.get("outputs", OUTPUT_KINDS)),
        )
        for key in ("window", "vol_normalization", "beta_role"):
            if key in d:
                kw[key] = d[key]
        return cls(**kw)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "zbdt": {"p": self.zbdt.p, "q": self.zbdt.q, "x0": self.zbdt.x0},
            "option": {"strikes": list(self.strikes), "exercise": self.exercise, "maturity": self.maturity},
            "outputs": sorted(self.outputs),
            "window": self.window,
            "vol_normalization": self.vol_normalization,
            "beta_role": self.beta_role,
        }
        if self.as_of is not None:
            d["as_of"] = self.as_of.isoformat()
        else:
            d["direct_input"] = self.direct_input.to_dict()
        return d


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return ScenarioConfig.from_dict(json.load(fh))


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    market_view: CalibrationInput
    bdt: BdtLattice
    zbdt: ZbdtLattice
    bdt_bonds: PriceLattice
    zbdt_bonds: PriceLattice
    options: list[dict]
    trace: dict[str, list[StepSolution]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Full-precision machine form."""
        out = {"name": self.config.name, "market_view": self.market_view.to_dict()}
        kinds = self.config.outputs
        if "rates" in kinds:
            out["rates"] = {"bdt": lattice_to_dict(self.bdt), "zbdt": lattice_to_dict(self.zbdt)}
        if "bonds" in kinds:
            out["bonds"] = {"bdt": price_lattice_to_dict(self.bdt_bonds),
                            "zbdt": price_lattice_to_dict(self.zbdt_bonds)}
        if "options" in kinds:
            out["options"] = self.options
        return out


def _load_input(config: ScenarioConfig, data_path, yields_in: str) -> CalibrationInput:
    if config.direct_input is not None:
        if data_path is not None:
            raise ValueError("a data file is only used with as_of configs")
        return config.direct_input
    if data_path is None:
        raise ValueError("as_of configs need a yield data file")
    raw = Path(data_path).read_text(encoding="utf-8")
    series = parse_yield_csv(raw, CsvFormat(yields_in=yields_in))
    return build_calibration_input(series, config.as_of, window=config.window,
                                   normalization=config.vol_normalization)


def run_scenario(config: ScenarioConfig, data_path: str | Path | None = None,
                 cfg: SolverConfig = SolverConfig(), yields_in: str = "percent",
                 trace: bool = False) -> ScenarioReport:
    """Calibrate both lattices and price the option grid; any failure raises ScenarioError."""
    try:
        data = _load_input(config, data_path, yields_in)
        steps_bdt: list = [] if trace else None
        steps_zbdt: list = [] if trace else None
        bdt = calibrate_bdt(data, cfg, trace=steps_bdt)
        zbdt = calibrate_zbdt(data, config.zbdt, cfg, trace=steps_zbdt, beta_role=config.beta_role)
        m = min(config.maturity, data.n)
        bdt_bonds, zbdt_bonds = price_bond(bdt, m), price_bond(zbdt, m)
        options = []
        if "options" in config.outputs:
            options = option_table(bdt, zbdt, config.strikes, config.exercise, config.maturity)
    except Exception as exc:
        raise ScenarioError(config.name, exc) from exc
    tr = {"bdt": steps_bdt, "zbdt": steps_zbdt} if trace else {}
    return ScenarioReport(config, data, bdt, zbdt, bdt_bonds, zbdt_bonds, options, tr)


def _rolling_betas(y: np.ndarray, window: int, normalization: str) -> np.ndarray:
    out = np.full(y.size, np.nan)
    if y.size <= window:
        return out
    r = np.log(y[1:] / y[:-1])
    w = sliding_window_view(r, window)
    dev = w - w.mean(axis=1, keepdims=True)
    ss = np.einsum("ij,ij->i", dev, dev)
    if normalization == "sample":
        ss = ss / (window - 1)
    elif normalization != "paper_sum":
        raise ValueError(f"unknown normalization {normalization!r}")
    out[window:] = np.sqrt(ss)
    return out


def emit_plot_series(all_series: Sequence[YieldSeries], window: int = 252,
                     normalization: str = "paper_sum") -> list[tuple[dt.date, str, float, float | None]]:
    """Long-format rows ``(date, tenor, yield, beta)``; beta is None during warm-up."""
    if window < 2:
        raise ValueError("window must be at least 2")
    rows = []
    for s in all_series:
        betas = _rolling_betas(np.asarray(s.yields, dtype=float), window, normalization)
        for d, y, b in zip(s.dates, s.yields, betas):
            rows.append((d, s.label, float(y), None if math.isnan(b) else float(b)))
    return rows


def plot_series_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "tenor", "yield", "beta"])
    for d, tenor, y, b in rows:
        w.writerow([d.isoformat(), tenor, repr(y), "" if b is None else repr(b)])
    return buf.getvalue()
