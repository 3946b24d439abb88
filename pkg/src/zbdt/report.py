"""Serialisation of lattices, grids and quote tables (JSON machine form, CSV/text display form)."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Sequence

from .lattice import BdtLattice, PriceLattice, ZbdtLattice, ZbdtParams


def lattice_to_dict(lat: BdtLattice | ZbdtLattice) -> dict:
    d = {
        "model": "zbdt" if isinstance(lat, ZbdtLattice) else "bdt",
        "periods": lat.periods,
        "rates": [[float(r) for r in level] for level in lat.rates],
    }
    if isinstance(lat, ZbdtLattice):
        prm = lat.params
        d["zirp"] = {"p": prm.p, "q": prm.q, "x0": prm.x0}
    return d


def lattice_from_dict(d: dict) -> BdtLattice | ZbdtLattice:
    if len(d["rates"]) != d.get("periods", len(d["rates"])):
        raise ValueError("periods does not match the number of rate levels")
    if "zirp" in d:
        z = d["zirp"]
        return ZbdtLattice(d["rates"], ZbdtParams(z["p"], z["q"], z["x0"]))
    return BdtLattice(d["rates"])


def price_lattice_to_dict(pl: PriceLattice) -> dict:
    d = {"maturity": pl.maturity, "face": pl.face, "prices": [[float(v) for v in layer] for layer in pl.layers]}
    if pl.rail is not None:
        d["rail"] = [None] + [float(v) for v in pl.rail[1:]]
    return d


def _grid_rows(columns: Sequence[Sequence[float]], rail: Sequence[float] | None, fmt) -> list[list[str]]:
    """Lay out per-time columns with the highest state on top, rail row last."""
    height = max(len(c) for c in columns)
    rows = []
    for j in range(height, 0, -1):
        rows.append([fmt(c[j - 1]) if j <= len(c) else "" for c in columns])
    if rail is not None:
        rows.append(["" if v is None or (isinstance(v, float) and math.isnan(v)) else fmt(v) for v in rail])
    return rows


def rate_grid(lat: BdtLattice | ZbdtLattice) -> list[list[str]]:
    """Rates in percent, two decimals; columns are times 0..n-1."""
    cols = [level * 100.0 for level in lat.rates]
    rail = None
    if isinstance(lat, ZbdtLattice):
        rail = [None] + [lat.x0 * 100.0] * (lat.periods - 1)
    return _grid_rows(cols, rail, lambda v: f"{v:.2f}")


def bond_grid(pl: PriceLattice) -> list[list[str]]:
    """Bond prices, two decimals; columns are times 0..maturity-1 (the face column is dropped)."""
    rail = None if pl.rail is None else list(pl.rail[:-1])
    return _grid_rows(pl.layers[:-1], rail, lambda v: f"{v:.2f}")


def grid_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"t{i}" for i in range(len(rows[0]))])
    w.writerows(rows)
    return buf.getvalue()


def grid_text(rows: list[list[str]]) -> str:
    width = max((len(c) for r in rows for c in r), default=0)
    return "\n".join(" ".join(c.rjust(width) for c in r).rstrip() for r in rows) + "\n"


OPTION_COLUMNS = ("strike", "bdt_price", "bdt_iv", "zbdt_price", "zbdt_iv")


def _fmt4(v):
    return "" if v is None else f"{v:.4f}"


def options_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(OPTION_COLUMNS)
    for r in rows:
        strike = r["strike"]
        w.writerow([f"{strike:g}"] + [_fmt4(r[c]) for c in OPTION_COLUMNS[1:]])
    return buf.getvalue()


def options_text(rows: list[dict]) -> str:
    lines = [" ".join(f"{c:>10}" for c in OPTION_COLUMNS)]
    for r in rows:
        lines.append(" ".join([f"{r['strike']:>10g}"] + [f"{_fmt4(r[c]):>10}" for c in OPTION_COLUMNS[1:]]))
    return "\n".join(lines) + "\n"


def parse_options_csv(text: str) -> list[dict]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append({k: (float(v) if v != "" else None) for k, v in rec.items()})
    return out


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, repr floats)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
