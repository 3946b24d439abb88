"""European calls on zero-coupon bonds: lattice pricing and Black's formula.

Black's formula here takes both bond prices on the face-value scale, i.e.
``C = B(0,T) N(d1) - K B(0,S) N(d2)`` with ``B(0,S)`` around 96 rather than
0.96.  Implied volatilities computed this way are of order one and quoted as
plain numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .lattice import FACE_VALUE, BdtLattice, LatticeError, ZbdtLattice, price_bond, rollback

__all__ = [
    "EuropeanCallSpec",
    "OptionQuote",
    "black_price",
    "implied_vol",
    "option_table",
    "price_call_on_lattice",
    "quote_call",
]

IV_BRACKET = (1e-9, 20.0)
EPS_INTRINSIC = 1e-12


@dataclass(frozen=True)
class EuropeanCallSpec:
    strike: float
    exercise: int = 2
    maturity: int = 5
    face: float = FACE_VALUE

    def __post_init__(self):
        if not self.strike >= 0:
            raise ValueError(f"strike must be non-negative, got {self.strike}")
        if not 0 < self.exercise < self.maturity:
            raise ValueError(f"need 0 < exercise < maturity, got {self.exercise}, {self.maturity}")

    def check(self, lat) -> None:
        if self.maturity > lat.periods:
            raise LatticeError(f"bond maturity {self.maturity} exceeds the lattice's {lat.periods} periods")


@dataclass(frozen=True)
class OptionQuote:
    spec: EuropeanCallSpec
    price: float
    implied_vol: float


def price_call_on_lattice(lat: BdtLattice | ZbdtLattice, spec: EuropeanCallSpec) -> float:
    """Value at time 0 of max(B(S, T) - K, 0) paid at S, the rail included."""
    spec.check(lat)
    bond = price_bond(lat, spec.maturity, spec.face)
    payoff = np.maximum(bond.layers[spec.exercise] - spec.strike, 0.0)
    rail = None
    if bond.rail is not None:
        rail = max(float(bond.rail[spec.exercise]) - spec.strike, 0.0)
    values, _ = rollback(lat, payoff, rail, spec.exercise, 0)
    return float(values[0])


def black_price(b_tT: float, b_tS: float, strike: float, sigma: float, tau: float) -> float:
    if not (b_tT > 0 and b_tS > 0 and strike > 0 and tau > 0):
        raise ValueError("bond prices, strike and tau must be positive")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    fwd_strike = strike * b_tS
    if sigma == 0:
        return max(b_tT - fwd_strike, 0.0)
    sd = sigma * math.sqrt(tau)
    d1 = math.log(b_tT / fwd_strike) / sd + 0.5 * sd
    d2 = d1 - sd
    return b_tT * norm.cdf(d1) - fwd_strike * norm.cdf(d2)


def implied_vol(price: float, b_tT: float, b_tS: float, strike: float, tau: float) -> float:
    """Black volatility reproducing ``price``; 0 for a worthless option."""
    if not (b_tT > 0 and b_tS > 0 and strike > 0 and tau > 0):
        raise ValueError("bond prices, strike and tau must be positive")
    if price >= b_tT:
        raise ValueError(f"call price {price} breaches the upper bound B(t,T)={b_tT}")
    intrinsic = max(b_tT - strike * b_tS, 0.0)
    if price < intrinsic - 1e-9 * max(1.0, intrinsic):
        raise ValueError(f"call price {price} is below its lower bound {intrinsic}")
    if price <= intrinsic + EPS_INTRINSIC:
        return 0.0
    lo, hi = IV_BRACKET
    f = lambda s: black_price(b_tT, b_tS, strike, s, tau) - price
    if f(hi) < 0:
        raise ValueError(f"call price {price} needs a volatility above {hi}")
    if f(lo) > 0:
        # price sits below anything reachable inside the bracket: a vanishing time value
        return lo
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def quote_call(lat: BdtLattice | ZbdtLattice, spec: EuropeanCallSpec) -> OptionQuote:
    """Lattice price and the Black volatility implied with the lattice's own zero prices."""
    c = price_call_on_lattice(lat, spec)
    b_T = price_bond(lat, spec.maturity, spec.face).root
    b_S = price_bond(lat, spec.exercise, spec.face).root
    iv = implied_vol(c, b_T, b_S, spec.strike, float(spec.exercise)) if spec.strike > 0 else 0.0
    return OptionQuote(spec, c, iv)


def option_table(bdt: BdtLattice | None, zbdt: ZbdtLattice | None, strikes: Sequence[float],
                 exercise: int = 2, maturity: int = 5) -> list[dict]:
    """One row per strike with ``bdt_price, bdt_iv, zbdt_price, zbdt_iv`` (None where absent)."""
    rows = []
    for k in strikes:
        spec = EuropeanCallSpec(float(k), exercise, maturity)
        row = {"strike": float(k)}
        for tag, lat in (("bdt", bdt), ("zbdt", zbdt)):
            if lat is None:
                row[f"{tag}_price"] = row[f"{tag}_iv"] = None
                continue
            q = quote_call(lat, spec)
            row[f"{tag}_price"], row[f"{tag}_iv"] = q.price, q.implied_vol
        rows.append(row)
    return rows
