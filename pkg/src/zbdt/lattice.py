"""Short-rate lattices and backward-induction pricing.

Node ``(i, j)`` is time ``i`` (years) and state ``j``.  Regular states run
``j = 1..i+1`` from the lowest rate upward; ``j = 0`` is the near-zero-rate
rail that only the ZBDT lattice has (present for ``i >= 1``).  In code, the
regular states of a level live in a numpy array where position ``j - 1``
holds state ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "BdtLattice",
    "FACE_VALUE",
    "LatticeError",
    "PriceLattice",
    "ZbdtLattice",
    "ZbdtParams",
    "node_yield",
    "price_bond",
    "price_bond_bdt",
    "price_bond_zbdt",
    "rollback",
]

FACE_VALUE = 100.0
PERIOD_YEARS = 1.0


class LatticeError(ValueError):
    pass


def _freeze_levels(rates: Sequence[Sequence[float]]) -> tuple[np.ndarray, ...]:
    levels = []
    for i, level in enumerate(rates):
        a = np.array(level, dtype=float)
        if a.shape != (i + 1,):
            raise LatticeError(f"level {i} must hold {i + 1} rates, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise LatticeError(f"level {i} has non-positive or non-finite rates: {a}")
        if np.any(np.diff(a) <= 0):
            raise LatticeError(f"level {i} rates must increase with state: {a}")
        a.setflags(write=False)
        levels.append(a)
    if not levels:
        raise LatticeError("a lattice needs at least one period")
    return tuple(levels)


@dataclass(frozen=True)
class ZbdtParams:
    """Crisis jump probability ``p``, recovery probability ``q``, rail rate ``x0``."""

    p: float = 0.02
    q: float = 0.07
    x0: float = 0.0025

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if not self.x0 > 0.0:
            raise ValueError(f"x0 must be positive, got {self.x0}")

    @property
    def p_hat(self) -> float:
        return (1.0 - self.p) / 2.0


@dataclass(frozen=True, eq=False)
class BdtLattice:
    """Binomial tree with equiprobable up/down moves."""

    rates: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "rates", _freeze_levels(self.rates))

    @property
    def periods(self) -> int:
        return len(self.rates)

    @property
    def has_rail(self) -> bool:
        return False

    def rate(self, i: int, j: int) -> float:
        if not 1 <= j <= i + 1:
            raise IndexError(f"no node ({i}, {j})")
        return float(self.rates[i][j - 1])

    def branches(self, i: int, j: int) -> list[tuple[int, float]]:
        """Successor states at ``i + 1`` and their probabilities."""
        self.rate(i, j)
        return [(j, 0.5), (j + 1, 0.5)]

    def with_rates(self, rates) -> "BdtLattice":
        return BdtLattice(rates)

    def __eq__(self, other):
        return (type(other) is type(self) and self.periods == other.periods
                and all(np.array_equal(a, b) for a, b in zip(self.rates, other.rates)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ZbdtLattice:
    """Binomial tree whose lowest state also jumps to a rail at rate ``x0``.

    From state 1 the moves are up/down with probability ``(1-p)/2`` each and
    to the rail with probability ``p``; the rail stays with ``1-q`` and exits
    to state 1 with ``q``.  The root counts as a state-1 node.
    """

    rates: tuple[np.ndarray, ...]
    params: ZbdtParams

    def __post_init__(self):
        levels = _freeze_levels(self.rates)
        object.__setattr__(self, "rates", levels)
        for i, level in enumerate(levels[1:], start=1):
            if not level[0] > self.params.x0:
                raise LatticeError(f"r[{i}][1]={level[0]} must exceed the rail rate {self.params.x0}")

    @property
    def periods(self) -> int:
        return len(self.rates)

    @property
    def has_rail(self) -> bool:
        return True

    @property
    def x0(self) -> float:
        return self.params.x0

    def rate(self, i: int, j: int) -> float:
        if j == 0 and i >= 1:
            if i >= self.periods:
                raise IndexError(f"no node ({i}, 0)")
            return self.params.x0
        if not 1 <= j <= i + 1:
            raise IndexError(f"no node ({i}, {j})")
        return float(self.rates[i][j - 1])

    def branches(self, i: int, j: int) -> list[tuple[int, float]]:
        self.rate(i, j)
        p, q = self.params.p, self.params.q
        if j == 0:
            return [(0, 1.0 - q), (1, q)]
        if j == 1:
            ph = self.params.p_hat
            # this order sums to exactly 1.0 in floating point
            return [(1, ph), (2, ph), (0, p)]
        return [(j, 0.5), (j + 1, 0.5)]

    def with_rates(self, rates) -> "ZbdtLattice":
        return ZbdtLattice(rates, self.params)

    def __eq__(self, other):
        return (type(other) is type(self) and self.params == other.params
                and self.periods == other.periods
                and all(np.array_equal(a, b) for a, b in zip(self.rates, other.rates)))

    __hash__ = None


Lattice = Union[BdtLattice, ZbdtLattice]


@dataclass(frozen=True, eq=False)
class PriceLattice:
    """Node values of a claim, ``layers[i][j-1] = B[i][j]`` for ``i = 0..maturity``.

    ``rail[i]`` is ``B[i][0]`` on a ZBDT lattice (``rail[0]`` is NaN: the root
    has no rail node); ``rail`` is None for BDT.
    """

    maturity: int
    face: float
    layers: tuple[np.ndarray, ...]
    rail: np.ndarray | None = None

    def node(self, i: int, j: int) -> float:
        if j == 0:
            if self.rail is None or i == 0:
                raise IndexError(f"no rail node at ({i}, 0)")
            return float(self.rail[i])
        return float(self.layers[i][j - 1])

    @property
    def root(self) -> float:
        return float(self.layers[0][0])


def _step_back(lat: Lattice, i: int, upper: np.ndarray, upper_rail: float | None):
    """Values at level ``i`` from values at ``i + 1`` (expectation, then discount)."""
    r = lat.rates[i]
    if not lat.has_rail:
        return 0.5 * (upper[:-1] + upper[1:]) / (1.0 + r), None
    prm = lat.params
    vals = np.empty(i + 1)
    vals[1:] = 0.5 * (upper[1:-1] + upper[2:]) / (1.0 + r[1:])
    vals[0] = (prm.p_hat * (upper[0] + upper[1]) + prm.p * upper_rail) / (1.0 + r[0])
    rail = None
    if i >= 1:
        rail = (prm.q * upper[0] + (1.0 - prm.q) * upper_rail) / (1.0 + prm.x0)
    return vals, rail


def rollback(lat: Lattice, values: np.ndarray, rail: float | None, start: int, stop: int = 0,
             record: bool = False):
    """Discount node values at level ``start`` back to level ``stop``.

    Returns ``(values, rail)`` at ``stop``; with ``record=True`` returns the
    list of every intermediate ``(values, rail)`` pair, level ``stop`` first.
    """
    if not 0 <= stop <= start <= lat.periods:
        raise LatticeError(f"cannot roll back from level {start} to {stop} on a {lat.periods}-period lattice")
    values = np.asarray(values, dtype=float)
    if values.shape != (start + 1,):
        raise LatticeError(f"level {start} needs {start + 1} values, got {values.shape}")
    if lat.has_rail and start >= 1 and rail is None:
        raise LatticeError("a ZBDT rollback needs the rail value")
    trail = [(values, rail)]
    for i in range(start - 1, stop - 1, -1):
        values, rail = _step_back(lat, i, values, rail)
        trail.append((values, rail))
    if record:
        return trail[::-1]
    return values, rail


def price_bond(lat: Lattice, maturity: int, face: float = FACE_VALUE) -> PriceLattice:
    """Zero-coupon bond paying ``face`` at ``maturity`` on either lattice type."""
    if maturity < 1:
        raise LatticeError("maturity must be at least one period")
    if maturity > lat.periods:
        raise LatticeError(f"maturity {maturity} exceeds the lattice's {lat.periods} periods")
    terminal = np.full(maturity + 1, float(face))
    trail = rollback(lat, terminal, float(face) if lat.has_rail else None, maturity, 0, record=True)
    layers = tuple(v for v, _ in trail)
    for a in layers:
        a.setflags(write=False)
    rail = None
    if lat.has_rail:
        rail = np.array([np.nan] + [r for _, r in trail[1:]])
        rail.setflags(write=False)
    return PriceLattice(maturity, float(face), layers, rail)


def price_bond_bdt(lat: BdtLattice, maturity: int, face: float = FACE_VALUE) -> PriceLattice:
    if not isinstance(lat, BdtLattice):
        raise TypeError("expected a BdtLattice")
    return price_bond(lat, maturity, face)


def price_bond_zbdt(lat: ZbdtLattice, maturity: int, face: float = FACE_VALUE) -> PriceLattice:
    if not isinstance(lat, ZbdtLattice):
        raise TypeError("expected a ZbdtLattice")
    return price_bond(lat, maturity, face)


def node_yield(price: float, periods_remaining: int, face: float = FACE_VALUE) -> float:
    """Annually compounded yield of a zero paying ``face`` after ``periods_remaining``."""
    if not price > 0:
        raise ValueError(f"bond price must be positive, got {price}")
    if periods_remaining < 1:
        raise ValueError("periods_remaining must be at least 1")
    return (face / price) ** (1.0 / periods_remaining) - 1.0
