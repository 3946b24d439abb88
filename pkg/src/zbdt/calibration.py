"""Level-by-level calibration of BDT and ZBDT lattices to a yield/volatility curve.

Each step ``n`` adds lattice level ``n-1``.  The level is parameterised by its
lowest rate (and, for ZBDT, the second-lowest) plus the half log-spacing
``sigma(n)``; the remaining rates follow the geometric ladder.  Step ``n``
must reprice the ``n``-year zero and match ``beta(n)`` through the yields of
the ``(n-1)``-year zeros seen from the time-1 nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace
from typing import Literal

import numpy as np

from .lattice import (
    FACE_VALUE,
    BdtLattice,
    ZbdtLattice,
    ZbdtParams,
    node_yield,
    price_bond,
    rollback,
)
from .market_data import CalibrationInput
from .rootfind import SolverConfig, SolverError, solve_scalar, solve_system

__all__ = [
    "CalibrationError",
    "SolverConfig",
    "StepSolution",
    "calibrate_bdt",
    "calibrate_zbdt",
    "extract_market_view",
    "ternary_variance",
]

BetaRole = Literal["stdev", "variance"]

# sigma search range for the BDT step; the upper end is shrunk if the rate
# sub-problem has no solution there
_SIGMA_BRACKET = (1e-10, 2.5)


class CalibrationError(RuntimeError):
    def __init__(self, message, step=None, residuals=None):
        super().__init__(message)
        self.step = step
        self.residuals = residuals


@dataclass(frozen=True)
class StepSolution:
    level: int
    rates: np.ndarray
    sigma: float
    residuals: tuple[float, ...]
    iterations: int = 0


def ternary_variance(ell_u: float, ell_d: float, p: float) -> float:
    """Variance of a variable equal to ell_u, ell_d w.p. (1-p)/2 each and 0 w.p. p."""
    return (1.0 - p * p) / 4.0 * (ell_u * ell_u + ell_d * ell_d) - (1.0 - p) ** 2 / 2.0 * ell_u * ell_d


def _ladder(base: float, sigma: float, count: int) -> np.ndarray:
    return base * np.exp(2.0 * sigma * np.arange(count))


def _raw(levels, params=None):
    # unvalidated stand-in for a lattice: iterates may violate the ordering invariants
    if params is None:
        return SimpleNamespace(rates=levels, periods=len(levels), has_rail=False)
    return SimpleNamespace(rates=levels, periods=len(levels), has_rail=True, params=params)


def _zero_layers(lat, n, face=FACE_VALUE):
    """Root price and level-1 values (regular, rail) of the n-year zero."""
    trail = rollback(lat, np.full(n + 1, face), face if lat.has_rail else None, n, 0, record=True)
    root = float(trail[0][0][0])
    level1, rail1 = trail[1]
    return root, level1, rail1


class _StepMap:
    """n-year zero seen from levels 0 and 1 as a linear function of level n-1.

    The levels below n-1 are fixed while step n is solved, so the root price
    and the time-1 node values are linear in the level-(n-1) values
    ``face / (1 + r)`` (rail last); the matrices are built once per step.
    """

    def __init__(self, prev, params, n, face=FACE_VALUE):
        self.params, self.n, self.face = params, n, face
        rail = params is not None
        width = n + (1 if rail else 0)
        lat = _raw(prev, params)
        self.to_root = np.empty(width)
        self.to_one = np.empty((3 if rail else 2, width))
        for k in range(width):
            e = np.zeros(width)
            e[k] = 1.0
            vals, rail_val = (e[:n], e[n]) if rail else (e, None)
            trail = rollback(lat, vals, rail_val, n - 1, 0, record=True)
            self.to_root[k] = trail[0][0][0]
            v1, r1 = trail[1]
            self.to_one[:, k] = np.append(v1, r1) if rail else v1
        if rail:
            self.rail_value = face / (1.0 + params.x0)

    def __call__(self, level):
        v = self.face / (1.0 + np.asarray(level))
        if self.params is not None:
            v = np.append(v, self.rail_value)
        one = self.to_one @ v
        if self.params is not None:
            return float(self.to_root @ v), one[:2], float(one[2])
        return float(self.to_root @ v), one, None


def _sub_yields(level1, rail1, n, face=FACE_VALUE):
    yd = node_yield(level1[0], n - 1, face)
    yu = node_yield(level1[1], n - 1, face)
    y0 = None if rail1 is None else node_yield(rail1, n - 1, face)
    return yu, yd, y0


def _beta_target(beta, role: BetaRole):
    if role == "stdev":
        return beta * beta
    if role == "variance":
        return beta
    raise ValueError(f"beta_role must be 'stdev' or 'variance', got {role!r}")


def calibrate_bdt(data: CalibrationInput, cfg: SolverConfig = SolverConfig(),
                  trace: list | None = None) -> BdtLattice:
    levels = [np.array([data.y(1)])]
    if trace is not None:
        trace.append(StepSolution(0, levels[0], 0.0, (0.0,)))
    lo_r, hi_r = cfg.bracket
    if not lo_r < data.y(1) < hi_r:
        raise CalibrationError(f"step 1: r[0][1]={data.y(1)} outside ({lo_r}, {hi_r})", step=1)

    for n in range(2, data.n + 1):
        target = data.discount_price(n)
        beta = data.beta(n)
        prev = levels

        step = _StepMap(prev, None, n)

        def rate_for(sigma):
            def price_gap(r1):
                return step(_ladder(r1, sigma, n))[0] - target
            return solve_scalar(price_gap, cfg.bracket, cfg)

        def beta_gap(sigma):
            r1 = rate_for(sigma)
            _, lvl1, _ = step(_ladder(r1, sigma, n))
            yu, yd, _ = _sub_yields(lvl1, None, n)
            return 0.5 * math.log(yu / yd) - beta

        s_lo, s_hi = _SIGMA_BRACKET
        try:
            while True:
                try:
                    beta_gap(s_hi)
                    break
                except SolverError:
                    s_hi *= 0.5
                    if s_hi <= s_lo * 10:
                        raise
            sigma = solve_scalar(beta_gap, (s_lo, s_hi), cfg)
            r1 = rate_for(sigma)
        except SolverError as exc:
            raise CalibrationError(f"BDT step {n}: {exc}", step=n, residuals=exc.residuals) from exc

        level = _ladder(r1, sigma, n)
        if not (level[0] > 0 and level[-1] < hi_r):
            raise CalibrationError(f"BDT step {n}: rates {level} leave (0, {hi_r})", step=n)
        levels.append(level)
        if trace is not None:
            root, lvl1, _ = _zero_layers(_raw(levels), n)
            yu, yd, _ = _sub_yields(lvl1, None, n)
            trace.append(StepSolution(n - 1, level, sigma, (root - target, 0.5 * math.log(yu / yd) - beta)))
    return BdtLattice(levels)


def _zbdt_level(r1, r2, sigma, n):
    return np.concatenate(([r1], _ladder(r2, sigma, n - 1)))


def _zbdt_residuals(prev, params, n, target, beta_sq, x):
    r1, r2, sigma = x
    lat = _raw(prev + [_zbdt_level(r1, r2, sigma, n)], params)
    root, lvl1, rail1 = _zero_layers(lat, n)
    yu, yd, y0 = _sub_yields(lvl1, rail1, n)
    p, x0 = params.p, params.x0
    return np.array([
        root - target,
        ternary_variance(math.log(yu / y0), math.log(yd / y0), p) - beta_sq,
        ternary_variance(math.log(r2 / x0), math.log(r1 / x0), p) - sigma * sigma,
    ])


# outer scan over d = log(r2 / r1); the scan only locates sign changes, so
# its inner solves run at a loose tolerance
_D_GRID = np.geomspace(1e-4, 8.0, 49)
_SCAN_TOL = 1e-7


class _ZbdtStep:
    """Step n of the ZBDT fit, reduced to a nested pair of bracketed 1-D problems.

    With ell1 = log(r1/x0) and d = log(r2/r1) > 0, the third equation gives
    sigma^2 = tv(ell1 + d, ell1, p), which grows with ell1.  For fixed d every
    rate on the level then grows with ell1, so the price equation has at most
    one root in ell1.  What is left is a scalar equation in d.
    """

    def __init__(self, prev, params, n, target, beta_sq, cfg):
        self.prev, self.params, self.n = prev, params, n
        self.target, self.beta_sq, self.cfg = target, beta_sq, cfg
        self.ell_cap = math.log(cfg.bracket[1] / params.x0)
        self.map = _StepMap(prev, params, n)

    def level(self, ell1, d):
        p, x0 = self.params.p, self.params.x0
        sigma = math.sqrt(ternary_variance(ell1 + d, ell1, p))
        r1 = x0 * math.exp(ell1)
        return (r1, r1 * math.exp(d), sigma)

    def layers(self, ell1, d):
        r1, r2, sigma = self.level(ell1, d)
        return self.map(_zbdt_level(r1, r2, sigma, self.n))

    def _ell1_range(self, d):
        hi = self.ell_cap - d
        lo = min(1e-12, 0.5 * hi)
        return (lo, hi) if hi > lo else None

    def feasible(self, d) -> bool:
        rng = self._ell1_range(d)
        if rng is None:
            return False
        lo, hi = rng
        return self.layers(lo, d)[0] >= self.target >= self.layers(hi, d)[0]

    def ell1_for(self, d, cfg=None):
        """ell1 repricing the n-year zero at spread d, or None if out of reach."""
        if not self.feasible(d):
            return None
        f = lambda e: self.layers(e, d)[0] - self.target
        return solve_scalar(f, self._ell1_range(d), cfg or self.cfg)

    def _edge(self, a, b):
        # a is feasible and b is not (or vice versa); return a feasible point next to the edge
        fa = self.feasible(a)
        for _ in range(60):
            m = math.sqrt(a * b)
            if self.feasible(m) == fa:
                a = m
            else:
                b = m
        return a if fa else b

    def beta_gap(self, d, cfg=None):
        ell1 = self.ell1_for(d, cfg)
        if ell1 is None:
            return None, None
        _, lvl1, rail1 = self.layers(ell1, d)
        yu, yd, y0 = _sub_yields(lvl1, rail1, self.n)
        return ternary_variance(math.log(yu / y0), math.log(yd / y0), self.params.p) - self.beta_sq, ell1

    def solve(self, d_hint):
        scan = SolverConfig(max(self.cfg.abs_tol, _SCAN_TOL), self.cfg.max_iter, self.cfg.bracket)
        ok = [self.feasible(d) for d in _D_GRID]
        points = [d for d, f in zip(_D_GRID, ok) if f]
        for k in range(len(ok) - 1):
            if ok[k] != ok[k + 1]:
                points.append(self._edge(_D_GRID[k], _D_GRID[k + 1]))
        grid = [(d, self.beta_gap(d, scan)[0]) for d in sorted(points)]
        grid = [(d, g) for d, g in grid if g is not None]
        if not grid:
            raise CalibrationError(
                f"ZBDT step {self.n}: y({self.n}) cannot be repriced with x0 < r1 < r2 < {self.cfg.bracket[1]}",
                step=self.n)
        brackets = [(a, b) for (a, ga), (b, gb) in zip(grid, grid[1:]) if (ga > 0) != (gb > 0)]
        if not brackets:
            var = np.array([g for _, g in grid]) + self.beta_sq
            miss = float(np.min(np.abs(var - self.beta_sq)))
            raise CalibrationError(
                f"ZBDT step {self.n}: target variance {self.beta_sq:.6g} of the time-1 log yields lies outside "
                f"the attainable range [{var.min():.6g}, {var.max():.6g}] under p={self.params.p:g}, "
                f"q={self.params.q:g}, x0={self.params.x0:g}", step=self.n, residuals=(0.0, miss))
        # several roots: keep the one nearest the previous step's spread
        a, b = min(brackets, key=lambda ab: abs(math.log(math.sqrt(ab[0] * ab[1]) / d_hint)))
        ga, gb = self.beta_gap(a)[0], self.beta_gap(b)[0]
        if ga is None or gb is None or (ga > 0) == (gb > 0):
            # the loose scan misplaced the sign change; widen to the neighbouring points
            ds = [d for d, _ in grid]
            k = ds.index(a)
            a, b = ds[max(k - 1, 0)], ds[min(k + 2, len(ds) - 1)]
        d = solve_scalar(lambda x: self.beta_gap(x)[0], (a, b), self.cfg)
        return self.level(self.ell1_for(d), d)


def calibrate_zbdt(data: CalibrationInput, params: ZbdtParams = ZbdtParams(),
                   cfg: SolverConfig = SolverConfig(), trace: list | None = None,
                   beta_role: BetaRole = "stdev") -> ZbdtLattice:
    """Fit a ZBDT lattice; each step solves for (r[n-1][1], r[n-1][2], sigma(n)).

    ``beta_role="stdev"`` matches the ternary variance of the time-1 log
    yields to beta(n)^2.  ``"variance"`` matches it to beta(n) itself.
    """
    x0 = params.x0
    levels = [np.array([data.y(1)])]
    if trace is not None:
        trace.append(StepSolution(0, levels[0], 0.0, (0.0,)))
    lo_r, hi_r = cfg.bracket
    if not lo_r < data.y(1) < hi_r:
        raise CalibrationError(f"step 1: r[0][1]={data.y(1)} outside ({lo_r}, {hi_r})", step=1)

    def admissible(x):
        r1, r2, s = x
        return x0 < r1 < r2 < hi_r and s > 0

    d_hint = 2.0 * data.beta(2) if data.n >= 2 else 1.0
    for n in range(2, data.n + 1):
        target = data.discount_price(n)
        beta_sq = _beta_target(data.beta(n), beta_role)
        prev = list(levels)
        try:
            start = np.array(_ZbdtStep(prev, params, n, target, beta_sq, cfg).solve(d_hint))
        except SolverError as exc:
            raise CalibrationError(f"ZBDT step {n}: {exc}", step=n, residuals=exc.residuals) from exc
        # final Newton polish on the full three-equation system
        F = lambda x: _zbdt_residuals(prev, params, n, target, beta_sq, x)
        try:
            result = solve_system(F, start, cfg, domain=admissible, scale=[x0, x0, 0.1])
            x, res, iters = result.x, result.residuals, result.iterations
        except SolverError:
            x, res, iters = start, F(start), 0
        if np.max(np.abs(res)) > 10 * cfg.abs_tol:
            raise CalibrationError(f"ZBDT step {n}: residuals {res} above tolerance", step=n, residuals=res)
        r1, r2, sigma = x
        d_hint = math.log(r2 / r1)
        levels.append(_zbdt_level(r1, r2, sigma, n))
        if trace is not None:
            trace.append(StepSolution(n - 1, levels[-1], sigma, tuple(float(v) for v in res), iters))
    return ZbdtLattice(levels, params)


def extract_market_view(lat: BdtLattice | ZbdtLattice, beta_role: BetaRole = "stdev",
                        face: float = FACE_VALUE) -> CalibrationInput:
    """The y(k), beta(k) a lattice implies: root zero yields and time-1 yield dispersion."""
    _beta_target(1.0, beta_role)
    yields, betas = [], [None]
    for n in range(1, lat.periods + 1):
        pl = price_bond(lat, n, face)
        yields.append(node_yield(pl.root, n, face))
        if n < 2:
            continue
        lvl1 = pl.layers[1]
        rail1 = pl.rail[1] if pl.rail is not None else None
        yu, yd, y0 = _sub_yields(lvl1, rail1, n, face)
        if isinstance(lat, ZbdtLattice):
            v = ternary_variance(math.log(yu / y0), math.log(yd / y0), lat.params.p)
            betas.append(math.sqrt(v) if beta_role == "stdev" else v)
        else:
            betas.append(0.5 * math.log(yu / yd))
    return CalibrationInput.from_arrays(yields, betas)
