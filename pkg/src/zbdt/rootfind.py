"""Bracketed scalar and damped multivariate root finders used by calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["SolverConfig", "SolverError", "SystemResult", "solve_scalar", "solve_system"]

_EPS = np.finfo(float).eps


class SolverError(RuntimeError):
    """Root finding failed; ``residuals`` holds the last residual vector if any."""

    def __init__(self, message, residuals=None, iterations=None, x=None):
        super().__init__(message)
        self.residuals = residuals
        self.iterations = iterations
        self.x = x


@dataclass(frozen=True)
class SolverConfig:
    abs_tol: float = 1e-12
    max_iter: int = 200
    bracket: tuple[float, float] = (1e-6, 1.0)

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        lo, hi = self.bracket
        if not lo < hi:
            raise ValueError("bracket low must be below bracket high")


def solve_scalar(f: Callable[[float], float], bracket: Sequence[float] | None = None,
                 cfg: SolverConfig = SolverConfig()) -> float:
    """Root of ``f`` on a sign-changing bracket (Illinois regula falsi, bisection fallback).

    Stops when ``|f| <= cfg.abs_tol`` or when the bracket has shrunk to a few
    ulps, in which case the root is pinned to machine precision.
    """
    a, b = map(float, bracket if bracket is not None else cfg.bracket)
    if not a < b:
        raise ValueError("bracket must satisfy low < high")
    fa, fb = f(a), f(b)
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise SolverError(f"non-finite residual at bracket ends ({fa}, {fb})")
    if abs(fa) <= cfg.abs_tol:
        return a
    if abs(fb) <= cfg.abs_tol:
        return b
    if (fa > 0) == (fb > 0):
        raise SolverError(f"no sign change on [{a:g}, {b:g}]: f = ({fa:.3g}, {fb:.3g})")

    side = 0
    width = b - a
    for it in range(cfg.max_iter):
        c = (a * fb - b * fa) / (fb - fa)
        # bisect when the secant point stalls against an end or the bracket shrinks slowly
        if not a < c < b or (it % 4 == 3 and b - a > 0.5 * width):
            c = 0.5 * (a + b)
        if it % 4 == 3:
            width = b - a
        fc = f(c)
        if not math.isfinite(fc):
            raise SolverError(f"non-finite residual at x={c}", iterations=it + 1)
        if abs(fc) <= cfg.abs_tol:
            return c
        if (fc > 0) == (fb > 0):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
        if b - a <= 4 * _EPS * max(abs(a), abs(b), 1e-300):
            return c if abs(fc) <= min(abs(fa), abs(fb)) else (a if abs(fa) < abs(fb) else b)
    raise SolverError(f"no convergence within {cfg.max_iter} iterations", residuals=[fc], iterations=cfg.max_iter)


@dataclass
class SystemResult:
    x: np.ndarray
    residuals: np.ndarray
    iterations: int


def _jacobian(F, x, fx, scale, inside):
    n = x.size
    J = np.empty((fx.size, n))
    for k in range(n):
        h = _EPS ** (1 / 3) * max(abs(x[k]), scale[k])
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        # fall back to a one-sided difference next to the domain boundary
        if inside(xp) and inside(xm):
            J[:, k] = (F(xp) - F(xm)) / (2 * h)
        elif inside(xp):
            J[:, k] = (F(xp) - fx) / h
        elif inside(xm):
            J[:, k] = (fx - F(xm)) / h
        else:
            raise SolverError(f"no admissible finite-difference probe around x={x}", residuals=fx, x=x)
    return J


def solve_system(F: Callable[[np.ndarray], np.ndarray], start: Sequence[float],
                 cfg: SolverConfig = SolverConfig(),
                 domain: Callable[[np.ndarray], bool] | None = None,
                 scale: Sequence[float] | None = None) -> SystemResult:
    """Damped Newton iteration with a central-difference Jacobian.

    ``domain(x)`` must hold at the start and at every accepted iterate; a
    Newton step is halved until it lands inside the domain and reduces
    ``|F|^2``.  ``scale`` gives the typical magnitude of each unknown (used
    for the finite-difference step).
    """
    x = np.array(start, dtype=float)
    inside = domain or (lambda _: True)
    if not inside(x):
        raise SolverError(f"start {x} lies outside the admissible domain")
    scale = np.ones_like(x) if scale is None else np.asarray(scale, dtype=float)
    fx = np.asarray(F(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise SolverError(f"non-finite residuals at start {x}", residuals=fx)
    for it in range(1, cfg.max_iter + 1):
        if np.max(np.abs(fx)) <= cfg.abs_tol:
            return SystemResult(x, fx, it - 1)
        J = _jacobian(F, x, fx, scale, inside)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -fx, rcond=None)[0]
        merit = float(fx @ fx)
        t = 1.0
        while True:
            cand = x + t * step
            if inside(cand):
                fc = np.asarray(F(cand), dtype=float)
                if np.all(np.isfinite(fc)) and float(fc @ fc) < (1 - 1e-4 * t) * merit:
                    break
            t *= 0.5
            if t < 1e-10:
                if np.all(np.abs(step) <= 8 * _EPS * np.maximum(np.abs(x), scale)):
                    # already at machine precision; Newton cannot improve further
                    raise SolverError(
                        f"stalled at max|F|={np.max(np.abs(fx)):.3g} above tolerance {cfg.abs_tol:g}",
                        residuals=fx, iterations=it, x=x)
                raise SolverError(f"line search failed at x={x}, max|F|={np.max(np.abs(fx)):.3g}",
                                  residuals=fx, iterations=it, x=x)
        x, fx = cand, fc
    if np.max(np.abs(fx)) <= cfg.abs_tol:
        return SystemResult(x, fx, cfg.max_iter)
    raise SolverError(f"no convergence within {cfg.max_iter} iterations, max|F|={np.max(np.abs(fx)):.3g}",
                      residuals=fx, iterations=cfg.max_iter, x=x)
