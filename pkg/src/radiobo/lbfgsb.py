"""Limited-memory BFGS with box constraints.

Gradient projection picks the active set (variables pinned at a bound with
the gradient pushing outward), a two-loop L-BFGS recursion builds a
quasi-Newton direction on the free variables, and a projected Armijo
backtracking search keeps every iterate inside the box. This is the compact
variant of L-BFGS-B: no generalized Cauchy point / subspace minimization.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)
_EPS = np.finfo(float).eps

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]

GRADIENT_TOL = "gradient-tolerance"
STEP_TOL = "step-tolerance"
MAX_ITER = "max-iterations"
LINE_SEARCH_FAILED = "line-search-failure"


class NonFiniteObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class BoxProblem:
    lower: np.ndarray
    upper: np.ndarray
    objective: Objective

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise ValueError("need lower < upper for every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size


@dataclass(frozen=True)
class OptOptions:
    memory: int = 10
    gtol: float = 1e-5
    steptol: float = 1e-9
    max_iter: int = 200
    armijo_c: float = 1e-4
    max_backtracks: int = 60
    secant_refine: bool = True
    curvature_eta: float = 0.01
    max_expansions: int = 30


@dataclass
class OptResult:
    x_star: np.ndarray
    f_star: float
    iterations: int
    converged: bool
    termination_reason: str
    n_evals: int = 0


def projected_gradient(x: np.ndarray, g: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Step to the projection of x - g, minus x. Zero exactly at a KKT point."""
    return np.clip(x - g, lower, upper) - x


def _two_loop(g: np.ndarray, pairs, free: np.ndarray) -> np.ndarray:
    if free.all():
        free = slice(None)
    q = g[free].copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s[free] @ q)
        alphas.append(a)
        q -= a * y[free]
    if pairs:
        s, y, _ = pairs[-1]
        yy = y[free] @ y[free]
        sy = s[free] @ y[free]
        gamma = sy / yy if yy > 0 and sy > 0 else 1.0
    else:
        gamma = 1.0 / max(1.0, np.linalg.norm(q))
    r = gamma * q
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y[free] @ r)
        r += (a - b) * s[free]
    return r


def _expand(problem, x, f, g, d, x_new, f_new, g_new, opts):
    """Doubling phase of the line search; returns the best point and evals used."""
    lo, hi = problem.lower, problem.upper
    t, evals = 1.0, 0
    for _ in range(opts.max_expansions):
        x_try = np.clip(x + 2.0 * t * d, lo, hi)
        if np.array_equal(x_try, x_new):
            break  # pinned against the box
        f_try, g_try = problem.objective(x_try)
        evals += 1
        if not (np.isfinite(f_try) and np.all(np.isfinite(g_try))):
            break
        if f_try >= f_new or f_try > f + opts.armijo_c * (g @ (x_try - x)):
            break
        t *= 2.0
        x_new, f_new, g_new = x_try, f_try, np.asarray(g_try, dtype=float)
        if g_new @ d >= 0:
            break
    return x_new, f_new, g_new, t, evals


def minimize(problem: BoxProblem, x0, opts: OptOptions | None = None) -> OptResult:
    opts = opts or OptOptions()
    if opts.memory < 1:
        raise ValueError("memory must be >= 1")
    lo, hi = problem.lower, problem.upper
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    f, g = problem.objective(x)
    g = np.asarray(g, dtype=float)
    n_evals = 1
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteObjectiveError(f"objective not finite at start point {x}")

    pairs: deque = deque(maxlen=opts.memory)
    reason = MAX_ITER
    it = 0
    for it in range(1, opts.max_iter + 1):
        pg = projected_gradient(x, g, lo, hi)
        if np.max(np.abs(pg)) <= opts.gtol:
            reason = GRADIENT_TOL
            it -= 1
            break

        at_lo = (x <= lo) & (g > 0)
        at_hi = (x >= hi) & (g < 0)
        free = ~(at_lo | at_hi)
        d = np.zeros_like(x)
        d[free] = -_two_loop(g, list(pairs), free)
        slope = g @ d
        if not slope < 0:
            # lost descent on the free subspace: restart from steepest descent
            pairs.clear()
            d = np.zeros_like(x)
            d[free] = -g[free] / max(1.0, np.linalg.norm(g[free]))
            slope = g @ d

        t = 1.0
        accepted = False
        for _ in range(opts.max_backtracks):
            x_new = np.clip(x + t * d, lo, hi)
            f_new, g_new = problem.objective(x_new)
            n_evals += 1
            if np.isfinite(f_new) and np.all(np.isfinite(g_new)):
                # Armijo on the projected arc
                if f_new <= f + opts.armijo_c * (g @ (x_new - x)):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            reason = LINE_SEARCH_FAILED
            log.debug("line search failed at iteration %d, x=%s", it, x)
            break

        g_new = np.asarray(g_new, dtype=float)
        if t == 1.0 and g_new @ d <= slope:
            # No positive curvature along d (locally linear or concave), so the
            # quasi-Newton scale is meaningless: keep doubling while f drops.
            x_new, f_new, g_new, t, extra = _expand(problem, x, f, g, d, x_new, f_new, g_new, opts)
            n_evals += extra
        elif opts.secant_refine and np.array_equal(x_new, x + t * d):
            # Secant step on the directional derivative; exact on quadratics.
            slope_new = g_new @ d
            if abs(slope_new) > opts.curvature_eta * abs(slope) and slope_new != slope:
                t_sec = t * slope / (slope - slope_new)
                if t_sec > 0:
                    x_sec = np.clip(x + t_sec * d, lo, hi)
                    f_sec, g_sec = problem.objective(x_sec)
                    n_evals += 1
                    if np.isfinite(f_sec) and np.all(np.isfinite(g_sec)) and f_sec < f_new:
                        x_new, f_new, g_new = x_sec, f_sec, np.asarray(g_sec, dtype=float)
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > _EPS * (y @ y):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = x_new, float(f_new), g_new
        if np.max(np.abs(s)) <= opts.steptol * (1.0 + np.max(np.abs(x))):
            reason = STEP_TOL
            break
    else:
        pg = projected_gradient(x, g, lo, hi)
        if np.max(np.abs(pg)) <= opts.gtol:
            reason = GRADIENT_TOL

    converged = reason in (GRADIENT_TOL, STEP_TOL)
    return OptResult(x, float(f), it, converged, reason, n_evals)
