"""Derivative-free maximization with Nelder-Mead.

The marginal-likelihood surfaces this package optimizes are smooth but
have no cheap gradients, so a simplex search with deterministic restarts
is used everywhere.  Reflection, expansion, contraction and shrink
coefficients are 1, 2, 0.5 and 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DataError, NumericalError

__all__ = ["OptimConfig", "OptimResult", "maximize"]


@dataclass(frozen=True)
class OptimConfig:
    """Termination settings for :func:`maximize`.

    A run stops when the simplex diameter falls below ``x_tol`` OR the
    spread of objective values across the simplex falls below ``f_tol``,
    whichever happens first, or after ``max_iters`` iterations.
    """

    max_iters: int = 2000
    x_tol: float = 1e-8
    f_tol: float = 1e-10
    restarts: int = 2
    initial_simplex_scale: float = 0.1

    def __post_init__(self):
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise DataError(f"max_iters = {self.max_iters!r}, need integer >= 1")
        if not (self.x_tol > 0 and math.isfinite(self.x_tol)):
            raise DataError(f"x_tol = {self.x_tol!r}, need finite > 0")
        if not (self.f_tol > 0 and math.isfinite(self.f_tol)):
            raise DataError(f"f_tol = {self.f_tol!r}, need finite > 0")
        if not isinstance(self.restarts, int) or self.restarts < 0:
            raise DataError(f"restarts = {self.restarts!r}, need integer >= 0")
        if not (self.initial_simplex_scale > 0 and math.isfinite(self.initial_simplex_scale)):
            raise DataError(
                f"initial_simplex_scale = {self.initial_simplex_scale!r}, need finite > 0"
            )


@dataclass(frozen=True)
class OptimResult:
    """Outcome of a maximization.

    ``trace`` records ``(iteration, best objective so far)`` pairs across
    all restarts, so the recorded objective is non-decreasing.
    ``converged`` is true only if every restart terminated on a tolerance
    rather than on the iteration cap.
    """

    point: tuple[float, ...]
    objective: float
    iterations: int
    converged: bool
    trace: tuple[tuple[int, float], ...]


def _check_value(fx: float, x: np.ndarray) -> float:
    if math.isnan(fx):
        raise NumericalError(f"objective returned NaN at point {tuple(x)}")
    return fx


def _nelder_mead(neg_f: Callable, x0: np.ndarray, scale: float, cfg: OptimConfig):
    """Minimize ``neg_f`` from ``x0``; returns (x, fx, iterations, converged, values_per_iter)."""
    dim = len(x0)
    simplex = [x0.copy()]
    for i in range(dim):
        v = x0.copy()
        v[i] += scale * max(1.0, abs(v[i]))
        simplex.append(v)
    simplex = np.array(simplex)
    values = np.array([_check_value(neg_f(v), v) for v in simplex])

    alpha, gamma, beta, delta = 1.0, 2.0, 0.5, 0.5
    best_per_iter = []
    iterations = 0
    converged = False
    for iterations in range(cfg.max_iters + 1):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        best_per_iter.append(values[0])
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        finite = np.isfinite(values)
        spread = values[-1] - values[0] if finite.all() else math.inf
        if diameter < cfg.x_tol or spread < cfg.f_tol:
            converged = True
            break
        if iterations == cfg.max_iters:
            break

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - simplex[-1])
        fr = _check_value(neg_f(xr), xr)
        if fr < values[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = _check_value(neg_f(xe), xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + beta * (xr - centroid)
            else:
                xc = centroid - beta * (centroid - simplex[-1])
            fc = _check_value(neg_f(xc), xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for k in range(1, dim + 1):
                    simplex[k] = simplex[0] + delta * (simplex[k] - simplex[0])
                    values[k] = _check_value(neg_f(simplex[k]), simplex[k])
    i_best = int(np.argmin(values))
    return simplex[i_best], values[i_best], iterations, converged, best_per_iter


def maximize(
    objective: Callable[[Sequence[float]], float],
    init: Sequence[float],
    cfg: OptimConfig | None = None,
) -> OptimResult:
    """Maximize a scalar objective with Nelder-Mead plus restarts.

    Restart ``r`` starts from the best point found so far, displaced by a
    fixed pseudo-random direction (seeded only by ``r``), so the whole
    search is deterministic.  The returned point never scores below the
    initial point.

    Raises
    ------
    NumericalError
        If the objective evaluates to NaN; the offending point is named.
        Values of -inf are allowed and treated as "worse than anything".
    """
    cfg = cfg or OptimConfig()
    x0 = np.asarray(init, dtype=float)
    if x0.ndim != 1 or len(x0) == 0 or not np.all(np.isfinite(x0)):
        raise DataError(f"init point must be a finite 1-d vector, got {init!r}")

    def neg_f(x):
        return -float(objective(x))

    best_x = x0.copy()
    best_v = _check_value(neg_f(x0), x0)
    trace: list[tuple[int, float]] = []
    total_iters = 0
    all_converged = True
    for r in range(cfg.restarts + 1):
        if r == 0:
            start = x0
        else:
            rng = np.random.default_rng(2654435761 + r)
            step = rng.standard_normal(len(x0))
            start = best_x + cfg.initial_simplex_scale * step * np.maximum(
                1.0, np.abs(best_x)
            )
        x, v, iters, conv, per_iter = _nelder_mead(
            neg_f, np.asarray(start, dtype=float), cfg.initial_simplex_scale, cfg
        )
        all_converged = all_converged and conv
        running = best_v
        for k, val in enumerate(per_iter):
            running = min(running, val)
            trace.append((total_iters + k, -running))
        total_iters += iters
        if v < best_v:
            best_x, best_v = x, v
    return OptimResult(
        point=tuple(float(t) for t in best_x),
        objective=float(-best_v),
        iterations=total_iters,
        converged=all_converged,
        trace=tuple(trace),
    )
