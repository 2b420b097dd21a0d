"""Monotone quasi-Newton descent shared by the fitting routines."""

from typing import Callable, List, Tuple

import numpy as np

LBFGS_MEMORY = 10
ARMIJO = 1e-4
MIN_STEP = 1e-20


def lbfgs_direction(g: np.ndarray, pairs) -> np.ndarray:
    """Two-loop recursion: approximate inverse Hessian applied to ``-g``."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    s, y, _ = pairs[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def descend(
    value: Callable[[np.ndarray], float],
    value_and_grad: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    x: np.ndarray,
    max_iters: int,
    step_size: float = 1.0,
    tolerance: float = 0.0,
    gtol: float = 0.0,
    exact_fit: float = 0.0,
):
    """Minimize with L-BFGS directions and step-halving backtracking.

    The first step goes along ``-g`` with trial length ``step_size``; later
    steps follow the limited-memory BFGS direction with unit trial length.
    A trial is halved until the Armijo condition holds, so every accepted
    step strictly lowers ``value``.

    Stops with status ``"converged"`` when the gradient norm is at most
    ``gtol``, the objective is at most ``exact_fit``, or one step lowers it
    by no more than ``tolerance * f``; ``"stalled"`` when no step length
    gives a decrease; ``"max_iters"`` when the budget runs out.

    Returns ``(x, f, iterations, status, trace)`` where ``trace`` holds the
    objective before the first step and after every accepted one.
    """
    f, g = value_and_grad(x)
    trace: List[float] = [f]
    pairs: list = []
    for it in range(max_iters):
        if float(np.sqrt(g @ g)) <= gtol:
            return x, f, it, "converged", trace
        d = lbfgs_direction(g, pairs) if pairs else -g
        slope = float(g @ d)
        if slope >= 0:
            pairs.clear()
            d, slope = -g, -float(g @ g)
        step = 1.0 if pairs else step_size
        while step >= MIN_STEP:
            x_new = x + step * d
            if value(x_new) <= f + ARMIJO * step * slope:
                break
            step *= 0.5
        else:
            return x, f, it, "stalled", trace
        f_new, g_new = value_and_grad(x_new)
        dx, dg = x_new - x, g_new - g
        curvature = float(dx @ dg)
        if curvature > 1e-12 * float(np.sqrt((dx @ dx) * (dg @ dg))):
            pairs.append((dx, dg, 1.0 / curvature))
            if len(pairs) > LBFGS_MEMORY:
                pairs.pop(0)
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        if f <= exact_fit or decrease <= tolerance * f:
            return x, f, it + 1, "converged", trace
    if float(np.sqrt(g @ g)) <= gtol:
        return x, f, max_iters, "converged", trace
    return x, f, max_iters, "max_iters", trace
