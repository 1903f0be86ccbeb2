"""Monotone gradient descent with Armijo backtracking and Barzilai-Borwein trial steps.

Every path minimization in the package runs through this loop.  The trial
step for each iteration is the BB1 quotient <dx,dx>/<dx,dg> from the previous
accepted move (clamped to a sane range), then backtracked until the Armijo
sufficient-decrease condition holds, so accepted steps never increase the
objective.  Termination: gradient norm below tolerance, a long run of
negligible decreases (flat reparameterization modes make tiny gradient norms
unreachable on stiff path problems), the iteration cap, or a failed line
search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["DescentResult", "descend"]

_MAX_BACKTRACKS = 60
_STEP_MIN = 1e-12
_STEP_MAX = 1e8


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    line_search_failed: bool


def descend(
    x0: np.ndarray,
    value_fn: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    *,
    step_init: float = 1.0,
    armijo_c: float = 1e-4,
    step_shrink: float = 0.5,
    grad_tol: float = 1e-8,
    max_iter: int = 100000,
    stagnation_rtol: float = 1e-9,
    stagnation_window: int = 200,
    on_accept: Callable[[int, float, float, float], None] | None = None,
) -> DescentResult:
    """Minimize value_fn from x0; x0 is not modified.

    Stagnation is judged over whole windows: if ``stagnation_window``
    consecutive accepted steps jointly lower the objective by less than
    ``stagnation_rtol * |f|``, the value has converged even though flat modes
    keep the gradient norm finite.  ``on_accept(iteration, value, grad_norm,
    step)`` is invoked after every accepted step.
    """
    x = np.array(x0, dtype=float, copy=True)
    f = float(value_fn(x))
    g = np.asarray(grad_fn(x), dtype=float)
    step = float(step_init)
    prev_dx = None
    prev_dg = None
    f_checkpoint = f
    for k in range(max_iter):
        gn2 = float(np.vdot(g, g))
        gn = np.sqrt(gn2)
        if gn < grad_tol:
            return DescentResult(x, f, gn, k, True, False)
        if prev_dx is not None:
            sy = float(np.vdot(prev_dx, prev_dg))
            if sy > 0.0:
                step = float(np.vdot(prev_dx, prev_dx)) / sy
            step = min(max(step, _STEP_MIN), _STEP_MAX)
        t = step
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            x_new = x - t * g
            f_new = float(value_fn(x_new))
            if f_new <= f - armijo_c * t * gn2:
                accepted = True
                break
            t *= step_shrink
        if accepted and not np.any(x_new != x):
            accepted = False  # backtracked to a zero step at rounding floor
        if not accepted:
            return DescentResult(x, f, gn, k, False, True)
        g_new = np.asarray(grad_fn(x_new), dtype=float)
        prev_dx = x_new - x
        prev_dg = g_new - g
        x, f, g = x_new, f_new, g_new
        if on_accept is not None:
            on_accept(k, f, float(np.linalg.norm(g)), t)
        if (k + 1) % stagnation_window == 0:
            if f_checkpoint - f < stagnation_rtol * max(abs(f), 1e-300):
                return DescentResult(x, f, float(np.linalg.norm(g)), k + 1, True, False)
            f_checkpoint = f
    return DescentResult(x, f, float(np.linalg.norm(g)), max_iter, False, False)
