"""Path and field functionals: action integrals, the KL objective, and its zero-temperature limit.

Quadrature conventions.  Kinetic terms pair forward path differences with
interval midpoints; everything evaluated at nodes integrates by the composite
trapezoid rule.  These pairings keep the discrete gradients of the energy
exact (see :mod:`tpgauss.optimize`).

The module provides three layers:

* finite-temperature integrals of a single path: Onsager-Machlup, the
  large-deviation action on an arbitrary horizon, and the rescaled
  Ginzburg-Landau energy on [0, 1];
* the joint (path, field) objectives: the quadratic fluctuation penalty, its
  closed-form minimizer |D^2 V|, the reduced objective ``fbar``, the expanded
  small-temperature surrogate ``simplified_f``, and the full KL objective
  evaluated through the Green's kernel;
* the zero-temperature limit: minimal transition costs between critical
  points ('quasipotential') and the limit functional on piecewise-constant
  paths.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats.qmc import Sobol

from ._descent import DescentResult, descend
from .bridge import GaussianPathMeasure
from .grids import (
    BVStepPath,
    FieldGrid,
    PathGrid,
    field_derivative,
    path_derivative,
    trapezoid,
)
from .greens import log_det_term
from .potentials import PotentialModel, psi_eps

__all__ = [
    "KLBreakdown",
    "GammaLimitValue",
    "QuasipotentialResult",
    "onsager_machlup",
    "freidlin_wentzell",
    "ginzburg_landau",
    "quadratic_penalty",
    "closed_form_A",
    "fbar",
    "field_h1_norm_sq",
    "simplified_f",
    "kl_objective",
    "quasipotential",
    "quasipotential_minimizer",
    "limit_f",
    "snap_to_critical_points",
]

_QMC_POINTS_LOG2 = 14
_QMC_SEED = 20750
_QUAD_CHECK_RTOL = 1e-4


# ---------------------------------------------------------------------------
# single-path functionals
# ---------------------------------------------------------------------------

def _kinetic(m: PathGrid) -> float:
    dm = path_derivative(m)
    return float(np.sum(dm * dm) / m.n)


def onsager_machlup(p: PotentialModel, m: PathGrid, eps: float) -> float:
    """(1/2) int ( |m'|^2/2 + Psi_eps(m) ) dt on the unit interval."""
    psi = psi_eps(p, m.values, eps)
    return 0.5 * (0.5 * _kinetic(m) + float(trapezoid(psi, m.n)))


def freidlin_wentzell(p: PotentialModel, m: PathGrid, kind: str,
                      horizon_T: float) -> float:
    """Large-deviation action of the path reinterpreted on [0, horizon_T].

    kind "rate":      (1/4) int |m' + grad V(m)|^2 dt
    kind "symmetric": (1/4) int ( |m'|^2 + |grad V(m)|^2 ) dt

    The two differ by (V(x_plus) - V(x_minus))/2 up to quadrature error.
    Both are evaluated by the midpoint rule so the drift and the derivative
    meet at the same points.
    """
    if horizon_T <= 0:
        raise ValueError("horizon_T must be positive")
    dt = horizon_T / m.n
    dm = np.diff(m.values, axis=0) / dt
    mid = 0.5 * (m.values[1:] + m.values[:-1])
    g = p.grad(mid)
    if kind == "rate":
        integrand = np.sum((dm + g) ** 2, axis=-1)
    elif kind == "symmetric":
        integrand = np.sum(dm * dm, axis=-1) + np.sum(g * g, axis=-1)
    else:
        raise ValueError(f"kind must be 'rate' or 'symmetric', got {kind!r}")
    return float(0.25 * np.sum(integrand) * dt)


def ginzburg_landau(p: PotentialModel, m: PathGrid, eps: float) -> float:
    """(eps/4) int |m'|^2 + (1/(4 eps)) int |grad V(m)|^2 on the unit interval."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = p.grad(m.values)
    pot = float(trapezoid(np.sum(g * g, axis=-1), m.n))
    return 0.25 * eps * _kinetic(m) + 0.25 / eps * pot


# ---------------------------------------------------------------------------
# joint (path, field) objectives
# ---------------------------------------------------------------------------

def _penalty_integrand(hess: np.ndarray, A_values: np.ndarray) -> np.ndarray:
    """Tr((D2V - A)^2 A^{-1}) per node, via symmetric solves."""
    S = hess - A_values
    X = np.linalg.solve(A_values, S)
    return np.einsum("tij,tji->t", S, X)


def quadratic_penalty(p: PotentialModel, m: PathGrid, A: FieldGrid) -> float:
    """(1/4) int Tr((D^2 V(m) - A)^2 A^{-1}) dt."""
    hess = p.hessian(m.values)
    return float(0.25 * trapezoid(_penalty_integrand(hess, A.values), m.n))


def closed_form_A(p: PotentialModel, m: PathGrid, floor_a: float) -> FieldGrid:
    """Nodewise minimizer |D^2 V(m)| of the fluctuation penalty, floored at a."""
    hess = p.hessian(m.values)
    w, P = np.linalg.eigh(hess)
    w = np.maximum(np.abs(w), floor_a)
    vals = (P * w[..., None, :]) @ np.swapaxes(P, -1, -2)
    vals = 0.5 * (vals + np.swapaxes(vals, 1, 2))
    return FieldGrid(vals, floor_a)


def fbar(p: PotentialModel, m: PathGrid, A: FieldGrid, eps: float) -> float:
    """Reduced objective: Ginzburg-Landau energy plus the fluctuation penalty."""
    return ginzburg_landau(p, m, eps) + quadratic_penalty(p, m, A)


def field_h1_norm_sq(A: FieldGrid) -> float:
    """Discrete squared H^1 norm: trapezoid of |A|_F^2 plus trapezoid of |A'|_F^2."""
    a2 = np.sum(A.values**2, axis=(1, 2))
    ap = field_derivative(A)
    ap2 = np.sum(ap**2, axis=(1, 2))
    return float(trapezoid(a2, A.n) + trapezoid(ap2, A.n))


def _third_contraction(p: PotentialModel, values: np.ndarray) -> np.ndarray:
    """(D^3 V . grad V)_ij = sum_k d^3 V/dx_i dx_j dx_k * dV/dx_k, per node."""
    t3 = p.third(values)
    g = p.grad(values)
    return np.einsum("tijk,tk->tij", t3, g)


def simplified_f(p: PotentialModel, m: PathGrid, A: FieldGrid, eps: float,
                 gamma: float) -> float:
    """Small-temperature surrogate of the KL objective.

    fbar plus (1/4) int Tr((D^3 V . grad V) A^{-1}) plus the eps^gamma H^1
    regularizer; agrees with the full KL objective up to O(sqrt(eps)).
    """
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    T = _third_contraction(p, m.values)
    X = np.linalg.solve(A.values, T)
    third_term = 0.25 * float(trapezoid(np.trace(X, axis1=1, axis2=2), m.n))
    reg = eps**gamma * field_h1_norm_sq(A)
    return fbar(p, m, A, eps) + third_term + reg


# ---------------------------------------------------------------------------
# the full KL objective
# ---------------------------------------------------------------------------

@dataclass
class KLBreakdown:
    """Additive decomposition of the eps-scaled modified KL objective.

    expectation_psi: (1/(2 eps)) int E[Psi_eps(m + z)] dt
    kinetic:         (eps/4) int |m'|^2 dt
    quad_expect:     -(eps/2) int B : G(t,t) dt
    trace_term:      (1/2) int Tr A dt
    logdet_term:     (eps/2) log det of the propagator Gram integral
    regularizer:     eps^gamma (discrete H^1 norm of A)^2
    """

    expectation_psi: float
    kinetic: float
    quad_expect: float
    trace_term: float
    logdet_term: float
    regularizer: float
    total: float

    def parts_sum(self) -> float:
        return (self.expectation_psi + self.kinetic + self.quad_expect
                + self.trace_term + self.logdet_term + self.regularizer)


def _sqrt_psd(mats: np.ndarray) -> np.ndarray:
    w, P = np.linalg.eigh(mats)
    w = np.clip(w, 0.0, None)
    return (P * np.sqrt(w)[..., None, :]) @ np.swapaxes(P, -1, -2)


def _expect_psi(p: PotentialModel, m_values: np.ndarray, cov: np.ndarray,
                eps: float, quad_order: int,
                qmc_log2: int = _QMC_POINTS_LOG2) -> np.ndarray:
    """E[Psi_eps(m(t) + z(t))] per node for z(t) ~ N(0, cov(t)).

    Tensor Gauss-Hermite of order ``quad_order`` for d <= 2; for d >= 3,
    2**qmc_log2 scrambled Sobol points mapped through the normal quantile.
    """
    d = m_values.shape[1]
    if d <= 2:
        x, w = np.polynomial.hermite.hermgauss(quad_order)
        if d == 1:
            sig = np.sqrt(np.clip(cov[:, 0, 0], 0.0, None))
            pts = m_values[:, None, :] + np.sqrt(2.0) * sig[:, None, None] * x[None, :, None]
            weights = w / np.sqrt(np.pi)
        else:
            L = _sqrt_psd(cov)
            xa, xb = np.meshgrid(x, x, indexing="ij")
            xi = np.stack([xa.ravel(), xb.ravel()], axis=-1)  # (q^2, 2)
            pts = m_values[:, None, :] + np.sqrt(2.0) * np.einsum("nij,qj->nqi", L, xi)
            weights = np.outer(w, w).ravel() / np.pi
        vals = psi_eps(p, pts, eps)
        return vals @ weights
    L = _sqrt_psd(cov)
    sob = Sobol(d, scramble=True, seed=_QMC_SEED)
    u = sob.random(2**qmc_log2)
    xi = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    pts = m_values[:, None, :] + np.einsum("nij,qj->nqi", L, xi)
    return psi_eps(p, pts, eps).mean(axis=1)


def kl_objective(gm: GaussianPathMeasure, p: PotentialModel, gamma: float,
                 quad_order: int, check_quadrature: bool = True) -> KLBreakdown:
    """Evaluate the eps-scaled KL objective of the measure against the potential.

    The expectation of the tilted potential reduces exactly to the marginal
    laws N(m(t), 2 G(t,t)), evaluated nodewise by Gaussian quadrature.  For
    d >= 3 ``quad_order`` is the log2 of the quasi-Monte-Carlo point count.
    With ``check_quadrature`` the node quadrature is repeated at doubled order
    and a relative movement above 1e-4 emits a warning.
    """
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    if quad_order < 1:
        raise ValueError("quad_order must be positive")
    eps = gm.eps
    n = gm.n
    m = gm.mean
    cov = 2.0 * gm.green_diag.padded()

    e_psi_nodes = _expect_psi(p, m.values, cov, eps, quad_order)
    expectation_psi = float(trapezoid(e_psi_nodes, n)) / (2.0 * eps)
    if check_quadrature:
        refined = float(trapezoid(
            _expect_psi(p, m.values, cov, eps, 2 * quad_order,
                        qmc_log2=_QMC_POINTS_LOG2 + 1),
            n)) / (2.0 * eps)
        denom = max(abs(expectation_psi), 1e-30)
        if abs(refined - expectation_psi) > _QUAD_CHECK_RTOL * denom:
            warnings.warn(
                "doubling the quadrature order moved the expectation term by "
                f"{abs(refined - expectation_psi) / denom:.2e} relative; "
                "increase quad_order", RuntimeWarning)

    kinetic = 0.25 * eps * _kinetic(m)

    bg = np.einsum("tij,tji->t", gm.operator.b_nodes, gm.green_diag.blocks)
    bg_full = np.concatenate([[0.0], bg, [0.0]])
    quad_expect = -0.5 * eps * float(trapezoid(bg_full, n))

    trace_term = 0.5 * float(trapezoid(
        np.trace(gm.field.values, axis1=1, axis2=2), n))
    logdet = log_det_term(gm.fundamental, eps)
    reg = eps**gamma * field_h1_norm_sq(gm.field)
    total = expectation_psi + kinetic + quad_expect + trace_term + logdet + reg
    return KLBreakdown(expectation_psi=expectation_psi, kinetic=kinetic,
                       quad_expect=quad_expect, trace_term=trace_term,
                       logdet_term=logdet, regularizer=reg, total=total)


# ---------------------------------------------------------------------------
# zero-temperature limit
# ---------------------------------------------------------------------------

@dataclass
class QuasipotentialResult:
    value: float
    converged: bool
    times: np.ndarray
    path: np.ndarray
    grad_norm: float
    iterations: int


_QP_CACHE: dict = {}


def _require_critical(p: PotentialModel, x: np.ndarray, label: str) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not p.is_critical_point(x):
        raise ValueError(f"{label} {x} is not a declared critical point")
    return x


def quasipotential_minimizer(
    p: PotentialModel,
    x_from,
    x_to,
    horizon_T: float = 20.0,
    n: int = 2000,
    grad_tol: float = 1e-9,
    max_iter: int = 200000,
) -> QuasipotentialResult:
    """Minimize the transition cost (1/4) int (|m'|^2 + |grad V(m)|^2) on [-T, T].

    Gradient descent with Armijo backtracking from the straight line; results
    are cached per (potential, endpoints, horizon, resolution).  For pairs
    where exactly one endpoint is a minimum the value is cross-checked against
    |V(x_to) - V(x_from)|/2, the closed form attained by heteroclinic orbits.
    """
    x_from = _require_critical(p, x_from, "x_from")
    x_to = _require_critical(p, x_to, "x_to")
    key = (id(p), x_from.tobytes(), x_to.tobytes(), float(horizon_T), int(n))
    if key in _QP_CACHE:
        return _QP_CACHE[key]
    d = p.dim
    span = 2.0 * horizon_T
    dt = span / n
    times = -horizon_T + np.arange(n + 1) * dt
    if np.allclose(x_from, x_to, rtol=0.0, atol=0.0):
        res = QuasipotentialResult(0.0, True, times,
                                   np.repeat(x_from[None, :], n + 1, axis=0), 0.0, 0)
        _QP_CACHE[key] = res
        return res

    def full(interior: np.ndarray) -> np.ndarray:
        path = np.empty((n + 1, d))
        path[0] = x_from
        path[-1] = x_to
        path[1:-1] = interior.reshape(n - 1, d)
        return path

    def cost(interior: np.ndarray) -> float:
        path = full(interior)
        dm = np.diff(path, axis=0) / dt
        kin = 0.25 * np.sum(dm * dm) * dt
        g = p.grad(path)
        pot = 0.25 * float(trapezoid(np.sum(g * g, axis=-1), n)) * span
        return kin + pot

    def grad(interior: np.ndarray) -> np.ndarray:
        path = full(interior)
        lap = path[2:] - 2.0 * path[1:-1] + path[:-2]
        gi = -0.5 * lap / dt
        hv = np.einsum("tij,tj->ti", p.hessian(path[1:-1]), p.grad(path[1:-1]))
        gi += 0.5 * dt * hv
        return gi.ravel()

    t01 = np.linspace(0.0, 1.0, n + 1)[1:-1, None]
    start = ((1.0 - t01) * x_from[None, :] + t01 * x_to[None, :]).ravel()
    # value-accuracy stopping: a whole window improving below 1e-7 relative
    # leaves the cost many digits inside the tolerances used downstream
    out: DescentResult = descend(
        start, cost, grad,
        grad_tol=grad_tol, max_iter=max_iter,
        stagnation_rtol=1e-7, stagnation_window=200,
    )
    if not out.converged:
        warnings.warn(
            f"transition-cost minimization stopped after {out.iterations} "
            f"iterations with gradient norm {out.grad_norm:.2e}", RuntimeWarning)
    res = QuasipotentialResult(out.value, out.converged, times,
                               full(out.x), out.grad_norm, out.iterations)
    kinds = {p.nearest_critical_point(x_from).kind, p.nearest_critical_point(x_to).kind}
    if "minimum" in kinds and kinds != {"minimum"}:
        closed = 0.5 * abs(float(p.energy(x_to)) - float(p.energy(x_from)))
        if closed > 0 and abs(res.value - closed) > 0.05 * closed:
            warnings.warn(
                f"transition cost {res.value:.6g} deviates from the "
                f"extremum-pair closed form {closed:.6g} by more than 5%",
                RuntimeWarning)
    _QP_CACHE[key] = res
    return res


def quasipotential(p: PotentialModel, x_from, x_to, horizon_T: float = 20.0,
                   n: int = 2000) -> float:
    """Minimal transition cost between two declared critical points."""
    return quasipotential_minimizer(p, x_from, x_to, horizon_T, n).value


@dataclass
class GammaLimitValue:
    """Zero-temperature limit value on a piecewise-constant path."""

    jump_energy: float
    penalty: float
    total: float


def limit_f(p: PotentialModel, m: BVStepPath, A: FieldGrid, x_minus, x_plus,
            horizon_T: float = 20.0, qp_n: int = 2000) -> GammaLimitValue:
    """Limit functional: boundary and jump transition costs plus the fluctuation penalty.

    Every level of the step path must be a declared critical point; the jump
    set is read directly from the breakpoints.  Transition costs reuse the
    cached quasipotential minimizer.
    """
    x_minus = np.atleast_1d(np.asarray(x_minus, dtype=float))
    x_plus = np.atleast_1d(np.asarray(x_plus, dtype=float))
    for level in m.levels:
        if not p.is_critical_point(level):
            raise ValueError(f"step-path level {level} is not a declared critical point")
    pairs = [(x_minus, m.levels[0])]
    pairs += [(m.levels[k], m.levels[k + 1]) for k in range(len(m.breakpoints))]
    pairs += [(m.levels[-1], x_plus)]
    jump = 0.0
    for a, b in pairs:
        if not np.allclose(a, b, rtol=0.0, atol=1e-14):
            jump += quasipotential(p, a, b, horizon_T, qp_n)
    step_values = m.sample(A.times)
    hess = p.hessian(step_values)
    penalty = float(0.25 * trapezoid(_penalty_integrand(hess, A.values), A.n))
    return GammaLimitValue(jump_energy=jump, penalty=penalty, total=jump + penalty)


def snap_to_critical_points(p: PotentialModel, m: PathGrid) -> BVStepPath:
    """Project a grid path to the nearest declared critical point, nodewise.

    Runs of equal snapped levels become the step-path segments; each
    breakpoint sits halfway between the two nodes where the level changes.
    Used to build the limit reference during temperature sweeps.
    """
    if not p.critical_points:
        raise ValueError("potential declares no critical points")
    cps = np.stack([c.x for c in p.critical_points])
    d2 = np.sum((m.values[:, None, :] - cps[None, :, :]) ** 2, axis=-1)
    idx = np.argmin(d2, axis=1)
    change = np.nonzero(np.diff(idx))[0]
    times = m.times
    breakpoints = 0.5 * (times[change] + times[change + 1])
    levels = cps[np.concatenate([idx[change], [idx[-1]]])] if change.size else cps[[idx[0]]]
    return BVStepPath(breakpoints=breakpoints, levels=levels)
