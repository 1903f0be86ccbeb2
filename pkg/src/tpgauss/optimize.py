"""Minimization of the reduced and full KL objectives over (path, field) pairs.

The driver alternates two steps: freeze the field and run projected
(endpoint-pinned) gradient descent on the path, then refresh the field with
its closed-form nodewise minimizer |D^2 V(m)| floored at a.  In ``full_kl``
mode the path step descends the Green's-kernel KL objective, with the
expectation term differentiated by nodewise central differences (the marginal
expectation at a node depends on that node's value only), and the field may
optionally be polished by a few projected finite-difference steps that see
the H^1 regularizer.

Descent steps are Armijo-backtracked with Barzilai-Borwein trial sizes, so
accepted steps never increase the objective; see :mod:`tpgauss._descent`.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ._descent import descend
from .bridge import gaussian_measure
from .functionals import (
    closed_form_A,
    fbar,
    field_h1_norm_sq,
    ginzburg_landau,
    kl_objective,
    limit_f,
    quadratic_penalty,
    snap_to_critical_points,
    _expect_psi,
)
from .grids import FieldGrid, PathGrid, project_spd_floor, trapezoid
from .potentials import PotentialModel

__all__ = [
    "OptimizerConfig",
    "InnerRecord",
    "PathMinimizeResult",
    "OuterRecord",
    "OptimizationTrace",
    "SweepRow",
    "SweepReport",
    "grad_m_fbar",
    "minimize_path",
    "alternate_minimize",
    "gamma_sweep",
]


@dataclass(frozen=True)
class OptimizerConfig:
    max_outer: int = 80
    max_inner: int = 50000
    armijo_c: float = 1e-4
    step_init: float = 1.0
    step_shrink: float = 0.5
    grad_tol: float = 1e-8
    floor_a: float = 1e-3
    gamma: float = 0.25
    quad_order: int = 20
    objective: str = "fbar"  # "fbar" | "full_kl"
    outer_tol: float = 1e-10
    stagnation_rtol: float = 1e-11
    stagnation_window: int = 200
    kl_a_refine_steps: int = 0  # full_kl only: FD polish steps on the field

    def __post_init__(self):
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.step_init <= 0.0:
            raise ValueError("step_init must be positive")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.grad_tol <= 0.0 or self.floor_a <= 0.0:
            raise ValueError("grad_tol and floor_a must be positive")
        if not 0.0 < self.gamma < 0.5:
            raise ValueError("gamma must lie in (0, 1/2)")
        if self.quad_order < 1:
            raise ValueError("quad_order must be positive")
        if self.objective not in ("fbar", "full_kl"):
            raise ValueError("objective must be 'fbar' or 'full_kl'")


@dataclass
class InnerRecord:
    iteration: int
    objective: float
    grad_norm: float
    step: float


@dataclass
class PathMinimizeResult:
    path: PathGrid
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    line_search_failed: bool
    records: list[InnerRecord] = dc_field(default_factory=list)


@dataclass
class OuterRecord:
    outer: int
    objective: float
    m_grad_norm: float
    a_delta_norm: float
    step: float


@dataclass
class OptimizationTrace:
    records: list[OuterRecord]
    converged: bool


def grad_m_fbar(p: PotentialModel, m: PathGrid, A: FieldGrid, eps: float) -> np.ndarray:
    """Gradient of the discretized reduced objective w.r.t. the interior nodes.

    Kinetic part: -(eps/2) n (m_{i+1} - 2 m_i + m_{i-1}); potential part:
    (1/(2 eps n)) D^2V grad V; penalty part differentiates the trace through
    the third-derivative tensor with A held fixed.
    """
    n = m.n
    vals = m.values
    inner = vals[1:-1]
    lap = vals[2:] - 2.0 * inner + vals[:-2]
    g = -0.5 * eps * n * lap
    hv = np.einsum("tij,tj->ti", p.hessian(inner), p.grad(inner))
    g += 0.5 / (eps * n) * hv
    S = p.hessian(inner) - A.values[1:-1]
    X = np.linalg.solve(A.values[1:-1], S)
    sym = X + np.swapaxes(X, 1, 2)
    t3 = p.third(inner)
    g += 0.25 / n * np.einsum("tijk,tij->tk", t3, sym)
    return g


def _fd_expectation_grad(p, m_values, cov, eps, quad_order, h=1e-5):
    """Nodewise central differences of E[Psi_eps(m + z)] w.r.t. the node values."""
    n1, d = m_values.shape
    out = np.empty((n1, d))
    for k in range(d):
        shift = np.zeros(d)
        shift[k] = h
        up = _expect_psi(p, m_values + shift, cov, eps, quad_order)
        dn = _expect_psi(p, m_values - shift, cov, eps, quad_order)
        out[:, k] = (up - dn) / (2.0 * h)
    return out


def minimize_path(p: PotentialModel, m0: PathGrid, A: FieldGrid, eps: float,
                  cfg: OptimizerConfig, keep_records: bool = False) -> PathMinimizeResult:
    """Endpoint-pinned descent on the path with the field frozen.

    Objective per cfg.objective: the reduced functional with its analytic
    gradient, or the full KL objective with the expectation term
    finite-differenced nodewise (the field-dependent terms are constant here
    and are dropped from the minimized value).
    """
    n, d = m0.n, m0.dim
    if cfg.objective == "full_kl":
        gm = gaussian_measure(m0, A, eps)
        cov = 2.0 * gm.green_diag.padded()
        w = np.full(n + 1, 1.0 / n)
        w[0] = w[-1] = 0.5 / n

        def value(interior):
            path = m0.with_interior(interior.reshape(n - 1, d))
            e_nodes = _expect_psi(p, path.values, cov, eps, cfg.quad_order)
            expect = float(np.sum(w * e_nodes)) / (2.0 * eps)
            dm = np.diff(path.values, axis=0) * n
            return expect + 0.25 * eps * float(np.sum(dm * dm)) / n

        def grad(interior):
            path = m0.with_interior(interior.reshape(n - 1, d))
            vals = path.values
            lap = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
            gk = -0.5 * eps * n * lap
            fd = _fd_expectation_grad(p, vals, cov, eps, cfg.quad_order)
            gk += w[1:-1, None] * fd[1:-1] / (2.0 * eps)
            return gk.ravel()
    else:
        def value(interior):
            path = m0.with_interior(interior.reshape(n - 1, d))
            return fbar(p, path, A, eps)

        def grad(interior):
            path = m0.with_interior(interior.reshape(n - 1, d))
            return grad_m_fbar(p, path, A, eps).ravel()

    records: list[InnerRecord] = []
    on_accept = None
    if keep_records:
        def on_accept(k, f, gn, t):
            records.append(InnerRecord(k, f, gn, t))

    res = descend(
        m0.values[1:-1].ravel(), value, grad,
        step_init=cfg.step_init, armijo_c=cfg.armijo_c,
        step_shrink=cfg.step_shrink, grad_tol=cfg.grad_tol,
        max_iter=cfg.max_inner, stagnation_rtol=cfg.stagnation_rtol,
        stagnation_window=cfg.stagnation_window, on_accept=on_accept,
    )
    path = m0.with_interior(res.x.reshape(n - 1, d))
    return PathMinimizeResult(path=path, objective=res.value,
                              grad_norm=res.grad_norm, iterations=res.iterations,
                              converged=res.converged,
                              line_search_failed=res.line_search_failed,
                              records=records)


def _refine_field_fd(p, m, A, eps, cfg, steps):
    """Projected finite-difference descent on the field for the full KL objective."""
    n, d = A.n, A.dim

    def objective(field_values):
        Af = FieldGrid(project_spd_floor(field_values, cfg.floor_a), cfg.floor_a)
        gm = gaussian_measure(m, Af, eps)
        return kl_objective(gm, p, cfg.gamma, cfg.quad_order,
                            check_quadrature=False).total, Af

    vals = A.values.copy()
    f_cur, A_cur = objective(vals)
    h = 1e-5
    step = 0.1
    for _ in range(steps):
        grad = np.zeros_like(vals)
        for a in range(d):
            for b in range(a, d):
                pert = np.zeros((d, d))
                pert[a, b] = pert[b, a] = h
                up, _ = objective(vals + pert[None, :, :])
                dn, _ = objective(vals - pert[None, :, :])
                g_ab = (up - dn) / (2.0 * h)
                grad[:, a, b] = g_ab
                grad[:, b, a] = g_ab
        # one backtracked step on the whole field
        accepted = False
        t = step
        for _ in range(30):
            trial = vals - t * grad
            f_new, A_new = objective(trial)
            if f_new < f_cur:
                vals = project_spd_floor(trial, cfg.floor_a)
                f_cur, A_cur = f_new, A_new
                step = 2.0 * t
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return A_cur


def _report_objective(p, m, A, eps, cfg):
    if cfg.objective == "full_kl":
        gm = gaussian_measure(m, A, eps)
        return kl_objective(gm, p, cfg.gamma, cfg.quad_order,
                            check_quadrature=False).total
    return fbar(p, m, A, eps) + eps**cfg.gamma * field_h1_norm_sq(A)


def _descent_objective(p, m, A, eps, cfg):
    """What the alternation actually drives down; the basis for termination.

    In fbar mode the H^1 regularizer is excluded: the closed-form field step
    ignores it, so including it would make the outer sequence non-monotone and
    could stall the loop on the first round.
    """
    if cfg.objective == "full_kl":
        gm = gaussian_measure(m, A, eps)
        return kl_objective(gm, p, cfg.gamma, cfg.quad_order,
                            check_quadrature=False).total
    return fbar(p, m, A, eps)


def alternate_minimize(p: PotentialModel, m0: PathGrid, eps: float,
                       cfg: OptimizerConfig) -> tuple[PathGrid, FieldGrid, OptimizationTrace]:
    """Alternate path descent and the closed-form field update until stalling.

    The field step ignores the eps^gamma regularizer (which would couple the
    nodes); the reported objective includes it.  Terminates when the outer
    objective decrease drops below cfg.outer_tol or after cfg.max_outer rounds.
    """
    m = m0.copy()
    A = closed_form_A(p, m, cfg.floor_a)
    prev = _descent_objective(p, m, A, eps, cfg)
    records: list[OuterRecord] = []
    converged = False
    for outer in range(cfg.max_outer):
        inner = minimize_path(p, m, A, eps, cfg)
        m = inner.path
        A_new = closed_form_A(p, m, cfg.floor_a)
        if cfg.objective == "full_kl" and cfg.kl_a_refine_steps > 0:
            A_new = _refine_field_fd(p, m, A_new, eps, cfg, cfg.kl_a_refine_steps)
        a_delta = float(np.sqrt(trapezoid(
            np.sum((A_new.values - A.values) ** 2, axis=(1, 2)), A.n)))
        A = A_new
        obj = _descent_objective(p, m, A, eps, cfg)
        last_step = inner.records[-1].step if inner.records else float("nan")
        records.append(OuterRecord(outer=outer,
                                   objective=_report_objective(p, m, A, eps, cfg),
                                   m_grad_norm=inner.grad_norm,
                                   a_delta_norm=a_delta, step=last_step))
        if prev - obj < cfg.outer_tol:
            converged = True
            break
        prev = obj
    return m, A, OptimizationTrace(records=records, converged=converged)


@dataclass
class SweepRow:
    eps: float
    objective: float
    energy: float          # Ginzburg-Landau part at the optimum
    penalty: float         # fluctuation penalty at the optimum
    fbar_value: float      # energy + penalty
    saddle_fraction: float
    limit_jump: float
    limit_penalty: float
    limit_total: float
    outer_iterations: int
    converged: bool
    path_values: np.ndarray
    field_values: np.ndarray


@dataclass
class SweepReport:
    rows: list[SweepRow]

    def as_table(self) -> list[dict]:
        keys = ("eps", "energy", "penalty", "fbar_value", "saddle_fraction",
                "limit_total", "objective")
        return [{k: getattr(r, k) for k in keys} for r in self.rows]


def _saddle_fraction(p: PotentialModel, m: PathGrid, radius: float) -> float:
    unstable = p.unstable_points()
    if not unstable:
        return 0.0
    close = np.zeros(m.n + 1, dtype=bool)
    for x in unstable:
        close |= np.linalg.norm(m.values - x[None, :], axis=1) < radius
    return float(np.mean(close))


def gamma_sweep(p: PotentialModel, m0: PathGrid, eps_list, cfg: OptimizerConfig,
                saddle_radius: float = 0.1, qp_horizon: float = 20.0,
                qp_n: int = 2000) -> SweepReport:
    """Minimize across a decreasing temperature ladder with warm starts.

    Each row records the converged pair's energy split, the fraction of nodes
    near a saddle or maximum, and the limit functional evaluated on the step
    path obtained by snapping the minimizer to the declared critical points.
    The grid resolution stays fixed across the ladder, so it must resolve the
    smallest temperature (n of order 20/eps_min or finer).
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise ValueError("temperatures must be positive")
    if any(nxt >= prv for prv, nxt in zip(eps_list, eps_list[1:])):
        raise ValueError("temperature ladder must be strictly decreasing")
    rows: list[SweepRow] = []
    m = m0.copy()
    anchors_critical = (p.is_critical_point(m0.x_minus)
                        and p.is_critical_point(m0.x_plus))
    for eps in eps_list:
        m, A, trace = alternate_minimize(p, m, eps, cfg)
        energy = ginzburg_landau(p, m, eps)
        pen = quadratic_penalty(p, m, A)
        if anchors_critical:
            step_path = snap_to_critical_points(p, m)
            limit = limit_f(p, step_path, A, m.x_minus, m.x_plus,
                            horizon_T=qp_horizon, qp_n=qp_n)
        else:
            # the limit functional is defined between critical points only
            limit = GammaLimitValue(float("nan"), float("nan"), float("nan"))
        rows.append(SweepRow(
            eps=eps,
            objective=trace.records[-1].objective if trace.records else float("nan"),
            energy=energy, penalty=pen, fbar_value=energy + pen,
            saddle_fraction=_saddle_fraction(p, m, saddle_radius),
            limit_jump=limit.jump_energy, limit_penalty=limit.penalty,
            limit_total=limit.total,
            outer_iterations=len(trace.records), converged=trace.converged,
            path_values=m.values.copy(), field_values=A.values.copy(),
        ))
    return SweepReport(rows=rows)
