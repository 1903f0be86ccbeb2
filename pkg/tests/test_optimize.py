"""Gradient correctness, the alternating scheme, and the temperature sweep."""

import numpy as np
import pytest

from tpgauss import (
    OptimizerConfig,
    PathGrid,
    alternate_minimize,
    builtin_potential,
    closed_form_A,
    constant_field,
    fbar,
    gamma_sweep,
    grad_m_fbar,
    minimize_path,
    straight_line_path,
)

DW = builtin_potential("double_well_1d")
QUAD = builtin_potential("quadratic", {"lam": 1.0, "d": 1})
PLANAR = builtin_potential("double_well_planar", {"kappa": 1.0})


def fd_grad_fbar(p, m, A, eps, h=1e-6):
    base = m.values.copy()
    out = np.zeros((m.n - 1, m.dim))
    for i in range(1, m.n):
        for k in range(m.dim):
            up = base.copy()
            dn = base.copy()
            up[i, k] += h
            dn[i, k] -= h
            out[i - 1, k] = (fbar(p, PathGrid(up), A, eps)
                             - fbar(p, PathGrid(dn), A, eps)) / (2 * h)
    return out


class TestGradient:
    @pytest.mark.parametrize("p", [DW, QUAD, PLANAR], ids=lambda p: p.name)
    def test_matches_finite_differences(self, p, rng):
        n, eps = 24, 0.15
        for _ in range(20):
            a, b = rng.uniform(-0.5, 1.5, size=(2, p.dim))
            vals = np.linspace(0, 1, n + 1)[:, None] * (b - a)[None, :] + a[None, :]
            vals += 0.2 * rng.normal(size=vals.shape) * \
                (np.sin(np.pi * np.linspace(0, 1, n + 1)))[:, None]
            vals[0], vals[-1] = a, b
            m = PathGrid(vals)
            A = closed_form_A(p, m, 0.2)
            g = grad_m_fbar(p, m, A, eps)
            fd = fd_grad_fbar(p, m, A, eps)
            denom = max(1e-8, float(np.max(np.abs(fd))))
            assert np.max(np.abs(g - fd)) / denom < 1e-6

    def test_zero_on_straight_line_free(self):
        # with V = 0 terms absent, the kinetic gradient of a straight line vanishes
        m = straight_line_path(0.0, 1.0, 32)
        A = constant_field(np.eye(1), 32, 0.5)
        g = grad_m_fbar(QUAD, m, A, 0.2)
        # for the unit quadratic the penalty is zero and D2V grad V = m
        expected = 0.5 / (0.2 * 32) * m.values[1:-1]
        assert np.allclose(g, expected, atol=1e-12)

    def test_stationary_at_discrete_minimizer(self):
        # exact discrete minimizer from the linear stationarity system
        # -(eps/2) n (m_{i+1} - 2 m_i + m_{i-1}) + m_i / (2 eps n) = 0
        n, eps = 400, 0.2
        main = eps * n + 0.5 / (eps * n)
        off = -0.5 * eps * n
        M = np.diag(np.full(n - 1, main)) + np.diag(np.full(n - 2, off), 1) \
            + np.diag(np.full(n - 2, off), -1)
        rhs = np.zeros(n - 1)
        rhs[-1] = -off  # boundary value x_plus = 1
        interior = np.linalg.solve(M, rhs)
        m = straight_line_path(0.0, 1.0, n).with_interior(interior[:, None])
        A = constant_field(np.eye(1), n, 0.5)
        g = grad_m_fbar(QUAD, m, A, eps)
        assert np.max(np.abs(g)) < 1e-12


class TestMinimizePath:
    def test_quadratic_sinh_profile(self):
        # Euler-Lagrange: eps^2 m'' = m, pinned at 0 and 1
        n, eps = 400, 0.2
        cfg = OptimizerConfig(grad_tol=1e-10, max_inner=30000)
        A = constant_field(np.eye(1), n, 0.5)
        res = minimize_path(QUAD, straight_line_path(0.0, 1.0, n), A, eps, cfg)
        t = np.arange(n + 1) / n
        exact = np.sinh(t / eps) / np.sinh(1.0 / eps)
        assert np.max(np.abs(res.path.values[:, 0] - exact)) < 2e-3

    def test_free_path_straightens(self, rng):
        p0 = QUAD  # with x- = x+ = 0 the quadratic behaves like a pinning well
        n = 64
        t = np.arange(n + 1) / n
        vals = (0.3 * np.sin(2 * np.pi * t))[:, None]
        vals[0] = vals[-1] = 0.0
        cfg = OptimizerConfig(grad_tol=1e-12, max_inner=20000)
        A = constant_field(np.eye(1), n, 0.5)
        res = minimize_path(p0, PathGrid(vals), A, 0.3, cfg)
        assert np.max(np.abs(res.path.values)) < 1e-10  # collapses onto the minimum

    def test_double_well_improves_straight_line(self):
        # the guaranteed improvement is in the minimized objective; the pure
        # energy of this potential's straight line is already near-minimal,
        # so the penalized minimizer trades energy for fluctuation cost
        n, eps = 400, 0.05
        cfg = OptimizerConfig()
        m0 = straight_line_path(0.0, 1.0, n)
        A = closed_form_A(DW, m0, 1e-3)
        res = minimize_path(DW, m0, A, eps, cfg)
        assert fbar(DW, res.path, A, eps) < fbar(DW, m0, A, eps)
        assert res.objective == pytest.approx(fbar(DW, res.path, A, eps), abs=1e-14)

    def test_monotone_descent_records(self):
        n, eps = 100, 0.1
        cfg = OptimizerConfig(max_inner=500)
        m0 = straight_line_path(0.0, 1.0, n)
        A = closed_form_A(DW, m0, 1e-3)
        res = minimize_path(DW, m0, A, eps, cfg, keep_records=True)
        objs = [r.objective for r in res.records]
        assert all(b <= a + 1e-15 for a, b in zip(objs, objs[1:]))


class TestAlternateMinimize:
    def test_quadratic_exact(self):
        n, eps = 400, 0.2
        cfg = OptimizerConfig(grad_tol=1e-10, max_inner=30000)
        m, A, trace = alternate_minimize(QUAD, straight_line_path(0.0, 1.0, n), eps, cfg)
        assert len(trace.records) <= 3
        assert trace.converged
        assert np.max(np.abs(A.values - 1.0)) < 1e-8
        t = np.arange(n + 1) / n
        exact = np.sinh(t / eps) / np.sinh(1.0 / eps)
        assert np.max(np.abs(m.values[:, 0] - exact)) < 2e-3
        from tpgauss import quadratic_penalty
        assert quadratic_penalty(QUAD, m, A) < 1e-8

    def test_field_is_closed_form_of_path(self):
        n, eps = 200, 0.1
        cfg = OptimizerConfig(max_outer=8)
        m, A, _ = alternate_minimize(DW, straight_line_path(0.0, 1.0, n), eps, cfg)
        ref = closed_form_A(DW, m, cfg.floor_a)
        assert np.allclose(A.values, ref.values, atol=1e-14)

    def test_basin_agreement_two_starts(self):
        n, eps = 200, 0.1
        cfg = OptimizerConfig()
        t = np.arange(n + 1) / n
        straight = straight_line_path(0.0, 1.0, n)
        sig = 0.5 * (1.0 + np.tanh((t - 0.5) / 0.15))
        sig[0], sig[-1] = 0.0, 1.0
        sigmoid = PathGrid(sig[:, None])
        m1, A1, tr1 = alternate_minimize(DW, straight, eps, cfg)
        m2, A2, tr2 = alternate_minimize(DW, sigmoid, eps, cfg)
        assert tr1.converged and tr2.converged
        assert fbar(DW, m1, A1, eps) == pytest.approx(fbar(DW, m2, A2, eps), abs=1e-6)

    def test_outer_objectives_decrease(self):
        n, eps = 200, 0.1
        cfg = OptimizerConfig(max_outer=20)
        _, _, trace = alternate_minimize(DW, straight_line_path(0.0, 1.0, n), eps, cfg)
        objs = [r.objective for r in trace.records]
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))

    def test_deterministic(self):
        n, eps = 100, 0.1
        cfg = OptimizerConfig(max_outer=5)
        out1 = alternate_minimize(DW, straight_line_path(0.0, 1.0, n), eps, cfg)
        out2 = alternate_minimize(DW, straight_line_path(0.0, 1.0, n), eps, cfg)
        assert np.array_equal(out1[0].values, out2[0].values)
        r1 = [(r.objective, r.m_grad_norm, r.a_delta_norm) for r in out1[2].records]
        r2 = [(r.objective, r.m_grad_norm, r.a_delta_norm) for r in out2[2].records]
        assert r1 == r2

    def test_field_step_nodewise_optimal(self, rng):
        # after the closed-form update, no small SPD perturbation of a node
        # improves the nodewise penalty
        n, eps = 64, 0.1
        cfg = OptimizerConfig(max_outer=6)
        m, A, _ = alternate_minimize(DW, straight_line_path(0.0, 1.0, n), eps, cfg)
        hess = DW.hessian(m.values)
        for _ in range(100):
            i = int(rng.integers(0, n + 1))
            B = hess[i]
            Ai = A.values[i]
            gval = np.trace((B - Ai) @ (B - Ai) @ np.linalg.inv(Ai))
            E = rng.normal(scale=0.02, size=(1, 1))
            trial = Ai + 0.5 * (E + E.T)
            if np.min(np.linalg.eigvalsh(trial)) <= cfg.floor_a:
                continue
            gtrial = np.trace((B - trial) @ (B - trial) @ np.linalg.inv(trial))
            assert gval <= gtrial + 1e-12


class TestFullKL:
    def test_path_step_decreases_kl_part(self):
        n, eps = 16, 0.2
        cfg = OptimizerConfig(objective="full_kl", quad_order=12, max_inner=300,
                              floor_a=0.25)
        m0 = straight_line_path(0.0, 1.0, n)
        A = closed_form_A(DW, m0, cfg.floor_a)
        res = minimize_path(DW, m0, A, eps, cfg, keep_records=True)
        assert res.records, "no accepted steps"
        objs = [r.objective for r in res.records]
        assert objs[-1] < objs[0]
        assert all(b <= a + 1e-15 for a, b in zip(objs, objs[1:]))

    def test_alternate_with_field_refinement(self):
        n, eps = 16, 0.2
        cfg = OptimizerConfig(objective="full_kl", quad_order=10, max_inner=150,
                              max_outer=2, floor_a=0.25, kl_a_refine_steps=2)
        m, A, trace = alternate_minimize(DW, straight_line_path(0.0, 1.0, n), eps, cfg)
        assert trace.records
        objs = [r.objective for r in trace.records]
        assert objs[-1] <= objs[0] + 1e-12
        assert np.min(np.linalg.eigvalsh(A.values)) >= cfg.floor_a - 1e-10


class TestGammaSweep:
    def test_double_well_trends(self):
        n = 400
        cfg = OptimizerConfig(max_outer=40, max_inner=20000)
        m0 = straight_line_path(0.0, 1.0, n)
        report = gamma_sweep(DW, m0, [0.2, 0.1], cfg, qp_horizon=12.0, qp_n=800)
        assert len(report.rows) == 2
        r0, r1 = report.rows
        assert r1.penalty < r0.penalty
        assert r1.saddle_fraction < r0.saddle_fraction
        assert r1.energy < r0.energy
        # the limit reference is the two-leg transition cost, no penalty at minima
        assert r1.limit_total > 0
        table = report.as_table()
        assert set(table[0]) == {"eps", "energy", "penalty", "fbar_value",
                                 "saddle_fraction", "limit_total", "objective"}

    def test_quadratic_sweep_matches_closed_form(self):
        # the minimizer of each rung is the hyperbolic-sine profile; its
        # energy evaluated on a dense grid is the reference value
        n = 400
        cfg = OptimizerConfig(grad_tol=1e-10, max_inner=40000)
        m0 = straight_line_path(0.0, 1.0, n)
        eps_list = [0.5, 0.3, 0.2]
        report = gamma_sweep(QUAD, m0, eps_list, cfg, qp_horizon=8.0, qp_n=400)
        from tpgauss import ginzburg_landau
        for row, eps in zip(report.rows, eps_list):
            t = np.arange(n + 1) / n
            exact = PathGrid((np.sinh(t / eps) / np.sinh(1 / eps))[:, None])
            ref = ginzburg_landau(QUAD, exact, eps)
            assert row.energy == pytest.approx(ref, abs=1e-3)
            assert row.penalty < 1e-10

    def test_rejects_nondecreasing_ladder(self):
        cfg = OptimizerConfig()
        m0 = straight_line_path(0.0, 1.0, 100)
        with pytest.raises(ValueError):
            gamma_sweep(DW, m0, [0.1, 0.2], cfg)
        with pytest.raises(ValueError):
            gamma_sweep(DW, m0, [0.1, -0.2], cfg)


class TestConfigValidation:
    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError):
            OptimizerConfig(armijo_c=1.5)
        with pytest.raises(ValueError):
            OptimizerConfig(step_shrink=0.0)
        with pytest.raises(ValueError):
            OptimizerConfig(gamma=0.7)
        with pytest.raises(ValueError):
            OptimizerConfig(objective="newton")
        with pytest.raises(ValueError):
            OptimizerConfig(max_outer=0)
