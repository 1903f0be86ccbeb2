"""Green's kernels, the fundamental matrix, and the determinant inequalities."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tpgauss import (
    IndefiniteOperatorError,
    analytic_const_green,
    assemble_operator,
    constant_field,
    field_from_function,
    fundamental_matrix,
    green_column,
    green_diagonal,
    log_det_term,
)


class TestAnalyticConstGreen:
    def test_midpoint_plateau(self):
        # interior value approaches eps/(2|lam|); the boundary remainder is
        # about 2 exp(-lam/eps), i.e. 9e-5 relative at (1.0, 0.1)
        for lam, eps in [(1.0, 0.1), (2.0, 0.05)]:
            val = analytic_const_green(lam, eps, 0.5, 0.5)
            assert val == pytest.approx(0.5 * eps / abs(lam), rel=2.5 * np.exp(-lam / eps))
            assert val <= 0.5 * eps / abs(lam)

    def test_dirichlet_boundary(self):
        assert analytic_const_green(1.0, 0.1, 0.0, 0.3) == 0.0
        assert analytic_const_green(1.0, 0.1, 0.7, 1.0) == 0.0

    def test_brute_force_sinh_ratio(self):
        # plain sinh evaluation is safe at eps = 0.05 and serves as the oracle
        lam, eps = 1.7, 0.05
        mu = lam / eps
        for (t, s) in [(0.3, 0.6), (0.8, 0.2), (0.5, 0.5), (0.9, 0.95)]:
            lo, hi = min(t, s), max(t, s)
            ref = eps * np.sinh(mu * lo) * np.sinh(mu * (1 - hi)) / (lam * np.sinh(mu))
            assert analytic_const_green(lam, eps, t, s) == pytest.approx(ref, rel=1e-12)

    def test_tiny_eps_no_overflow(self):
        val = analytic_const_green(1.0, 1e-4, 0.5, 0.5)
        assert np.isfinite(val)
        assert val == pytest.approx(0.5e-4, rel=1e-9)

    def test_negative_coefficient_uses_magnitude(self):
        assert analytic_const_green(-2.0, 0.1, 0.4, 0.4) == \
            analytic_const_green(2.0, 0.1, 0.4, 0.4)

    def test_zero_coefficient_rejected(self):
        with pytest.raises(ValueError):
            analytic_const_green(0.0, 0.1, 0.5, 0.5)


class TestAssembleOperator:
    def test_constant_identity_blocks(self):
        # A = I, d = 1, eps = 1, n = 4: diagonal 2*16 + 1 = 33, off-diagonal -16
        op = assemble_operator(constant_field(np.eye(1), 4, 0.5), 1.0)
        assert np.allclose(op.diag_blocks[:, 0, 0], 33.0)
        assert np.allclose(op.banded[0, 1:], -16.0)

    def test_constant_field_b(self):
        a = 0.7
        op = assemble_operator(constant_field(a * np.eye(2), 8, 0.1), 0.05)
        assert np.allclose(op.b_nodes, (a / 0.05) ** 2 * np.eye(2)[None], atol=1e-9)

    def test_linear_field_b(self):
        # A(t) = (1+t) I, eps = 1: B(0.5) = 1.5^2 - 1 = 1.25
        A = field_from_function(lambda t: (1.0 + t) * np.eye(1), 10, 0.5)
        op = assemble_operator(A, 1.0)
        i = 4  # interior index of node t=0.5
        assert op.b_nodes[i, 0, 0] == pytest.approx(1.25, abs=1e-10)

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            assemble_operator(constant_field(np.eye(1), 8, 0.5), 0.0)


class TestGreenDiagonal:
    def test_matches_analytic_scalar(self):
        n, eps = 2000, 0.1
        op = assemble_operator(constant_field(np.eye(1), n, 0.5), eps)
        gd = green_diagonal(op)
        mid = n // 2 - 1
        ref = analytic_const_green(1.0, eps, 0.5, 0.5)
        assert gd.blocks[mid, 0, 0] == pytest.approx(ref, rel=1e-4)

    def test_diagonalization_consistency(self):
        # constant symmetric A = P^T diag(1, 3) P: kernel must diagonalize the same way
        theta = 0.6
        P = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        A0 = P @ np.diag([1.0, 3.0]) @ P.T
        n, eps = 4000, 0.05
        op = assemble_operator(constant_field(A0, n, 0.5), eps)
        gd = green_diagonal(op)
        i = n // 2 - 1
        t = (i + 1) / n
        expected = P @ np.diag([analytic_const_green(lam, eps, t, t)
                                for lam in (1.0, 3.0)]) @ P.T
        assert np.allclose(gd.blocks[i], expected, atol=1e-6)

    def test_size_bound(self):
        # |G(t,t)|_F <= 1.2 * eps / (2 a) for constant A = a I
        for a, eps in [(1.0, 0.1), (2.0, 0.05), (0.5, 0.2)]:
            op = assemble_operator(constant_field(a * np.eye(1), 800, a / 2), eps)
            gd = green_diagonal(op)
            assert gd.max_frobenius <= 1.2 * eps / (2.0 * a)

    def test_indefinite_detected(self):
        # a strongly negative A' makes B negative enough to lose definiteness:
        # A(t) = 1 + 0.45 sin(pi t) at eps chosen so -A'/eps beats the Laplacian gap
        A = field_from_function(
            lambda t: (2.0 + 1.9 * np.sin(2 * np.pi * t)) * np.eye(1), 12, 0.05)
        # crude grid + strong drift: the discrete operator loses definiteness
        with pytest.raises(IndefiniteOperatorError):
            op = assemble_operator(A, 0.001)
            # force a definiteness-sensitive computation
            op.diag_blocks[:] -= 4.0e6  # push diagonals negative
            green_diagonal(op)


class TestGreenColumn:
    def test_agrees_with_diagonal(self):
        n, eps = 400, 0.1
        op = assemble_operator(constant_field(np.eye(1), n, 0.5), eps)
        gd = green_diagonal(op)
        s = n // 2
        col = green_column(op, s)
        assert col[s - 1, 0, 0] == pytest.approx(gd.blocks[s - 1, 0, 0], abs=1e-12)

    def test_exponential_decay(self):
        # |G(t,s)| <= 1.5 * (eps/(2a)) * exp(-a|t-s|/eps), A = I, eps = 0.1
        n, eps = 1000, 0.1
        op = assemble_operator(constant_field(np.eye(1), n, 0.5), eps)
        col = green_column(op, n // 2)
        t = op.interior_times
        bound = 1.5 * (eps / 2.0) * np.exp(-np.abs(t - 0.5) / eps)
        assert np.all(np.abs(col[:, 0, 0]) <= bound + 1e-14)
        i_09 = int(0.9 * n) - 1
        assert abs(col[i_09, 0, 0]) <= 1.5 * (eps / 2.0) * np.exp(-4.0)

    def test_symmetry_of_kernel(self):
        # G(t,s) = G(s,t)^T for the scalar operator
        n, eps = 200, 0.2
        op = assemble_operator(constant_field(np.eye(1), n, 0.5), eps)
        c1 = green_column(op, 60)
        c2 = green_column(op, 140)
        assert c1[139, 0, 0] == pytest.approx(c2[59, 0, 0], rel=1e-10)

    def test_rejects_boundary_source(self):
        op = assemble_operator(constant_field(np.eye(1), 10, 0.5), 0.5)
        with pytest.raises(IndexError):
            green_column(op, 0)
        with pytest.raises(IndexError):
            green_column(op, 10)


class TestFundamentalMatrix:
    def test_constant_determinant_identity(self):
        # det M(1, 0) = exp(-(1/eps) int Tr A) for A = diag(1,2), eps = 0.5
        A = constant_field(np.diag([1.0, 2.0]), 200, 0.5)
        fm = fundamental_matrix(A, 0.5)
        assert np.linalg.det(fm.mbar[0]) == pytest.approx(np.exp(-6.0), rel=1e-6)

    def test_scalar_closed_form(self):
        A = constant_field(np.array([[0.8]]), 100, 0.4)
        eps = 0.25
        fm = fundamental_matrix(A, eps)
        t = fm.times
        assert np.allclose(fm.mbar[:, 0, 0], np.exp(-0.8 * (1 - t) / eps), rtol=1e-12)

    def test_identity_at_anchor(self):
        A = constant_field(np.eye(3), 50, 0.5)
        fm = fundamental_matrix(A, 0.3)
        assert np.allclose(fm.mbar[-1], np.eye(3))
        assert np.allclose(fm.propagator(7, 7), np.eye(3))

    def test_semigroup_and_inverse(self, rng):
        A = field_from_function(
            lambda t: np.array([[2.0 + np.sin(2 * t), 0.3], [0.3, 1.5 + t]]), 64, 0.5)
        fm = fundamental_matrix(A, 0.8)
        for _ in range(20):
            i, j, k = sorted(rng.integers(0, 65, size=3))
            lhs = fm.propagator(k, i)
            rhs = fm.propagator(k, j) @ fm.propagator(j, i)
            assert np.allclose(lhs, rhs, atol=1e-8)
            inv = np.linalg.inv(fm.propagator(k, i))
            assert np.allclose(inv, fm.propagator(i, k), atol=1e-8)

    def test_against_ode_oracle(self):
        # midpoint-exponential propagation vs a high-accuracy ODE solve
        def Afun(t):
            return np.array([[1.0 + 0.5 * t, 0.2 * t], [0.2 * t, 2.0 - t]])

        eps, n = 0.5, 256
        A = field_from_function(lambda t: Afun(t), n, 0.3)
        fm = fundamental_matrix(A, eps)

        def rhs(t, y):
            return (-Afun(t) / eps @ y.reshape(2, 2)).ravel()

        sol = solve_ivp(rhs, (0.25, 1.0), np.eye(2).ravel(), rtol=1e-11, atol=1e-13)
        oracle = sol.y[:, -1].reshape(2, 2)  # M(1, 0.25)
        assert np.allclose(fm.mbar[n // 4], oracle, atol=5e-6)

    def test_column_decay_bound(self):
        # |M(t,s) e_i| <= 1.05 exp(-a (t-s)/eps) when A >= a I
        a, eps, n = 1.0, 0.2, 128
        A = field_from_function(
            lambda t: np.array([[1.2 + 0.2 * np.sin(3 * t), 0.1], [0.1, 1.4]]), n, a)
        fm = fundamental_matrix(A, eps)
        t = fm.times
        norms = np.linalg.norm(fm.mbar, axis=1)  # column norms of M(1, t)
        bound = 1.05 * np.exp(-a * (1.0 - t) / eps)
        assert np.all(norms.max(axis=1) <= bound + 1e-12)


class TestLogDetTerm:
    def test_scalar_closed_form(self):
        # A = 1, eps = 0.5: (eps/2) log( (eps/2)(1 - e^{-2/eps}) )
        eps, n = 0.5, 2000
        A = constant_field(np.eye(1), n, 0.5)
        fm = fundamental_matrix(A, eps)
        ref = 0.5 * eps * np.log(0.5 * eps * (1.0 - np.exp(-2.0 / eps)))
        assert log_det_term(fm, eps) == pytest.approx(ref, abs=1e-6)

    def test_nonpositive_for_small_eps(self):
        n = 1000
        A = field_from_function(lambda t: (1.0 + 0.3 * t) * np.eye(1), n, 0.5)
        for eps in (0.2, 0.1, 0.05):
            fm = fundamental_matrix(A, eps)
            assert log_det_term(fm, eps) <= 0.0

    def test_eps_log_eps_scaling(self):
        # value / (eps log eps) stays bounded as eps halves (constant from first run)
        n = 2000
        A = constant_field(np.eye(1), n, 0.5)
        ratios = []
        for eps in (0.2, 0.1, 0.05, 0.025):
            fm = fundamental_matrix(A, eps)
            ratios.append(log_det_term(fm, eps) / (eps * np.log(eps)))
        assert max(ratios) <= 1.5 * ratios[0]
        assert min(ratios) > 0.0

    def test_matrix_path_matches_scalar_blockdiag(self):
        # d = 2 diagonal field: log det splits into the two scalar values
        eps, n = 0.3, 500
        A2 = constant_field(np.diag([1.0, 2.0]), n, 0.5)
        fm2 = fundamental_matrix(A2, eps)
        total = log_det_term(fm2, eps)
        parts = []
        for a in (1.0, 2.0):
            A1 = constant_field(np.array([[a]]), n, 0.4)
            parts.append(log_det_term(fundamental_matrix(A1, eps), eps))
        assert total == pytest.approx(sum(parts), abs=1e-9)

    def test_deep_underflow_scalar_survives(self):
        eps, n = 1e-3, 4000
        A = constant_field(np.eye(1), n, 0.5)
        fm = fundamental_matrix(A, eps)
        val = log_det_term(fm, eps)
        assert np.isfinite(val) and val < 0.0


class TestDeterminantInequalities:
    def test_superadditivity_random_spd(self, rng):
        # det(A+B)^{1/d} >= det(A)^{1/d} + det(B)^{1/d}
        for _ in range(200):
            d = int(rng.integers(1, 5))
            X = rng.normal(size=(d, d))
            Y = rng.normal(size=(d, d))
            A = X @ X.T + 0.1 * np.eye(d)
            B = Y @ Y.T + 0.1 * np.eye(d)
            lhs = np.linalg.det(A + B) ** (1.0 / d)
            rhs = np.linalg.det(A) ** (1.0 / d) + np.linalg.det(B) ** (1.0 / d)
            assert lhs >= rhs - 1e-10 * max(1.0, abs(rhs))

    def test_integral_version_random_field(self, rng):
        # det(int A)^{1/d} >= int det(A)^{1/d} for SPD-valued fields
        from tpgauss import trapezoid
        n, d = 64, 3
        base = rng.normal(size=(d, d))
        base = base @ base.T + 0.5 * np.eye(d)
        bump = rng.normal(size=(d, d))
        bump = bump @ bump.T
        t = np.arange(n + 1) / n
        vals = base[None] + t[:, None, None] ** 2 * bump[None]
        lhs = np.linalg.det(trapezoid(vals, n)) ** (1.0 / d)
        rhs = trapezoid(np.linalg.det(vals) ** (1.0 / d), n)
        assert lhs >= rhs - 1e-10
