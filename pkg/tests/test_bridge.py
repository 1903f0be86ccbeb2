"""Bridge sampling against the kernel oracles, normalizer closed forms, determinism."""

import numpy as np
import pytest

from tpgauss import (
    analytic_const_green,
    constant_field,
    gaussian_log_normalizer,
    gaussian_measure,
    green_column,
    marginal_std,
    sample_bridge,
    straight_line_path,
)


def _measure(a=1.0, eps=0.1, n=200, d=1, x_minus=0.0, x_plus=1.0):
    m = straight_line_path(np.full(d, x_minus), np.full(d, x_plus), n)
    A = constant_field(a * np.eye(d), n, floor_a=a / 2)
    return gaussian_measure(m, A, eps)


class TestConstruction:
    def test_grid_mismatch_rejected(self):
        m = straight_line_path(0.0, 1.0, 100)
        A = constant_field(np.eye(1), 200, 0.5)
        with pytest.raises(ValueError):
            gaussian_measure(m, A, 0.1)

    def test_kernel_bound_invariant_holds(self):
        gm = _measure(a=1.0, eps=0.1)
        bound = 1.2 * 0.1 / (2.0 * gm.field.floor_a)
        assert gm.green_diag.max_frobenius <= bound


class TestSampler:
    def test_midpoint_variance(self):
        gm = _measure(eps=0.1, n=200)
        batch = sample_bridge(gm, 40000, seed=7)
        i_mid = 99  # node t = 0.5
        emp = batch.z[:, i_mid, 0].var()
        ref = 2.0 * gm.green_diag.blocks[i_mid, 0, 0]
        assert emp == pytest.approx(ref, rel=0.03)
        assert ref == pytest.approx(0.1, rel=5e-3)  # analytic sinh value

    def test_mean_is_centered(self):
        gm = _measure(eps=0.1, n=100)
        batch = sample_bridge(gm, 20000, seed=3)
        z_mid = batch.z[:, 49, 0]
        tol = 4.0 * z_mid.std() / np.sqrt(batch.count)
        assert abs(z_mid.mean()) < tol

    def test_cross_covariance_matches_column(self):
        gm = _measure(eps=0.1, n=100)
        batch = sample_bridge(gm, 50000, seed=11)
        i_s, i_t = 29, 69  # nodes t=0.3, 0.7
        col = green_column(gm.operator, 30)
        prod = batch.z[:, i_s, 0] * batch.z[:, i_t, 0]
        se = prod.std() / np.sqrt(batch.count)
        assert abs(prod.mean() - 2.0 * col[i_t, 0, 0]) < 3.0 * se

    def test_deterministic_given_seed(self):
        gm = _measure(n=64)
        b1 = sample_bridge(gm, 1000, seed=99)
        b2 = sample_bridge(gm, 1000, seed=99)
        assert np.array_equal(b1.z, b2.z)

    def test_seed_changes_samples(self):
        gm = _measure(n=64)
        b1 = sample_bridge(gm, 100, seed=1)
        b2 = sample_bridge(gm, 100, seed=2)
        assert not np.array_equal(b1.z, b2.z)

    def test_prefix_stable_across_count(self):
        # chunked seeding: a longer batch begins with the shorter one
        gm = _measure(n=64)
        b1 = sample_bridge(gm, 500, seed=42)
        b2 = sample_bridge(gm, 800, seed=42)
        assert np.array_equal(b1.z, b2.z[:500])

    def test_boundary_is_pinned_implicitly(self):
        # interior arrays only; the stored times exclude the endpoints
        gm = _measure(n=64)
        batch = sample_bridge(gm, 10, seed=5)
        assert batch.z.shape == (10, 63, 1)
        assert batch.interior_times[0] == pytest.approx(1 / 64)
        assert batch.interior_times[-1] == pytest.approx(63 / 64)

    def test_rejects_nonpositive_count(self):
        gm = _measure(n=64)
        with pytest.raises(ValueError):
            sample_bridge(gm, 0, seed=1)

    def test_d2_cross_component_covariance(self):
        # diagonal constant field: components are independent scalar bridges
        gm = _measure(a=2.0, eps=0.1, n=100, d=2)
        batch = sample_bridge(gm, 30000, seed=13)
        z_mid = batch.z[:, 49, :]
        cov = np.cov(z_mid.T)
        ref = 2.0 * analytic_const_green(2.0, 0.1, 0.5, 0.5)
        assert cov[0, 0] == pytest.approx(ref, rel=0.05)
        assert cov[1, 1] == pytest.approx(ref, rel=0.05)
        assert abs(cov[0, 1]) < 4.0 * ref / np.sqrt(batch.count) * 2


class TestLogNormalizer:
    def test_scalar_closed_form(self):
        # d=1, A=1, eps=0.5, x from 0 to 1:
        # 1/4 - 1/(2 eps) - (1/2) log( (eps/2)(1 - e^{-2/eps}) )
        gm = _measure(a=1.0, eps=0.5, n=2000)
        ref = 0.25 - 1.0 - 0.5 * np.log(0.25 * (1.0 - np.exp(-4.0)))
        assert gaussian_log_normalizer(gm) == pytest.approx(ref, abs=1e-5)

    def test_equal_endpoints_drop_first_term(self):
        gm0 = _measure(a=1.0, eps=0.5, n=500, x_minus=0.0, x_plus=0.0)
        gm1 = _measure(a=1.0, eps=0.5, n=500, x_minus=0.0, x_plus=1.0)
        assert gaussian_log_normalizer(gm1) - gaussian_log_normalizer(gm0) == \
            pytest.approx(0.25, abs=1e-12)

    def test_mean_shift_invariance(self):
        n = 200
        A = constant_field(np.eye(1), n, 0.5)
        m1 = straight_line_path(0.0, 1.0, n)
        t = m1.times
        bent = m1.values.copy()
        bent[:, 0] += 0.3 * np.sin(np.pi * t)
        m2 = type(m1)(bent)
        g1 = gaussian_measure(m1, A, 0.2)
        g2 = gaussian_measure(m2, A, 0.2)
        assert gaussian_log_normalizer(g1) == pytest.approx(
            gaussian_log_normalizer(g2), abs=1e-14)


class TestMarginalStd:
    def test_scalar_analytic(self):
        gm = _measure(a=1.0, eps=0.1, n=2000)
        s = marginal_std(gm, 1000)
        assert s[0, 0] == pytest.approx(np.sqrt(0.1), rel=1e-4)

    def test_boundary_layer_suppression(self):
        gm = _measure(a=1.0, eps=0.1, n=200)
        near_edge = marginal_std(gm, 1)[0, 0]
        plateau = marginal_std(gm, 100)[0, 0]
        assert near_edge < plateau

    def test_diagonal_field_diagonal_std(self):
        gm = _measure(a=2.0, eps=0.05, n=400, d=2)
        s = marginal_std(gm, 200)
        ref = np.sqrt(2.0 * analytic_const_green(2.0, 0.05, 0.5, 0.5))
        assert np.allclose(s, ref * np.eye(2), atol=1e-4)

    def test_sqrt_eps_scaling(self):
        # midpoint std shrinks like sqrt(eps) under halving
        stds = []
        for eps in (0.2, 0.1, 0.05):
            gm = _measure(a=1.0, eps=eps, n=800)
            stds.append(marginal_std(gm, 400)[0, 0])
        for hi, lo in zip(stds, stds[1:]):
            assert 0.66 <= lo / hi <= 0.75

    def test_rejects_boundary_node(self):
        gm = _measure(n=64)
        with pytest.raises(IndexError):
            marginal_std(gm, 0)
