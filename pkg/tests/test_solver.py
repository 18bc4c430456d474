"""Tests for the block-coordinate solver of the penalized projection objective.

Oracles used here, in order of appearance: a from-definition objective
reimplementation (traces and Frobenius norms written out longhand), central
finite differences for the smooth gradient, a 1e-12 bisection root finder
for the scalar block equation, and a direct linear solve for the
unpenalized minimizer.
"""
import math
import warnings

import numpy as np
import pytest

from mgqda.exceptions import DegenerateDiagonalWarning, InvalidInput
from mgqda.solver import (
    Coefficients,
    PenaltySpec,
    block_gradient_v,
    block_update,
    compute_kkt_residual,
    extract_support,
    fit,
    fit_path,
    lambda_max,
    lambda_path,
    objective,
    _solve_block,
)
from mgqda.stats import Dataset, compute_group_stats, gram_products


def make_stats(rng, g_count=3, p=8, n_g=40, spread=1.0):
    xs, ys = [], []
    for g in range(g_count):
        center = rng.standard_normal(p) * spread
        xs.append(rng.standard_normal((n_g, p)) + center)
        ys.append(np.full(n_g, g + 1))
    return compute_group_stats(Dataset(np.vstack(xs), np.concatenate(ys)))


def random_coefficients(rng, stats, density=0.6):
    k = stats.g_count - 1
    matrix = rng.standard_normal((stats.p, stats.g_count * k))
    mask = rng.random((stats.p, stats.g_count)) < density
    for j in range(stats.p):
        for g in range(stats.g_count):
            if not mask[j, g]:
                matrix[j, g * k : (g + 1) * k] = 0.0
    return Coefficients(matrix, stats.g_count)


def objective_oracle(coeffs, stats, pen):
    """From-definition objective: explicit traces, Frobenius norms, penalties."""
    g_count = stats.g_count
    k = g_count - 1
    total = 0.0
    for g in range(g_count):
        w = coeffs.matrix[:, g * k : (g + 1) * k]
        quad = np.trace(w.T @ stats.covariances[g] @ w)
        fitm = stats.gamma.T @ w - np.eye(k)
        total += 0.5 * (quad + np.linalg.norm(fitm, "fro") ** 2)
    row_pen = sum(np.linalg.norm(coeffs.matrix[j]) for j in range(stats.p))
    block_pen = 0.0
    for j in range(stats.p):
        for g in range(g_count):
            block_pen += np.linalg.norm(coeffs.matrix[j, g * k : (g + 1) * k])
    total += pen.alpha * pen.lam * row_pen
    total += (1 - pen.alpha) / math.sqrt(g_count) * pen.lam * block_pen
    return total


def bisect_root(a, row_coef, tau2, b, c, tol=1e-12):
    """Bisection oracle for a*x + row_coef*x/sqrt(b^2+x^2) + tau2 = c."""
    lo, hi = 0.0, (c - tau2) / a
    f_lo = tau2 - c
    assert f_lo <= 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = a * mid + row_coef * mid / math.sqrt(b * b + mid * mid) + tau2 - c
        if abs(f) <= tol or hi - lo <= tol:
            return mid
        if f > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestPenaltySpec:
    def test_defaults(self):
        pen = PenaltySpec(lam=1.0)
        assert pen.alpha == 0.5
        assert pen.tol == 1e-6
        assert pen.max_sweeps == 1000
        assert pen.root_tol == 1e-10

    def test_negative_lambda_rejected(self):
        with pytest.raises(InvalidInput):
            PenaltySpec(lam=-0.1)

    def test_alpha_zero_rejected(self):
        with pytest.raises(InvalidInput):
            PenaltySpec(lam=1.0, alpha=0.0)

    def test_alpha_above_one_rejected(self):
        with pytest.raises(InvalidInput):
            PenaltySpec(lam=1.0, alpha=1.5)

    def test_alpha_one_allowed(self):
        assert PenaltySpec(lam=1.0, alpha=1.0).alpha == 1.0

    def test_bad_tolerances_rejected(self):
        with pytest.raises(InvalidInput):
            PenaltySpec(lam=1.0, tol=0.0)
        with pytest.raises(InvalidInput):
            PenaltySpec(lam=1.0, root_tol=0.0)
        with pytest.raises(InvalidInput):
            PenaltySpec(lam=1.0, max_sweeps=0)


class TestCoefficients:
    def test_zeros_layout(self):
        coeffs = Coefficients.zeros(5, 3)
        assert coeffs.matrix.shape == (5, 6)
        assert coeffs.g_count == 3

    def test_block_view(self):
        matrix = np.arange(12, dtype=float).reshape(2, 6)
        coeffs = Coefficients(matrix, 3)
        np.testing.assert_array_equal(coeffs.block(0, 0), [0.0, 1.0])
        np.testing.assert_array_equal(coeffs.block(1, 2), [10.0, 11.0])

    def test_block_norms(self):
        matrix = np.array([
            [3.0, 4.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 5.0, 12.0, 0.0, 0.0],
        ])
        coeffs = Coefficients(matrix, 3)
        np.testing.assert_allclose(
            coeffs.block_norms(), [[5.0, 0.0, 0.0], [0.0, 13.0, 0.0]]
        )

    def test_bad_width_rejected(self):
        with pytest.raises(InvalidInput):
            Coefficients(np.zeros((4, 5)), 3)


class TestObjective:
    def test_zero_matrix_value(self):
        rng = np.random.default_rng(101)
        for g_count in (2, 3, 5):
            stats = make_stats(rng, g_count=g_count, p=5, n_g=20)
            coeffs = Coefficients.zeros(stats.p, g_count)
            pen = PenaltySpec(lam=0.7)
            expected = 0.5 * g_count * (g_count - 1)
            assert objective(coeffs, stats, pen) == pytest.approx(expected, abs=1e-12)

    def test_matches_from_definition_oracle(self):
        rng = np.random.default_rng(102)
        for trial in range(10):
            g_count = int(rng.integers(2, 5))
            stats = make_stats(rng, g_count=g_count, p=6, n_g=25)
            coeffs = random_coefficients(rng, stats)
            pen = PenaltySpec(lam=float(rng.uniform(0.1, 2.0)), alpha=float(rng.uniform(0.1, 1.0)))
            got = objective(coeffs, stats, pen)
            want = objective_oracle(coeffs, stats, pen)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_penalty_vanishes_at_lambda_zero(self):
        rng = np.random.default_rng(103)
        stats = make_stats(rng, p=5, n_g=30)
        coeffs = random_coefficients(rng, stats)
        pen0 = PenaltySpec(lam=0.0)
        want = objective_oracle(coeffs, stats, pen0)
        assert objective(coeffs, stats, pen0) == pytest.approx(want, rel=1e-12)

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(104)
        stats = make_stats(rng, p=5)
        with pytest.raises(InvalidInput):
            objective(Coefficients.zeros(4, 3), stats, PenaltySpec(lam=1.0))


class TestBlockGradientV:
    def test_zero_matrix_gives_negative_gamma_row(self):
        rng = np.random.default_rng(111)
        stats = make_stats(rng, p=6)
        coeffs = Coefficients.zeros(6, 3)
        for j in (0, 3, 5):
            for g in range(3):
                np.testing.assert_allclose(
                    block_gradient_v(j, g, coeffs, stats), -stats.gamma[j], atol=1e-15
                )

    def test_single_feature_always_negative_gamma(self):
        rng = np.random.default_rng(112)
        stats = make_stats(rng, p=1, n_g=30)
        coeffs = random_coefficients(rng, stats, density=1.0)
        for g in range(3):
            np.testing.assert_allclose(
                block_gradient_v(0, g, coeffs, stats), -stats.gamma[0], atol=1e-15
            )

    def test_finite_difference_smooth_gradient(self):
        # gradient of the smooth part at block (j, g) is v + a * omega_jg
        rng = np.random.default_rng(113)
        stats = make_stats(rng, g_count=3, p=5, n_g=30)
        coeffs = random_coefficients(rng, stats, density=1.0)
        pen0 = PenaltySpec(lam=0.0)
        products = gram_products(stats)
        h = 1e-6
        for j in (0, 2, 4):
            for g in range(3):
                v = block_gradient_v(j, g, coeffs, stats)
                a = products[g][j, j]
                grad = v + a * coeffs.block(j, g)
                for component in range(2):
                    plus = Coefficients(coeffs.matrix.copy(), 3)
                    minus = Coefficients(coeffs.matrix.copy(), 3)
                    plus.matrix[j, g * 2 + component] += h
                    minus.matrix[j, g * 2 + component] -= h
                    fd = (objective(plus, stats, pen0) - objective(minus, stats, pen0)) / (2 * h)
                    assert fd == pytest.approx(grad[component], abs=1e-6)


class TestScalarRootAndSolveBlock:
    def test_closed_form_row_inactive_example(self):
        # a=1, b=0, c=1, alpha=0.5, lambda=1, G=4: threshold 0.75, x = 0.25
        v = np.array([-0.6, 0.8, 0.0])
        got = _solve_block(v, 1.0, 0.0, 0.5, 0.25, 1.0, 1e-10)
        np.testing.assert_allclose(got, -0.25 * v / 1.0, atol=1e-12)
        assert np.linalg.norm(got) == pytest.approx(0.25, abs=1e-12)

    def test_below_block_threshold_returns_zero(self):
        # c = 0.2 <= tau2 = 0.25 with b > 0
        v = np.full(3, 0.2 / math.sqrt(3))
        got = _solve_block(v, 1.0, 0.5, 0.5, 0.25, 1.0, 1e-10)
        np.testing.assert_array_equal(got, np.zeros(3))

    def test_below_row_threshold_returns_zero(self):
        # b = 0 threshold is alpha*lam + tau2 = 0.75
        v = np.array([0.7, 0.0, 0.0])
        got = _solve_block(v, 1.0, 0.0, 0.5, 0.25, 1.0, 1e-10)
        np.testing.assert_array_equal(got, np.zeros(3))

    def test_bracketed_root_example(self):
        # a=1, b=1, c=2: x + 0.5 x / sqrt(1+x^2) + 0.25 = 2, root in (0, 1.75]
        v = np.array([2.0, 0.0, 0.0])
        got = _solve_block(v, 1.0, 1.0, 0.5, 0.25, 1.0, 1e-10)
        x = np.linalg.norm(got)
        assert 0.0 < x <= 1.75
        f = x + 0.5 * x / math.sqrt(1 + x * x) + 0.25 - 2.0
        assert abs(f) <= 1e-10
        oracle = bisect_root(1.0, 0.5, 0.25, 1.0, 2.0)
        assert x == pytest.approx(oracle, abs=1e-9)
        np.testing.assert_allclose(got, -x * v / 2.0, atol=1e-12)

    def test_random_tuples_against_bisection(self):
        rng = np.random.default_rng(121)
        for _ in range(100):
            g_count = int(rng.integers(2, 7))
            alpha = float(rng.uniform(0.05, 1.0))
            lam = float(rng.uniform(0.05, 3.0))
            a = float(rng.uniform(0.2, 4.0))
            b = float(rng.uniform(0.01, 2.0))
            alam = alpha * lam
            tau2 = (1 - alpha) / math.sqrt(g_count) * lam
            c = tau2 + float(rng.uniform(0.01, 3.0))
            x_oracle = bisect_root(a, alam, tau2, b, c)
            v = rng.standard_normal(g_count - 1)
            v *= c / np.linalg.norm(v)
            got = _solve_block(v, a, b * b, alam, tau2, lam, 1e-10)
            assert np.linalg.norm(got) == pytest.approx(x_oracle, abs=1e-9)

    def test_scalar_function_nondecreasing(self):
        rng = np.random.default_rng(122)
        for _ in range(50):
            a = float(rng.uniform(0.1, 3.0))
            row_coef = float(rng.uniform(0.0, 2.0))
            b = float(rng.uniform(0.0, 2.0))
            xs = np.linspace(0.0, 5.0, 200)
            f = a * xs + row_coef * xs / np.sqrt(b * b + xs * xs + 1e-300)
            assert np.all(np.diff(f) >= -1e-12)

    def test_lambda_zero_direct_solve(self):
        v = np.array([1.0, -2.0])
        got = _solve_block(v, 2.0, 0.3, 0.0, 0.0, 0.0, 1e-10)
        np.testing.assert_allclose(got, -v / 2.0, atol=1e-15)


class TestBlockUpdate:
    def test_matches_low_level_solver(self):
        rng = np.random.default_rng(131)
        stats = make_stats(rng, g_count=3, p=6, n_g=30)
        coeffs = random_coefficients(rng, stats)
        pen = PenaltySpec(lam=0.4)
        products = gram_products(stats)
        for j in (0, 2, 5):
            for g in range(3):
                v = block_gradient_v(j, g, coeffs, stats)
                norms = coeffs.block_norms()
                b_sq = float(np.sum(norms[j] ** 2) - norms[j, g] ** 2)
                want = _solve_block(
                    v, float(products[g][j, j]), b_sq, 0.5 * 0.4,
                    0.5 / math.sqrt(3) * 0.4, 0.4, pen.root_tol,
                )
                got = block_update(j, g, coeffs, stats, pen)
                np.testing.assert_allclose(got, want, atol=1e-12)

    def test_optimal_against_random_perturbations(self):
        rng = np.random.default_rng(132)
        stats = make_stats(rng, g_count=3, p=5, n_g=30)
        coeffs = random_coefficients(rng, stats)
        pen = PenaltySpec(lam=0.3)
        j, g = 2, 1
        new = block_update(j, g, coeffs, stats, pen)
        trial = Coefficients(coeffs.matrix.copy(), 3)
        trial.matrix[j, g * 2 : (g + 1) * 2] = new
        base = objective(trial, stats, pen)
        for _ in range(100):
            pert = trial.matrix.copy()
            pert[j, g * 2 : (g + 1) * 2] = new + rng.standard_normal(2) * rng.uniform(1e-4, 0.5)
            assert objective(Coefficients(pert, 3), stats, pen) >= base - 1e-12

    def test_degenerate_diagonal_warns_and_zeroes(self):
        # a constant feature shared by all groups has zero diagonal and no signal
        rng = np.random.default_rng(133)
        x = rng.standard_normal((40, 4))
        x[:, 1] = 7.0
        y = np.concatenate([np.full(20, 1), np.full(20, 2)])
        stats = compute_group_stats(Dataset(x, y))
        coeffs = Coefficients.zeros(4, 2)
        with pytest.warns(DegenerateDiagonalWarning):
            got = block_update(1, 0, coeffs, stats, PenaltySpec(lam=0.1))
        np.testing.assert_array_equal(got, np.zeros(1))


class TestFit:
    def test_lambda_max_zero_solution_one_sweep(self):
        rng = np.random.default_rng(141)
        for trial in range(5):
            g_count = int(rng.integers(2, 5))
            stats = make_stats(rng, g_count=g_count, p=7, n_g=25)
            alpha = float(rng.uniform(0.1, 1.0))
            lam = lambda_max(stats, alpha)
            coeffs, report = fit(stats, PenaltySpec(lam=lam, alpha=alpha))
            np.testing.assert_array_equal(coeffs.matrix, 0.0)
            assert report.converged
            assert report.sweeps_used == 1
            assert report.support == []

    def test_lambda_zero_matches_linear_solve(self):
        rng = np.random.default_rng(142)
        stats = make_stats(rng, g_count=3, p=10, n_g=100)
        coeffs, report = fit(stats, PenaltySpec(lam=0.0))
        products = gram_products(stats)
        for g in range(3):
            want = np.linalg.solve(products[g], stats.gamma)
            got = coeffs.matrix[:, g * 2 : (g + 1) * 2]
            block_err = np.sqrt(((got - want) ** 2).sum(axis=1)).max()
            assert block_err <= 1e-6
        assert report.converged

    def test_objective_trace_non_increasing(self):
        rng = np.random.default_rng(143)
        for trial in range(8):
            g_count = int(rng.integers(2, 5))
            stats = make_stats(rng, g_count=g_count, p=9, n_g=30)
            grid = lambda_path(stats, 0.5, 10, 0.05)
            lam = float(grid[int(rng.integers(2, 9))])
            _, report = fit(stats, PenaltySpec(lam=lam))
            diffs = np.diff(report.objective_trace)
            assert np.all(diffs <= 1e-10)

    def test_trace_starts_at_initial_objective(self):
        rng = np.random.default_rng(144)
        stats = make_stats(rng, p=6)
        pen = PenaltySpec(lam=0.5)
        _, report = fit(stats, pen)
        expected = objective(Coefficients.zeros(6, 3), stats, pen)
        assert report.objective_trace[0] == pytest.approx(expected, rel=1e-12)

    def test_solution_beats_zero_and_unpenalized_points(self):
        rng = np.random.default_rng(145)
        stats = make_stats(rng, g_count=3, p=8, n_g=50)
        grid = lambda_path(stats, 0.5, 8, 0.05)
        pen = PenaltySpec(lam=float(grid[4]))
        coeffs, _ = fit(stats, pen)
        val = objective(coeffs, stats, pen)
        assert val <= objective(Coefficients.zeros(8, 3), stats, pen) + 1e-12
        unpenalized, _ = fit(stats, PenaltySpec(lam=0.0))
        assert val <= objective(unpenalized, stats, pen) + 1e-12

    def test_kkt_certified_at_convergence(self):
        rng = np.random.default_rng(146)
        for trial in range(10):
            g_count = int(rng.integers(2, 5))
            p = int(rng.integers(5, 30))
            stats = make_stats(rng, g_count=g_count, p=p, n_g=40)
            grid = lambda_path(stats, 0.5, 10, 0.02)
            lam = float(grid[int(rng.integers(3, 8))])
            pen = PenaltySpec(lam=lam)
            coeffs, report = fit(stats, pen)
            assert report.converged
            assert report.kkt_residual <= 10 * pen.tol
            recomputed = compute_kkt_residual(coeffs, stats, pen)
            assert recomputed == pytest.approx(report.kkt_residual, abs=1e-12)

    def test_supports_in_report_match_extraction(self):
        rng = np.random.default_rng(147)
        stats = make_stats(rng, p=10, n_g=35)
        grid = lambda_path(stats, 0.5, 10, 0.05)
        coeffs, report = fit(stats, PenaltySpec(lam=float(grid[5])))
        support, group_supports = extract_support(coeffs)
        assert report.support == support
        assert report.group_supports == group_supports

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(148)
        p = 8
        x = np.vstack([
            rng.standard_normal((40, p)) + rng.standard_normal(p)
            for _ in range(3)
        ])
        y = np.concatenate([np.full(40, g + 1) for g in range(3)])
        perm = rng.permutation(p)
        stats = compute_group_stats(Dataset(x, y))
        stats_perm = compute_group_stats(Dataset(x[:, perm], y))
        grid = lambda_path(stats, 0.5, 8, 0.05)
        pen = PenaltySpec(lam=float(grid[4]))
        coeffs, _ = fit(stats, pen)
        coeffs_perm, _ = fit(stats_perm, pen)
        np.testing.assert_allclose(coeffs_perm.matrix, coeffs.matrix[perm], atol=1e-5)

    def test_max_sweeps_respected(self):
        rng = np.random.default_rng(149)
        stats = make_stats(rng, p=12, n_g=30)
        grid = lambda_path(stats, 0.5, 10, 0.01)
        _, report = fit(stats, PenaltySpec(lam=float(grid[-1]), max_sweeps=2, tol=1e-14))
        assert report.sweeps_used <= 2
        assert not report.converged

    def test_warm_start_from_incompatible_init_rejected(self):
        rng = np.random.default_rng(150)
        stats = make_stats(rng, p=6)
        with pytest.raises(InvalidInput):
            fit(stats, PenaltySpec(lam=0.1), init=Coefficients.zeros(5, 3))

    def test_constant_feature_warns_and_stays_zero(self):
        rng = np.random.default_rng(151)
        x = rng.standard_normal((60, 5))
        x[:, 2] = -3.0
        x[:20, 0] += 2.0
        x[20:40, 1] += 2.0
        y = np.concatenate([np.full(20, 1), np.full(20, 2), np.full(20, 3)])
        stats = compute_group_stats(Dataset(x, y))
        with pytest.warns(DegenerateDiagonalWarning):
            coeffs, _ = fit(stats, PenaltySpec(lam=0.05))
        np.testing.assert_array_equal(coeffs.matrix[2], 0.0)


class TestFitPath:
    def test_warm_path_matches_lambda_count(self):
        rng = np.random.default_rng(161)
        stats = make_stats(rng, p=7, n_g=30)
        grid = lambda_path(stats, 0.5, 6, 0.05)
        results = fit_path(stats, grid)
        assert len(results) == 6
        for _, report in results:
            assert report.converged

    def test_first_path_point_is_all_zero(self):
        rng = np.random.default_rng(162)
        stats = make_stats(rng, p=7, n_g=30)
        grid = lambda_path(stats, 0.5, 6, 0.05)
        coeffs, _ = fit_path(stats, grid)[0]
        np.testing.assert_array_equal(coeffs.matrix, 0.0)

    def test_support_grows_roughly_with_smaller_lambda(self):
        rng = np.random.default_rng(163)
        stats = make_stats(rng, p=10, n_g=40)
        grid = lambda_path(stats, 0.5, 8, 0.01)
        sizes = [len(r.support) for _, r in fit_path(stats, grid)]
        assert sizes[0] == 0
        assert sizes[-1] >= sizes[0]
        assert max(sizes) > 0

    def test_increasing_grid_rejected(self):
        rng = np.random.default_rng(164)
        stats = make_stats(rng, p=5)
        with pytest.raises(InvalidInput):
            fit_path(stats, np.array([0.1, 0.5]))

    def test_empty_grid_rejected(self):
        rng = np.random.default_rng(165)
        stats = make_stats(rng, p=5)
        with pytest.raises(InvalidInput):
            fit_path(stats, np.array([]))


class TestLambdaGrid:
    def test_lambda_max_formula(self):
        # gamma with max row norm 2: sqrt(G) * 2 / (1 - alpha) = 8 for G=4, alpha=0.5
        stats = make_stats(np.random.default_rng(171), g_count=4, p=5, n_g=20)
        gamma = np.zeros((5, 3))
        gamma[2] = [2.0, 0.0, 0.0]
        gamma[4] = [0.6, 0.8, 0.0]
        stats.gamma[:] = gamma
        assert lambda_max(stats, 0.5) == pytest.approx(8.0, rel=1e-12)
        assert lambda_max(stats, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_fit_at_computed_lambda_max_is_zero(self):
        rng = np.random.default_rng(172)
        for alpha in (0.25, 0.5, 1.0):
            stats = make_stats(rng, g_count=3, p=6, n_g=25)
            coeffs, _ = fit(stats, PenaltySpec(lam=lambda_max(stats, alpha), alpha=alpha))
            np.testing.assert_array_equal(coeffs.matrix, 0.0)

    def test_geometric_grid_endpoints(self):
        rng = np.random.default_rng(173)
        stats = make_stats(rng, p=6)
        grid = lambda_path(stats, 0.5, 12, 0.02)
        assert grid.shape == (12,)
        assert grid[0] == pytest.approx(lambda_max(stats, 0.5), rel=1e-12)
        assert grid[-1] == pytest.approx(grid[0] * 0.02, rel=1e-12)
        ratios = grid[1:] / grid[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
        assert np.all(np.diff(grid) < 0)

    def test_zero_gamma_degenerates(self):
        rng = np.random.default_rng(174)
        stats = make_stats(rng, p=4, n_g=20)
        stats.gamma[:] = 0.0
        assert lambda_max(stats, 0.5) == 0.0
        np.testing.assert_array_equal(lambda_path(stats, 0.5, 10, 0.01), [0.0])

    def test_grid_validation(self):
        rng = np.random.default_rng(175)
        stats = make_stats(rng, p=4)
        with pytest.raises(InvalidInput):
            lambda_path(stats, 0.5, 1, 0.01)
        with pytest.raises(InvalidInput):
            lambda_path(stats, 0.5, 10, 0.0)
        with pytest.raises(InvalidInput):
            lambda_path(stats, 0.5, 10, 1.0)
        with pytest.raises(InvalidInput):
            lambda_max(stats, 0.0)


class TestExtractSupport:
    def test_all_zero(self):
        support, group_supports = extract_support(Coefficients.zeros(4, 3))
        assert support == []
        assert group_supports == [[], [], []]

    def test_single_active_block(self):
        matrix = np.zeros((5, 6))
        matrix[3, 2:4] = [0.1, -0.2]
        support, group_supports = extract_support(Coefficients(matrix, 3))
        assert support == [3]
        assert group_supports == [[], [3], []]

    def test_solver_output_is_hard_thresholded(self):
        # exact zeros from the solver: tolerance 0 and 1e-12 must agree
        rng = np.random.default_rng(181)
        stats = make_stats(rng, p=10, n_g=40)
        grid = lambda_path(stats, 0.5, 8, 0.02)
        coeffs, _ = fit(stats, PenaltySpec(lam=float(grid[4])))
        assert extract_support(coeffs, 0.0) == extract_support(coeffs, 1e-12)

    def test_negative_tolerance_rejected(self):
        with pytest.raises(InvalidInput):
            extract_support(Coefficients.zeros(3, 2), -1.0)
