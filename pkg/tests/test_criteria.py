import math

import numpy as np
import pytest

from stopgap.criteria import (GRID_VALUES, BetaGrid, SmoothingParams, kkt_error,
                              ogfe, projected_duality_gap, sdg_over_grid,
                              select_beta, smoothed_duality_gap)
from stopgap.errors import ConfigError
from stopgap.instances import make_do
from stopgap.objectives import L1Norm
from stopgap.problem import AffineConstraint, PrimalDualPoint, ProblemInstance

INF = float("inf")


def saddle_point(problem):
    return PrimalDualPoint(problem.reference.x_star, problem.extras["y_star"])


class TestOgfe:
    def test_optimum_of_one_dimensional(self, one_d):
        z = PrimalDualPoint(np.array([7.0 / 9.0]), np.array([0.3]))
        og, fe = ogfe(one_d, z)
        assert og.value == pytest.approx(0.0, abs=1e-15)
        assert fe.value == pytest.approx(0.0, abs=1e-12)

    def test_zero_point_feasibility(self, one_d):
        og, fe = ogfe(one_d, PrimalDualPoint(np.zeros(1), np.zeros(1)))
        assert fe.value == pytest.approx(7.0)

    def test_missing_reference_rejected(self, bp):
        with pytest.raises(ConfigError):
            ogfe(bp, PrimalDualPoint(np.zeros(20), np.zeros(10)))

    def test_og_nonnegative_on_do(self, rng):
        problem = make_do(n=6, m=12, M=3, seed=3)
        for _ in range(20):
            z = PrimalDualPoint(rng.standard_normal(18), rng.standard_normal(12))
            og, _ = ogfe(problem, z)
            assert og.value >= 0.0


class TestKktError:
    def test_basis_pursuit_at_origin(self, bp):
        z = PrimalDualPoint(np.zeros(20), np.zeros(10))
        k = kkt_error(bp, z)
        assert k.value == pytest.approx(float(bp.constraint.rhs @ bp.constraint.rhs))

    def test_zero_at_saddle(self, one_d):
        assert kkt_error(one_d, saddle_point(one_d)).value <= 1e-12

    def test_finite_difference_cross_check(self, iidg, rng):
        # stationarity term against central differences of the Lagrangian in x
        z = PrimalDualPoint(rng.standard_normal(20), rng.standard_normal(10))
        A, b = iidg.constraint.matrix, iidg.constraint.rhs

        def lagrangian(x):
            return iidg.objective(x) + float((A @ x - b) @ z.y)

        h = 1e-6
        grad = np.zeros(20)
        for i in range(20):
            e = np.zeros(20)
            e[i] = h
            grad[i] = (lagrangian(z.x + e) - lagrangian(z.x - e)) / (2 * h)
        fe2 = float(np.linalg.norm(A @ z.x - b) ** 2)
        assert kkt_error(iidg, z).value == pytest.approx(grad @ grad + fe2, rel=1e-5)


class TestProjectedDualityGap:
    def test_zero_at_saddle(self, one_d):
        assert projected_duality_gap(one_d, saddle_point(one_d)).value <= 1e-10

    def test_bp_interior_dual_keeps_middle_term_zero(self, bp, rng):
        # scale y so -A^T y is already inside the unit ball
        y = rng.standard_normal(10)
        y *= 0.5 / np.abs(bp.constraint.matrix.T @ y).max()
        z = PrimalDualPoint(np.zeros(20), y)
        d = projected_duality_gap(bp, z)
        aty = bp.constraint.matrix.T @ y
        assert d.witnesses["a"] == pytest.approx(-aty)
        fe2 = float(np.linalg.norm(bp.constraint.residual(z.x)) ** 2)
        gap = bp.objective(z.x) + 0.0 + float(bp.constraint.rhs @ y)
        assert d.value == pytest.approx(gap * gap + fe2)

    def test_one_dimensional_origin_arithmetic(self, one_d):
        # a = 0, f(0) = 2, f*(0) = -min f = 0 (c in range), <b, y> = 0
        d = projected_duality_gap(one_d, PrimalDualPoint(np.zeros(1), np.zeros(1)))
        f0 = 2.0
        fstar0 = one_d.objective.conj(np.zeros(1))
        assert d.value == pytest.approx((f0 + fstar0) ** 2 + 0.0 + 49.0)


class TestSmoothedDualityGap:
    def test_zero_at_saddle(self, one_d):
        v = smoothed_duality_gap(one_d, saddle_point(one_d), SmoothingParams(1.0, 1.0))
        assert v.value <= 1e-10

    def test_unconstrained_absolute_value_formula(self):
        # |x| with no constraints at beta = (1, 1)
        problem = ProblemInstance(
            objective=L1Norm(1),
            constraint=AffineConstraint(np.zeros((0, 1)), np.zeros(0), allow_empty=True),
            label="abs", family="bp")
        beta = SmoothingParams(1.0, 1.0)
        for x, expected in [(0.5, 0.375), (2.0, 0.5), (0.01, 0.01 - 0.5e-4)]:
            z = PrimalDualPoint(np.array([x]), np.zeros(0))
            got = smoothed_duality_gap(problem, z, beta).value
            assert got == pytest.approx(expected, abs=1e-12)

    def test_floor_and_feasibility_bounds(self, iidg, rng):
        # gap dominates both the prox displacement and the feasibility error
        A = iidg.constraint.matrix
        for _ in range(1000):
            z = PrimalDualPoint(rng.standard_normal(20) * 2, rng.standard_normal(10) * 2)
            b = float(np.exp(rng.uniform(np.log(1e-4), np.log(1e3))))
            beta = SmoothingParams(b, b)
            cv = smoothed_duality_gap(iidg, z, beta)
            p = cv.witnesses["p"]
            fe = float(np.linalg.norm(iidg.constraint.residual(z.x)))
            floor = 0.5 * b * float((z.x - p) @ (z.x - p)) + fe * fe / (2 * b)
            assert floor <= cv.value + 1e-9 * max(1.0, cv.value)
            assert fe <= math.sqrt(2 * b * cv.value) + 1e-9

    def test_fermat_witness_subgradient(self, iidg, rng):
        # beta_x (x - p) - A^T y is a subgradient at p: Fenchel-Young is tight
        obj = iidg.objective
        for _ in range(50):
            z = PrimalDualPoint(rng.standard_normal(20), rng.standard_normal(10))
            b = float(np.exp(rng.uniform(-2, 2)))
            cv = smoothed_duality_gap(iidg, z, SmoothingParams(b, b))
            p = cv.witnesses["p"]
            q = b * (z.x - p) - iidg.constraint.matrix.T @ z.y
            assert obj(p) + obj.conj(q) == pytest.approx(float(q @ p), abs=1e-7)

    def test_all_criteria_zero_at_saddle_positive_nearby(self, one_d, rng):
        zs = saddle_point(one_d)
        assert kkt_error(one_d, zs).value <= 1e-12
        assert projected_duality_gap(one_d, zs).value <= 1e-10
        assert smoothed_duality_gap(one_d, zs, SmoothingParams(1, 1)).value <= 1e-10
        for _ in range(20):
            dx, dy = rng.standard_normal(2)
            scale = 1e-3 / max(abs(dx), abs(dy))
            z = PrimalDualPoint(zs.x + scale * dx, zs.y + scale * dy)
            assert kkt_error(one_d, z).value > 0
            assert projected_duality_gap(one_d, z).value > 0
            assert smoothed_duality_gap(one_d, z, SmoothingParams(1, 1)).value > 0


class TestBetaGrid:
    def test_contents(self):
        g = BetaGrid.build(0.123)
        assert len(g.values) == 41
        assert min(g.values) == pytest.approx(1e-8)
        assert max(g.values) == pytest.approx(100.0)
        assert 0.123 in g.values
        assert list(g.values) == sorted(g.values)

    def test_zero_feasibility_dropped(self):
        assert len(BetaGrid.build(0.0).values) == 40

    def test_fixed_values_are_log_spaced(self):
        logs = np.log10(np.asarray(GRID_VALUES))
        assert np.allclose(np.diff(logs), logs[1] - logs[0])
        assert GRID_VALUES[5] == pytest.approx(1.91e-7, rel=5e-3)


class TestSelectBeta:
    def test_single_candidate(self):
        g = BetaGrid.build(0.0)
        beta, ok = select_beta(g, [(SmoothingParams(0.5, 0.5), 1.0, 2.0)])
        assert ok and beta.beta_x == 0.5

    def test_monotone_rhs_returns_smallest(self):
        g = BetaGrid.build(0.0)
        cands = [(b, 1.0, b) for b in g]
        beta, ok = select_beta(g, cands, mode="one-sided")
        assert ok and beta.beta_x == pytest.approx(1e-8)

    def test_ratio_mode(self):
        g = BetaGrid.build(0.0)
        cands = [(0.1, 2.0, 4.0), (1.0, 1.0, 3.0), (10.0, 0.5, 10.0)]
        beta, ok = select_beta(g, cands, mode="ratio")
        assert ok and beta.beta_x == pytest.approx(0.1)

    def test_fallback_when_all_infinite(self):
        g = BetaGrid.build(0.0)
        beta, ok = select_beta(g, [(1.0, 1.0, INF), (2.0, 1.0, INF)])
        assert not ok and beta.beta_x == pytest.approx(1e-8)

    def test_fallback_zero_lhs_in_ratio_mode(self):
        g = BetaGrid.build(0.0)
        beta, ok = select_beta(g, [(1.0, 0.0, 5.0)], mode="ratio")
        assert not ok and beta.beta_x == pytest.approx(1e-8)


def test_sdg_grid_matches_pointwise(iidg, rng):
    z = PrimalDualPoint(rng.standard_normal(20), rng.standard_normal(10))
    fe = float(np.linalg.norm(iidg.constraint.residual(z.x)))
    grid = BetaGrid.build(fe)
    vals = sdg_over_grid(iidg, z, grid)
    for b, cv in zip(grid, vals):
        direct = smoothed_duality_gap(iidg, z, SmoothingParams(b, b))
        assert cv.value == pytest.approx(direct.value)
