"""Independent checks: exhaustive grid search and direct mutual information."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import bridgehead as bh

from conftest import TIGHT, random_plausible_coupling


class TestSimplexLattice:
    def test_count_is_stars_and_bars(self):
        for m, denom in [(2, 10), (3, 7), (4, 5)]:
            points = list(bh.simplex_lattice(m, denom))
            assert len(points) == math.comb(denom + m - 1, m - 1)

    def test_points_sum_to_denominator(self):
        for point in bh.simplex_lattice(3, 6):
            assert sum(point) == 6
            assert all(c >= 0 for c in point)

    def test_ascending_lexicographic_order(self):
        points = list(bh.simplex_lattice(3, 4))
        assert points == sorted(points)
        assert points[0] == (0, 0, 4)
        assert points[-1] == (4, 0, 0)

    def test_no_duplicates(self):
        points = list(bh.simplex_lattice(4, 6))
        assert len(points) == len(set(points))


class TestGridSpec:
    def test_default_pitch_by_size(self):
        spec = bh.GridSpec()
        assert spec.pitch_for(2) == 1e-3
        assert spec.pitch_for(3) == 1e-2
        assert spec.pitch_for(4) == 1e-2

    def test_explicit_resolution_wins(self):
        spec = bh.GridSpec(resolution=0.05)
        assert spec.pitch_for(2) == 0.05


class TestGridSearchF:
    def test_symmetric_optimum_on_grid(self, symmetric_2x2):
        res = bh.grid_search_f(symmetric_2x2)
        assert_allclose(res.marginal.weights, [0.5, 0.5], atol=1e-6)
        assert_allclose(res.f_best, np.log((np.e + 1.0) / 2.0), atol=1e-7)
        assert res.resolution == 1e-3

    def test_state_independent_corner(self, state_independent):
        res = bh.grid_search_f(state_independent)
        assert_allclose(res.marginal.weights, [1.0, 0.0], atol=0)
        assert_allclose(res.f_best, 2.0, atol=1e-12)

    def test_too_many_actions_rejected(self):
        p = bh.random_problem(1, 5, 3)
        with pytest.raises(bh.TooManyActions):
            bh.grid_search_f(p)

    def test_points_evaluated_matches_lattice(self):
        p = bh.random_problem(2, 3, 3)
        res = bh.grid_search_f(p, bh.GridSpec(resolution=0.1))
        assert res.points_evaluated == math.comb(10 + 2, 2)

    def test_flat_objective_breaks_ties_lexicographically(self):
        prior = np.full(3, 1.0 / 3.0)
        p = bh.Problem(("a", "b", "c"), ("x", "y", "z"), np.zeros((3, 3)), 1.0, prior)
        res = bh.grid_search_f(p, bh.GridSpec(resolution=0.25))
        assert_allclose(res.marginal.weights, [0.0, 0.0, 1.0], atol=0)
        assert res.f_best == 0.0

    def test_certificate_brackets_solver_value(self):
        for seed in (5, 6, 7):
            p = bh.random_problem(seed, 3, 4, lam=0.8)
            solution = bh.solve(p, TIGHT)
            res = bh.grid_search_f(p, bh.GridSpec(resolution=0.02))
            assert solution.f_value >= res.f_best - 1e-10
            assert solution.f_value <= res.upper_bound + 1e-10
            assert res.margin == res.lipschitz_bound * res.resolution

    def test_margin_shrinks_with_resolution(self):
        p = bh.random_problem(8, 2, 3, lam=0.5)
        coarse = bh.grid_search_f(p, bh.GridSpec(resolution=0.1))
        fine = bh.grid_search_f(p, bh.GridSpec(resolution=0.01))
        assert fine.f_best >= coarse.f_best - 1e-12
        assert fine.margin < coarse.margin


class TestExhaustiveMi:
    def test_product_coupling_is_zero(self):
        joint = np.outer([0.3, 0.7], [0.2, 0.5, 0.3])
        assert 0.0 <= bh.exhaustive_mi(bh.Coupling(joint)) <= 1e-15

    def test_diagonal_coupling_is_log_two(self):
        assert_allclose(bh.exhaustive_mi(bh.Coupling(np.eye(2) / 2.0)), math.log(2.0))

    def test_handles_zero_cells(self):
        joint = np.array([[0.5, 0.0], [0.25, 0.25]])
        value = bh.exhaustive_mi(bh.Coupling(joint))
        assert np.isfinite(value)
        assert value > 0

    def test_matches_vectorized_implementation(self):
        rng = np.random.default_rng(12)
        problem = bh.random_problem(12, 4, 3)
        for _ in range(20):
            coupling = random_plausible_coupling(rng, problem)
            assert_allclose(
                bh.exhaustive_mi(coupling),
                bh.mutual_information(coupling),
                atol=1e-13,
            )
