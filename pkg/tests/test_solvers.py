import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorselect import (
    DampedSolveError,
    LineSearchError,
    SolverConfig,
    backtracking_line_search,
    constrained_newton_step,
    decrement,
    gen_gaussian_problem,
    gradient,
    relaxed_objective,
    round_top_p,
    sketch_elite,
    sketch_uniform,
    sketched_hessian,
    solve,
    substream,
)


def random_spd(rng, size):
    A = rng.normal(size=(size, size + 3))
    return A @ A.T / (size + 3) + 0.1 * np.eye(size)


class TestSketchUniform:
    def test_exhaustive_draw(self):
        idx = sketch_uniform(7, 7, substream(0, "t"))
        assert sorted(idx) == list(range(7))

    def test_forced_single(self):
        assert sketch_uniform(1, 1, substream(0, "t")).tolist() == [0]

    def test_uniform_frequencies(self):
        rng = substream(42, "freq")
        counts = np.zeros(20)
        draws = 10_000
        for _ in range(draws):
            counts[sketch_uniform(20, 5, rng)] += 1
        freqs = counts / draws
        assert np.abs(freqs - 0.25).max() <= 0.02

    def test_clamps_oversized_sketch(self):
        with pytest.warns(RuntimeWarning):
            idx = sketch_uniform(4, 9, substream(0, "t"))
        assert sorted(idx) == list(range(4))

    def test_distinct(self):
        rng = substream(3, "d")
        for _ in range(50):
            idx = sketch_uniform(30, 11, rng)
            assert len(set(idx.tolist())) == 11


class TestSketchElite:
    def test_forced_elite_prefix(self):
        w = np.array([0.9, 0.2, 0.8, 0.1])
        idx = sketch_elite(w, 2, 0.5, substream(0, "t"))
        assert idx[0] == 0
        assert idx[1] in (1, 2, 3)

    def test_pure_elite(self):
        w = np.array([0.9, 0.2, 0.8, 0.1])
        idx = sketch_elite(w, 2, 1.0, substream(0, "t"))
        assert sorted(idx.tolist()) == [0, 2]

    def test_elite_ties_prefer_lower_index(self):
        w = np.array([0.5, 0.9, 0.5, 0.5])
        idx = sketch_elite(w, 3, 1.0, substream(0, "t"))
        assert idx.tolist() == [1, 0, 2]

    def test_half_up_rounding(self):
        w = np.linspace(0.9, 0.1, 8)
        # rho * s = 1.5 rounds half-up to 2 elites
        idx = sketch_elite(w, 3, 0.5, substream(0, "t"))
        assert idx[0] == 0 and idx[1] == 1

    def test_parts_disjoint(self):
        rng = substream(9, "t")
        w = np.linspace(0.99, 0.01, 40)
        for _ in range(100):
            idx = sketch_elite(w, 10, 0.5, rng)
            assert len(set(idx.tolist())) == 10

    def test_clamps_oversized_sketch(self):
        w = np.linspace(0.9, 0.1, 4)
        with pytest.warns(RuntimeWarning):
            idx = sketch_elite(w, 9, 0.5, substream(0, "t"))
        assert sorted(idx.tolist()) == [0, 1, 2, 3]

    def test_rho_zero_matches_uniform_distribution(self):
        w = np.linspace(0.9, 0.1, 20)
        draws = 10_000
        counts_elite = np.zeros(20)
        counts_uniform = np.zeros(20)
        rng_a = substream(5, "a")
        rng_b = substream(5, "b")
        for _ in range(draws):
            counts_elite[sketch_elite(w, 5, 0.0, rng_a)] += 1
            counts_uniform[sketch_uniform(20, 5, rng_b)] += 1
        assert np.abs(counts_elite / draws - counts_uniform / draws).max() <= 0.02


class TestSolverConfig:
    @pytest.mark.parametrize(
        "field,value",
        [
            ("kappa", -1.0),
            ("epsilon", 0.0),
            ("s", 0),
            ("rho", 1.2),
            ("armijo_c", 0.5),
            ("backtrack_beta", 1.0),
            ("feasibility_margin", 0.0),
            ("max_steps", 0),
            ("consecutive_required", 0),
        ],
    )
    def test_rejects_out_of_range(self, field, value):
        with pytest.raises(ValueError):
            SolverConfig(**{field: value}).validate()

    def test_defaults_valid(self):
        SolverConfig().validate()


class TestRoundTopP:
    def test_ordering(self):
        assert round_top_p([0.9, 0.1, 0.8], 2).tolist() == [0, 2]

    def test_tie_break_lower_index(self):
        assert round_top_p([0.5, 0.5, 0.1], 1).tolist() == [0]

    def test_oversized_p_rejected(self):
        with pytest.raises(ValueError):
            round_top_p([0.5, 0.5], 3)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.sampled_from([0.1, 0.25, 0.5, 0.75]), min_size=1, max_size=12),
        st.data(),
    )
    def test_matches_full_sort_oracle(self, values, data):
        p = data.draw(st.integers(0, len(values)))
        oracle = sorted(sorted(range(len(values)), key=lambda i: (-values[i], i))[:p])
        assert round_top_p(values, p).tolist() == oracle


class TestConstrainedNewtonStep:
    def test_mean_centering_case(self):
        step = constrained_newton_step([1.0, 3.0], np.eye(2))
        assert np.allclose(step, [1.0, -1.0], atol=1e-14)

    def test_constraint_aligned_gradient(self, rng):
        H = random_spd(rng, 6)
        step = constrained_newton_step(np.ones(6), H)
        assert np.abs(step).max() == 0.0
        step = constrained_newton_step(3.0 * np.ones(6), H)
        assert np.abs(step).max() <= 1e-10

    def test_kkt_residual_oracle(self, rng):
        for _ in range(100):
            size = int(rng.integers(2, 12))
            H = random_spd(rng, size)
            g = rng.normal(size=size)
            step = constrained_newton_step(g, H)
            residual = H @ step + g
            nu = -residual.mean()  # least-squares multiplier
            assert np.abs(residual + nu).max() <= 1e-9
            assert abs(step.sum()) <= 1e-9 * max(np.abs(step).sum(), 1e-300)

    def test_damping_recovers_singular_psd(self):
        H = np.diag([1.0, 0.0])  # PSD but singular
        step = constrained_newton_step([1.0, 2.0], H)
        assert np.isfinite(step).all()
        assert abs(step.sum()) <= 1e-9 * np.abs(step).sum()

    def test_zero_matrix_fails(self):
        with pytest.raises(DampedSolveError):
            constrained_newton_step([1.0, 2.0], np.zeros((2, 2)))


class TestDecrement:
    def test_direct_evaluation(self):
        assert abs(decrement([1.0, 3.0], [1.0, -1.0]) - math.sqrt(2.0)) <= 1e-15

    def test_stationary_point(self):
        assert decrement([1.0, 3.0], [0.0, 0.0]) == 0.0

    def test_matches_projected_gradient_identity(self, rng):
        # oracle: sqrt(g~^T H^{-1} g~) for the constraint-projected gradient
        for _ in range(30):
            size = int(rng.integers(2, 10))
            H = random_spd(rng, size)
            g = rng.normal(size=size)
            step = constrained_newton_step(g, H)
            Hinv = np.linalg.inv(H)
            ones = np.ones(size)
            nu = (ones @ Hinv @ g) / (ones @ Hinv @ ones)
            proj = g - nu * ones
            expected = math.sqrt(max(0.0, proj @ Hinv @ proj))
            assert abs(decrement(g, step) - expected) <= 1e-9 * max(1.0, expected)


class TestBacktrackingLineSearch:
    def test_null_step(self):
        step = backtracking_line_search(
            np.eye(2), np.array([0.5, 0.5]), np.zeros(2), 0.0, -1.386, 0.0
        )
        assert step == 1.0

    def test_boundary_arithmetic(self):
        cfg = SolverConfig()
        w = np.array([0.5, 0.5])
        dw = np.array([0.6, -0.6])
        f0 = relaxed_objective(np.eye(2), w, 0.0)
        step = backtracking_line_search(np.eye(2), w, dw, 0.0, f0, 0.0, cfg)
        assert step <= cfg.feasibility_margin * (5.0 / 6.0) + 1e-15
        trial = w + step * dw
        assert (trial > 0).all() and (trial < 1).all()

    def test_accepted_step_satisfies_armijo(self, rng):
        # re-evaluation oracle on a genuine ascent direction
        U = rng.normal(size=(12, 3))
        w = rng.uniform(0.2, 0.8, 12)
        kappa = 1e-3
        cfg = SolverConfig()
        g = gradient(U, w, kappa)
        H = sketched_hessian(U, w, kappa, np.arange(12))
        dw = constrained_newton_step(-g, H)
        f0 = relaxed_objective(U, w, kappa)
        slope = float(-g @ dw)
        step = backtracking_line_search(U, w, dw, kappa, f0, slope, cfg)
        f_new = relaxed_objective(U, w + step * dw, kappa)
        assert f_new >= f0 + cfg.armijo_c * step * (-slope)

    def test_failure_after_budget(self):
        # an unreachable target: f_current inflated far above the objective
        w = np.array([0.5, 0.5])
        dw = np.array([0.6, -0.6])
        with pytest.raises(LineSearchError):
            backtracking_line_search(np.eye(2), w, dw, 0.0, 100.0, -1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_accepted_step_keeps_interior(self, seed):
        # any sum-zero direction: the accepted step never leaves (0, 1)
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 12))
        U = rng.normal(size=(n, 2)) + rng.normal(size=(n, 2))
        U[:, 1] += np.linspace(0, 1, n)  # keep columns independent
        w = rng.uniform(0.05, 0.95, n)
        dw = rng.normal(size=n)
        dw -= dw.mean()
        if not dw.any():
            return
        f0 = relaxed_objective(U, w, 1e-3)
        g = gradient(U, w, 1e-3)
        try:
            step = backtracking_line_search(U, w, dw, 1e-3, f0, float(-g @ dw))
        except LineSearchError:
            return  # descent directions may legitimately fail
        trial = w + step * dw
        assert (trial > 0).all() and (trial < 1).all()


class TestSolve:
    def test_symmetric_identity_optimum(self):
        report = solve(np.eye(3), 2, SolverConfig(kappa=1e-6), mode="full")
        assert report.converged
        assert np.abs(report.weights - 2.0 / 3.0).max() <= 1e-6
        assert report.selection.tolist() == [0, 1]

    def test_rejects_bad_inputs(self):
        U = gen_gaussian_problem(10, 2, 0)
        with pytest.raises(ValueError):
            solve(U, 10)  # p must stay below n
        with pytest.raises(ValueError):
            solve(U, 0)
        with pytest.raises(ValueError):
            solve(U, 3, mode="sgd")

    @pytest.mark.parametrize("mode", ["rsn", "crsn"])
    def test_full_sketch_reproduces_full_newton(self, mode):
        U = gen_gaussian_problem(80, 5, 11)
        cfg = SolverConfig(s=80, seed=5)
        ref = solve(U, 10, cfg, mode="full")
        other = solve(U, 10, cfg, mode=mode)
        assert other.steps == ref.steps
        f_ref = np.array([t.f for t in ref.trace])
        f_other = np.array([t.f for t in other.trace])
        assert np.abs(f_ref - f_other).max() <= 1e-12

    def test_rsn_final_value_near_full(self):
        # desk-scale solver agreement across ten seeds
        for trial in range(10):
            U = gen_gaussian_problem(60, 4, 100 + trial)
            full = solve(U, 8, SolverConfig(seed=trial), mode="full")
            rsn = solve(U, 8, SolverConfig(seed=trial, s=12), mode="rsn")
            assert abs(full.f_value - rsn.f_value) <= 0.1

    def test_feasibility_preserved_every_step(self):
        U = gen_gaussian_problem(50, 4, 2)
        seen = []

        def probe(step, w, idx):
            seen.append((w.min(), w.max(), abs(w.sum() - 6.0)))

        solve(U, 6, SolverConfig(s=10, seed=4), mode="rsn", _probe=probe)
        assert seen
        for lo, hi, gap in seen:
            assert lo > 0.0 and hi < 1.0 and gap <= 1e-9

    def test_off_sketch_weights_untouched(self):
        U = gen_gaussian_problem(40, 3, 5)
        state = {"prev": np.full(40, 8 / 40)}

        def probe(step, w, idx):
            off = np.setdiff1d(np.arange(40), idx)
            assert np.array_equal(w[off], state["prev"][off])
            state["prev"] = w

        solve(U, 8, SolverConfig(s=8, seed=9), mode="crsn", _probe=probe)

    @pytest.mark.parametrize("mode", ["full", "rsn", "crsn"])
    def test_trace_monotone(self, mode):
        U = gen_gaussian_problem(60, 4, 3)
        report = solve(U, 8, SolverConfig(s=15, seed=2), mode=mode)
        f_vals = np.array([t.f for t in report.trace])
        assert (np.diff(f_vals) >= -1e-10).all()
        assert report.steps == len(report.trace)

    def test_full_mode_stationarity(self):
        U = gen_gaussian_problem(200, 5, 17)
        cfg = SolverConfig(kappa=1e-4, epsilon=1e-6)
        report = solve(U, 10, cfg, mode="full")
        assert report.converged
        g = gradient(U, report.weights, cfg.kappa)
        projected = g - g.mean()
        assert np.abs(projected).max() <= 1e-3

    def test_max_steps_exhaustion_reports(self):
        U = gen_gaussian_problem(60, 4, 3)
        report = solve(U, 8, SolverConfig(s=10, seed=2, max_steps=3), mode="rsn")
        assert not report.converged
        assert report.steps == 3

    def test_oversized_sketch_degrades_to_full(self):
        U = gen_gaussian_problem(30, 3, 1)
        with pytest.warns(RuntimeWarning):
            report = solve(U, 5, SolverConfig(s=100, seed=0), mode="rsn")
        ref = solve(U, 5, SolverConfig(s=30, seed=0), mode="rsn")
        assert report.f_value == ref.f_value

    def test_deterministic_replay(self):
        U = gen_gaussian_problem(50, 4, 21)
        a = solve(U, 7, SolverConfig(s=10, seed=13), mode="crsn")
        b = solve(U, 7, SolverConfig(s=10, seed=13), mode="crsn")
        assert np.array_equal(a.weights, b.weights)
        assert a.f_org == b.f_org

    def test_p_below_rank_reports_sentinel(self):
        U = gen_gaussian_problem(40, 5, 2)
        report = solve(U, 3, SolverConfig(s=10, seed=1), mode="rsn")
        assert report.f_org == -np.inf

    def test_ill_conditioned_basis(self):
        # condition number ~1e6 in the basis, ~1e12 in the Fisher matrix
        U = gen_gaussian_problem(60, 4, 8) * np.array([1.0, 1e-2, 1e-4, 1e-6])
        report = solve(U, 8, SolverConfig(s=15, seed=3), mode="crsn")
        f_vals = np.array([t.f for t in report.trace])
        assert (np.diff(f_vals) >= -1e-10).all()
        assert np.isfinite(report.f_value)
        assert report.weights.min() > 0 and report.weights.max() < 1

    def test_zero_barrier_engages_damping(self):
        # with kappa = 0 and s > r(r+1)/2 the sketched curvature is singular,
        # so every step exercises the damping ladder
        U = gen_gaussian_problem(30, 3, 5)
        report = solve(U, 6, SolverConfig(kappa=0.0, s=15, seed=1, max_steps=50), mode="rsn")
        f_vals = np.array([t.f for t in report.trace])
        assert (np.diff(f_vals) >= -1e-10).all()
        assert report.weights.min() > 0 and report.weights.max() < 1
        assert abs(report.weights.sum() - 6.0) <= 1e-9
