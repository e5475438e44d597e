import re
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latincube.cube import PermutationQuadruple, apply_quadruple, boolean_cube, random_quadruple, validate_latin
from latincube.engine import (
    ASYMPTOTIC_CONSTANTS,
    PermutationNotFound,
    SolveFailed,
    SolverParams,
    StuckConflict,
    SwapPlan,
    apply_plan,
    build_swap_plan,
    find_permutation,
    ledger_mismatches,
    line_usage_bound,
    polish_quadruple,
    restart_seed,
    solve,
    verify_plan,
    violation_score,
)
from latincube.forbidden import ConflictReport, ForbiddenCube, conflict_stats, conflicts, random_forbidden, unavoidable_half
from latincube.oracle import Unavoidable, decide_avoidable
from latincube.structure import ThreeCube, three_cubes_through

LOG_LINE = re.compile(r"^restart=\d+ seed=\d+ score=[0-9.e+]+ plan=(ok|stuck:\(\d+,\d+,\d+\)|no-permutation) time_ms=\d+$")


def report(row=0, col=0, fil=0, ss=0, ts=0, min_allowed=0):
    return ConflictReport(frozenset(), row, col, fil, ss, ts, min_allowed)


def identity(t):
    return apply_quadruple(t, PermutationQuadruple.identity(1 << t))


def without_timing(log):
    return [(r.restart, r.seed, r.score, r.plan) for r in log]


class TestParams:
    def test_asymptotic_preset(self):
        p = SolverParams.asymptotic()
        assert p.alpha == float(1 - Fraction(38, 2**25))
        assert p.kappa == 6 / 2**25 and p.epsilon == 2**-6 and p.theta == 2**-12
        assert ASYMPTOTIC_CONSTANTS["gamma"] == Fraction(1, 2**25)

    @pytest.mark.parametrize("kw", [{"alpha": 0}, {"alpha": 1.5}, {"kappa": 0}, {"permutation_samples": 0}, {"max_restarts": -1}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)

    def test_strict_needs_three_per_line(self):
        with pytest.raises(ValueError):
            SolverParams(strict_thresholds=True, epsilon=0.25).check_order(8)
        SolverParams(strict_thresholds=True, epsilon=0.25).check_order(16)
        SolverParams(epsilon=0.25).check_order(8)


class TestViolationScore:
    def test_zero_when_met(self):
        n = 8
        assert violation_score(report(min_allowed=n - 1), SolverParams(alpha=(n - 1) / n), n) == 0

    def test_counts_excess(self):
        p = SolverParams(kappa=0.25, alpha=0.5)
        assert violation_score(report(row=4, min_allowed=8), p, 8) == 2

    def test_allowed_shortfall(self):
        assert violation_score(report(min_allowed=1), SolverParams(alpha=0.5), 8) == 3

    @given(
        st.lists(st.integers(0, 20), min_size=5, max_size=5),
        st.integers(0, 15),
        st.floats(0.01, 1),
        st.floats(0.01, 1),
    )
    def test_monotone_in_kappa(self, maxima, allowed_min, k1, k2):
        lo, hi = sorted((k1, k2))
        r = report(*maxima, min_allowed=allowed_min)
        assert violation_score(r, SolverParams(kappa=hi), 16) <= violation_score(r, SolverParams(kappa=lo), 16)


class TestPolish:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
    def test_never_increases_conflicts(self, seed, t):
        n = 1 << t
        A = random_forbidden(n, 1, 1.0, seed)
        sigma = random_quadruple(n, seed)
        before = len(conflicts(apply_quadruple(t, sigma), A))
        after = len(conflicts(apply_quadruple(t, polish_quadruple(sigma, A, 3)), A))
        assert after <= before

    def test_zero_rounds_is_identity(self):
        sigma = random_quadruple(8, 1)
        assert polish_quadruple(sigma, random_forbidden(8, 1, 1.0, 1), 0) == sigma


class TestFindPermutation:
    def test_empty_accepts_first(self):
        params = SolverParams(alpha=7 / 8, permutation_samples=1, strict_thresholds=True)
        cube, rep = find_permutation(3, ForbiddenCube(8, 1), params)
        assert rep.line_maxima == (0, 0, 0, 0, 0)
        assert rep.min_allowed == 7

    def test_half_two_strict_fails(self):
        # both order-2 cubes conflict with this A, and kappa * n < 1 forbids any conflict
        params = SolverParams(kappa=0.4, epsilon=2.0, strict_thresholds=True, permutation_samples=16)
        with pytest.raises(PermutationNotFound) as exc:
            find_permutation(1, unavoidable_half(2), params)
        assert exc.value.score > 0

    def test_non_strict_returns_best(self):
        params = SolverParams(kappa=0.4, permutation_samples=4)
        cube, rep = find_permutation(1, unavoidable_half(2), params)
        assert len(rep.conflict_cells) == 1

    def test_calibration_order_sixteen(self):
        params = SolverParams(kappa=0.25, alpha=0.5, permutation_samples=64, strict_thresholds=True)
        accepted = 0
        for seed in range(100):
            try:
                find_permutation(4, random_forbidden(16, 1, 0.25, seed), params, seed=seed)
                accepted += 1
            except PermutationNotFound:
                pass
        assert accepted >= 95

    def test_order_mismatch(self):
        with pytest.raises(ValueError):
            find_permutation(3, ForbiddenCube(4, 1), SolverParams())

    def test_report_matches_stats(self):
        A = random_forbidden(8, 1, 0.5, 3)
        cube, rep = find_permutation(3, A, SolverParams(seed=3))
        assert rep == conflict_stats(cube, A)


class TestBuildSwapPlan:
    def test_no_conflicts(self):
        plan = build_swap_plan(identity(3), ForbiddenCube(8, 1), SolverParams())
        assert len(plan) == 0 and plan.covered_conflicts == {}

    def test_single_conflict(self):
        L = identity(3)
        A = ForbiddenCube(8, 1, {(2, 3, 4): {int(L[2, 3, 4])}})
        plan = build_swap_plan(L, A, SolverParams())
        assert len(plan) == 1 and (2, 3, 4) in plan.three_cubes[0]
        assert verify_plan(L, A, plan) == []
        assert ledger_mismatches(L, plan) == []

    def test_order_two_unique_cube_selected(self):
        L = identity(1)
        A = ForbiddenCube(2, 1, {(0, 0, 0): {0}})
        plan = build_swap_plan(L, A, SolverParams())
        assert plan.three_cubes == [ThreeCube(0, 1, 0, 1, 0, 1)]

    def test_stuck_diagnostics(self):
        # swapping the only 3-cube would move symbol 0 onto the forbidden corner (1,1,1)
        L = apply_quadruple(1, PermutationQuadruple((0, 1), (0, 1), (0, 1), (1, 0)))
        with pytest.raises(StuckConflict) as exc:
            build_swap_plan(L, unavoidable_half(2), SolverParams())
        assert exc.value.cell == (1, 1, 1)
        assert exc.value.reasons == {0: "not-allowed"}
        assert "stuck at conflict (2,2,2)" in str(exc.value)

    @pytest.mark.parametrize("seed", range(10))
    def test_invariants_random(self, seed):
        A = random_forbidden(16, 1, 1.0, seed)
        params = SolverParams(seed=seed)
        L, _ = find_permutation(4, A, params)
        try:
            plan = build_swap_plan(L, A, params)
        except StuckConflict:
            return
        assert verify_plan(L, A, plan) == []
        assert ledger_mismatches(L, plan) == []
        assert plan.ledger.total_used == 8 * len(plan) <= 8 * len(conflicts(L, A))

    def test_deterministic(self):
        A = random_forbidden(16, 1, 1.0, 4)
        L, _ = find_permutation(4, A, SolverParams(seed=4))

        def outcome(seed):
            try:
                return build_swap_plan(L, A, SolverParams(), seed=seed).three_cubes
            except StuckConflict as exc:
                return str(exc)

        assert all(outcome(s) == outcome(s) for s in range(5))


class TestVerifyPlan:
    def test_detects_overlap_and_gaps(self):
        L = identity(2)
        A = ForbiddenCube(4, 1, {(0, 0, 0): {0}})
        tcs = three_cubes_through(L, (0, 0, 0))
        plan = SwapPlan(three_cubes=tcs[:2], covered_conflicts={(0, 0, 0): 0})
        problems = verify_plan(L, A, plan)
        assert any("share cell" in p for p in problems)
        assert any("lies in 2 plan 3-cubes" in p for p in problems)
        assert verify_plan(L, A, SwapPlan()) == ["conflict (1,1,1) lies in 0 plan 3-cubes"]


class TestApplyPlan:
    def test_empty(self):
        assert apply_plan(identity(2), SwapPlan()) == identity(2)

    def test_one_cube_changes_eight_cells(self):
        L = identity(3)
        tc = three_cubes_through(L, (1, 2, 3))[0]
        out = apply_plan(L, SwapPlan(three_cubes=[tc]))
        assert int((out.entries != L.entries).sum()) == 8
        assert validate_latin(out).ok

    def test_overlap_rejected(self):
        L = identity(2)
        tcs = three_cubes_through(L, (0, 0, 0))
        with pytest.raises(ValueError):
            apply_plan(L, SwapPlan(three_cubes=tcs[:2]))


class TestSolve:
    def test_empty(self):
        result = solve(ForbiddenCube(8, 1))
        assert result.restarts == 0
        assert validate_latin(result.cube).ok

    def test_order_two(self):
        result = solve(ForbiddenCube(2, 1, {(0, 0, 0): {0}}))
        assert result.cube[0, 0, 0] == 1
        assert validate_latin(result.cube).ok

    def test_half_four_fails(self):
        with pytest.raises(SolveFailed) as exc:
            solve(unavoidable_half(4), SolverParams(max_restarts=5))
        assert len(exc.value.log) == 6
        assert isinstance(decide_avoidable(unavoidable_half(4)), Unavoidable)

    def test_log_format(self):
        result = solve(random_forbidden(16, 1, 1.0, 2), SolverParams(seed=2))
        lines = result.log_text().splitlines()
        assert lines and all(LOG_LINE.match(x) for x in lines)
        with pytest.raises(SolveFailed) as exc:
            solve(unavoidable_half(2), SolverParams(max_restarts=2))
        assert all(LOG_LINE.match(x) for x in exc.value.log_text().splitlines())

    def test_deterministic(self):
        A = random_forbidden(16, 1, 1.0, 8)
        one = solve(A, SolverParams(seed=8))
        two = solve(A, SolverParams(seed=8))
        assert one.cube == two.cube
        assert without_timing(one.log) == without_timing(two.log)

    def test_parallel_matches_sequential(self):
        A = random_forbidden(16, 1, 1.0, 1)
        params = SolverParams(seed=1)
        seq = solve(A, params)
        par = solve(A, params, workers=2)
        assert seq.cube == par.cube
        assert without_timing(seq.log) == without_timing(par.log)[: len(seq.log)]

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            solve(ForbiddenCube(3, 1))

    def test_restart_seeds_distinct(self):
        assert len({restart_seed(0, r) for r in range(50)}) == 50

    @pytest.mark.parametrize("seed", range(6))
    def test_strict_usage_bounds(self, seed):
        n = 16
        A = random_forbidden(n, 1, 0.25, seed)
        params = SolverParams(strict_thresholds=True, seed=seed)
        result = solve(A, params)
        plan, L = result.plan, result.structured
        n_conf = len(conflicts(L, A))
        assert plan.ledger.total_used <= 8 * n_conf
        assert n_conf <= params.kappa * n**3
        bound = line_usage_bound(params, n)
        assert all(v <= bound for v in plan.ledger.lines.values())
        assert ledger_mismatches(L, plan) == []
        assert np.array_equal(result.cube.entries, apply_plan(L, plan).entries)
