"""Acceptance criteria, one test each; the pass/fail summary prints at the end of the run."""

import itertools
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from latincube.bounds import BoundsParams, feasible, lemma1_lhs_log, lemma2_margin, lemma2_margin_float
from latincube.cube import apply_quadruple, boolean_cube, random_quadruple, validate_latin
from latincube.engine import SolveFailed, SolverParams, apply_plan, ledger_mismatches, line_usage_bound, solve, verify_plan
from latincube.forbidden import ForbiddenCube, conflicts, random_forbidden, unavoidable_half
from latincube.oracle import Avoidable, Unavoidable, decide_avoidable, enumerate_avoiders
from latincube.structure import (
    BlockFamily,
    BlockId,
    ThreeCube,
    block_members,
    swap,
    symbol_set,
    three_cube_from_pair,
    three_cubes_through,
    transversal_set,
)

from conftest import brute_latin, brute_three_cubes


def latin_by_sorting(E):
    """Independent Latin check: every axis-line sorts to 0..n-1."""
    n = E.shape[0]
    ar = np.arange(n)
    return all(np.array_equal(np.sort(E, axis=a), np.broadcast_to(np.expand_dims(ar, tuple(x for x in range(3) if x != a)), E.shape)) for a in range(3))


def boxes_through_cell(E, cell):
    """Count 3-cubes through ``cell`` by forcing the box from each choice of second row index."""
    n = E.shape[0]
    i, j, k = cell
    s = E[i, j, k]
    count = 0
    for i2 in range(n):
        if i2 == i:
            continue
        j2 = int(np.nonzero(E[i2, :, k] == s)[0][0])
        if j2 == j:
            continue
        u = E[i, j2, k]
        k2 = int(np.nonzero(E[i, j, :] == u)[0][0])
        if k2 == k:
            continue
        even = {E[i, j, k], E[i2, j2, k], E[i, j2, k2], E[i2, j, k2]}
        odd = {E[i, j2, k], E[i2, j, k], E[i, j, k2], E[i2, j2, k2]}
        if len(even) == 1 and len(odd) == 1 and even != odd:
            count += 1
    return count


def as_three_cube(box):
    return ThreeCube(*box)


def pair_counts(boxes):
    """How many 3-cubes contain each unordered pair of cells."""
    counts = Counter()
    for box in boxes:
        cells = sorted(as_three_cube(box).cells())
        counts.update(itertools.combinations(cells, 2))
    return counts


@pytest.mark.criterion(1, "Boolean construction is Latin for t = 1..6 in < 1 s")
def test_criterion_1_boolean_construction():
    started = time.perf_counter()
    for t in range(1, 7):
        cube = boolean_cube(t)
        assert validate_latin(cube).ok
        assert latin_by_sorting(cube.entries)
    assert time.perf_counter() - started < 1.0


@pytest.mark.criterion(2, "every cell lies in n - 1 3-cubes in < 10 s")
def test_criterion_2_three_cubes_per_cell():
    started = time.perf_counter()
    for t in (2, 3):
        cube = boolean_cube(t)
        n = cube.n
        per_cell = Counter(c for box in brute_three_cubes(cube.entries) for c in as_three_cube(box).cells())
        assert len(per_cell) == n**3
        assert set(per_cell.values()) == {n - 1}
        for cell in itertools.product(range(n), repeat=3):
            assert len(three_cubes_through(cube, cell)) == n - 1
    rng = np.random.default_rng(2)
    for t in (4, 5, 6):
        cube = boolean_cube(t)
        n = cube.n
        for cell in map(tuple, rng.integers(0, n, size=(1000, 3))):
            assert boxes_through_cell(cube.entries, cell) == n - 1
            assert len(set(three_cubes_through(cube, cell))) == n - 1
    assert time.perf_counter() - started < 10.0


@pytest.mark.criterion(3, "3-cube intersection census at t = 2 is {0, 1, 8} in < 5 s")
def test_criterion_3_intersection_census():
    started = time.perf_counter()
    sizes = set()
    for cube in [boolean_cube(2)] + [apply_quadruple(2, random_quadruple(4, s)) for s in range(5)]:
        boxes = [frozenset(as_three_cube(b).cells()) for b in brute_three_cubes(cube.entries)]
        assert len(boxes) == 4**3 * 3 // 8
        sizes |= {len(a & b) for a in boxes for b in boxes}
    assert sizes == {0, 1, 8}
    assert time.perf_counter() - started < 5.0


@pytest.mark.criterion(4, "10^4 swaps at t = 3..5 keep the cube Latin and double swaps restore it in < 10 s")
def test_criterion_4_swap_soundness():
    started = time.perf_counter()
    rng = np.random.default_rng(4)
    applications = 0
    for t in (3, 4, 5):
        n = 1 << t
        for _ in range(40):
            cube = apply_quadruple(t, random_quadruple(n, rng))
            for _ in range(84):
                cell = tuple(int(x) for x in rng.integers(0, n, size=3))
                j2 = int(rng.integers(0, n - 1))
                j2 += j2 >= cell[1]
                tc = three_cube_from_pair(cube, cell, j2)
                E = cube.entries.copy()
                swap(E, tc)
                assert latin_by_sorting(E)
                assert int((E != cube.entries).sum()) == 8
                swap(E, tc)
                assert np.array_equal(E, cube.entries)
                applications += 1
    assert applications >= 10**4
    assert time.perf_counter() - started < 10.0


@pytest.mark.criterion(5, "block families partition, transversal-sets and symbol-sets behave, t = 2,3 in < 20 s")
def test_criterion_5_structure_partitions():
    started = time.perf_counter()
    for t in (2, 3):
        n = 1 << t
        for seed in range(20):
            cube = apply_quadruple(t, random_quadruple(n, 1000 * t + seed))
            E = cube.entries
            everything = set(itertools.product(range(n), repeat=3))
            for family in BlockFamily:
                parts = [block_members(cube, BlockId(family, c)) for c in range(n)]
                assert sum(len(p) for p in parts) == n**3
                assert set().union(*parts) == everything
            pairs = pair_counts(brute_three_cubes(E))
            for c in range(n):
                for d in range(n):
                    cells = sorted(transversal_set(cube, c, d))
                    assert len(cells) == n
                    for axis in range(3):
                        assert len({cell[axis] for cell in cells}) == n
                    assert len({E[cell] for cell in cells}) == n
                    for a, b in itertools.combinations(cells, 2):
                        assert pairs[(a, b)] >= 1
            for family in ("row", "column", "file"):
                for layer in range(n):
                    for block in range(n):
                        members = symbol_set(cube, family, layer, block)
                        assert len(members) == n
                        assert len({E[cell] for cell in members}) == 1
    assert time.perf_counter() - started < 20.0


@pytest.mark.criterion(6, "feasibility inequalities reproduce with the fixed constants in < 1 s")
def test_criterion_6_bounds():
    started = time.perf_counter()
    fixed = BoundsParams.asymptotic()
    assert feasible(30, fixed) == (True, True)
    assert feasible(25, fixed)[0] is False
    assert lemma2_margin(fixed, 32) < 0 < lemma2_margin(fixed, 2**30)
    assert isinstance(lemma2_margin(fixed, 32), Fraction)
    for t in range(1, 41):
        exact = float(lemma2_margin(fixed, 2**t))
        assert lemma2_margin_float(fixed, 2**t) == pytest.approx(exact, rel=1e-9)
    # log-space evaluation against the direct sum, where the direct sum does not overflow
    for t in (25, 26, 27, 28):
        n = 2**t
        kn = int(fixed.kappa * n)
        rest = (1 - fixed.alpha - 2 * fixed.gamma) * n / 3
        assert rest.denominator == 1
        rest = int(rest)
        g = fixed.gamma * n
        direct = 7 * n**2 * g**kn / Fraction(np.prod(range(1, kn + 1), dtype=object)) + 3 * n**3 * (2 * g) ** rest / Fraction(
            np.prod(range(1, rest + 1), dtype=object)
        )
        assert lemma1_lhs_log(fixed, t) == pytest.approx(float(np.log(float(direct))), rel=1e-9)
    assert time.perf_counter() - started < 1.0


@pytest.mark.criterion(7, "oracle ground truth on the opposite-corner cubes and the empty n = 2 cube in < 60 s")
def test_criterion_7_oracle_ground_truth():
    started = time.perf_counter()
    assert isinstance(decide_avoidable(unavoidable_half(2)), Unavoidable)
    assert isinstance(decide_avoidable(unavoidable_half(4)), Unavoidable)
    found = enumerate_avoiders(ForbiddenCube(2, 1), 10)
    assert len(found) == 2
    assert found[0] != found[1]
    for cube in found:
        assert brute_latin(cube.entries)
    for seed in range(10):
        A = random_forbidden(4, 1, 0.5, seed)
        result = decide_avoidable(A)
        if isinstance(result, Avoidable):
            assert brute_latin(result.witness.entries)
            assert conflicts(result.witness, A) == frozenset()
    assert time.perf_counter() - started < 60.0


@pytest.fixture(scope="module")
def end_to_end_runs():
    started = time.perf_counter()
    runs = {}
    for seed in range(100):
        A = random_forbidden(16, 1, 1.0, seed)
        try:
            runs[seed] = (A, solve(A, SolverParams(seed=seed)))
        except SolveFailed:
            runs[seed] = (A, None)
    return runs, time.perf_counter() - started


@pytest.mark.criterion(8, "n = 16 end-to-end solving succeeds on >= 95 of 100 seeds in < 5 min")
def test_criterion_8_end_to_end(end_to_end_runs):
    runs, elapsed = end_to_end_runs
    successes = 0
    for A, result in runs.values():
        if result is None:
            continue
        assert result.restarts <= 20
        assert brute_latin(result.cube.entries)
        assert conflicts(result.cube, A) == frozenset()
        successes += 1
    print(f"criterion 8: {successes}/100 solved in {elapsed:.1f} s")
    assert successes >= 95
    assert elapsed < 300


@pytest.mark.criterion(9, "swap plans pass disjointness, coverage, allowedness, ledger and line-usage recounts")
def test_criterion_9_plan_invariants(end_to_end_runs):
    runs, _ = end_to_end_runs
    checked = 0
    for A, result in runs.values():
        if result is None:
            continue
        L, plan = result.structured, result.plan
        assert verify_plan(L, A, plan) == []
        assert ledger_mismatches(L, plan) == []
        assert apply_plan(L, plan) == result.cube
        checked += 1
    assert checked > 0
    strict_checked = 0
    for seed in range(10):
        A = random_forbidden(16, 1, 0.25, seed)
        params = SolverParams(strict_thresholds=True, seed=seed)
        try:
            result = solve(A, params)
        except SolveFailed:
            continue
        L, plan = result.structured, result.plan
        assert verify_plan(L, A, plan) == []
        assert ledger_mismatches(L, plan) == []
        bound = line_usage_bound(params, L.n)
        used = np.zeros((L.n,) * 3, dtype=bool)
        for tc in plan.three_cubes:
            for cell in tc.cells():
                used[cell] = True
        # rows, columns and files recounted from the used-cell mask
        for axis in range(3):
            assert used.sum(axis=axis).max(initial=0) <= bound
        assert max(plan.ledger.lines.values(), default=0) <= bound
        strict_checked += 1
    assert strict_checked >= 5


@pytest.mark.criterion(10, "solver never succeeds where the oracle says unavoidable, n = 4, in < 2 min")
def test_criterion_10_solver_oracle_agreement():
    started = time.perf_counter()
    verdicts = Counter()
    for seed in range(50):
        A = random_forbidden(4, 1, 1.0, seed)
        truth = decide_avoidable(A)
        assert isinstance(truth, (Avoidable, Unavoidable))
        try:
            result = solve(A, SolverParams(seed=seed))
        except SolveFailed:
            verdicts["solver-exhausted", type(truth).__name__] += 1
            continue
        assert isinstance(truth, Avoidable)
        assert brute_latin(result.cube.entries)
        assert conflicts(result.cube, A) == frozenset()
        verdicts["solver-success", type(truth).__name__] += 1
    print(f"criterion 10: {dict(verdicts)}")
    assert verdicts["solver-exhausted", "Unavoidable"] > 0
    assert time.perf_counter() - started < 120.0
