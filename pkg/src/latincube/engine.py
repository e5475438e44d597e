"""Two-phase avoidance solver.

Phase one picks a quadruple sigma so that sigma(B) has few, well spread
conflicts with the forbidden cube. Phase two covers every conflict with a
disjoint allowed 3-cube chosen greedily under overload limits, then swaps all
of them at once.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cube import Cell, LatinCube, PermutationQuadruple, StructuredCube, apply_quadruple, exponent_of, random_quadruple, validate_latin, MAX_T
from .forbidden import ConflictReport, ForbiddenCube, allowed, conflict_stats, conflicts
from .structure import (
    BlockFamily,
    BlockId,
    LineFamily,
    LineId,
    ThreeCube,
    block_members,
    block_of,
    blocks_of,
    line_members,
    line_of,
    lines_of,
    pattern_symbols,
    swap,
    three_cube_from_pair,
)

ASYMPTOTIC_CONSTANTS = {
    "alpha": 1 - Fraction(38, 2**25),
    "gamma": Fraction(1, 2**25),
    "kappa": Fraction(6, 2**25),
    "epsilon": Fraction(1, 2**6),
    "theta": Fraction(1, 2**12),
}


@dataclass(frozen=True)
class SolverParams:
    """Thresholds are fractions of n (line limits) or of n^2 (block limit theta)."""

    alpha: float = 0.5
    kappa: float = 0.25
    epsilon: float = 0.5
    theta: float = 0.25
    permutation_samples: int = 8
    max_restarts: int = 20
    seed: int = 0
    strict_thresholds: bool = False
    polish_rounds: int = 4

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if min(self.kappa, self.epsilon, self.theta) <= 0:
            raise ValueError("kappa, epsilon and theta must be positive")
        if self.permutation_samples < 1 or self.max_restarts < 0 or self.polish_rounds < 0:
            raise ValueError("sample, restart and polish counts must be nonnegative (samples >= 1)")

    @classmethod
    def asymptotic(cls, **overrides) -> "SolverParams":
        values = {k: float(v) for k, v in ASYMPTOTIC_CONSTANTS.items() if k != "gamma"}
        values.update(overrides)
        return cls(**values)

    def check_order(self, n: int) -> None:
        if self.strict_thresholds and self.epsilon * n < 3:
            raise ValueError(f"strict mode needs epsilon * n >= 3, got {self.epsilon * n}")


class PermutationNotFound(Exception):
    """Strict mode: no sampled quadruple met every threshold."""

    def __init__(self, cube: StructuredCube, report: ConflictReport, score: float):
        super().__init__(f"no quadruple met the thresholds (best score {score:g})")
        self.cube = cube
        self.report = report
        self.score = score


def violation_score(report: ConflictReport, params: SolverParams, n: int) -> float:
    cap = params.kappa * n
    over = sum(max(0.0, m - cap) for m in report.line_maxima)
    return over + max(0.0, params.alpha * n - report.min_allowed)


def polish_quadruple(sigma: PermutationQuadruple, A: ForbiddenCube, rounds: int) -> PermutationQuadruple:
    """Lower the total conflict count by exact re-assignment of one permutation at a time.

    With three of the four permutations fixed, the conflict count is a linear
    assignment cost in the fourth, so each step solves it optimally and the
    total never increases.
    """
    n = sigma.n
    ci, cj, ck, cs = A.coo
    if ci.size == 0 or rounds == 0:
        return sigma
    pulls = list(sigma.inverses()[:3])
    tau4 = sigma.arrays()[3]
    coords = (ci, cj, ck)
    for _ in range(rounds):
        pull_sym = np.argsort(tau4)[cs]
        for axis in range(3):
            others = [pulls[a][coords[a]] for a in range(3) if a != axis]
            # entry conflicts iff its layer takes this pulled value
            value = pull_sym ^ others[0] ^ others[1]
            cost = np.zeros((n, n))
            np.add.at(cost, (coords[axis], value), 1)
            _, assigned = linear_sum_assignment(cost)
            pulls[axis] = assigned
        x = pulls[0][ci] ^ pulls[1][cj] ^ pulls[2][ck]
        cost = np.zeros((n, n))
        np.add.at(cost, (x, cs), 1)
        _, tau4 = linear_sum_assignment(cost)
    return PermutationQuadruple(*(tuple(np.argsort(p)) for p in pulls), tuple(tau4))


def find_permutation(t: int, A: ForbiddenCube, params: SolverParams, seed=None) -> tuple[StructuredCube, ConflictReport]:
    """Sample quadruples until sigma(B) meets conditions (a)-(f).

    Each sample is polished (``params.polish_rounds``) before it is scored.
    Returns the first sample with score 0; otherwise the lowest-scoring one,
    or raises :class:`PermutationNotFound` in strict mode.
    """
    n = 1 << t
    if A.n != n:
        raise ValueError(f"forbidden cube has order {A.n}, expected {n}")
    params.check_order(n)
    rng = np.random.default_rng(params.seed if seed is None else seed)
    best = None
    for _ in range(params.permutation_samples):
        sigma = polish_quadruple(random_quadruple(n, rng), A, params.polish_rounds)
        cube = apply_quadruple(t, sigma)
        report = conflict_stats(cube, A)
        score = violation_score(report, params, n)
        if score == 0:
            return cube, report
        if best is None or score < best[2]:
            best = (cube, report, score)
    if params.strict_thresholds:
        raise PermutationNotFound(*best)
    return best[0], best[1]


# ---------------------------------------------------------------------------
# swap plan


class OverloadLedger:
    """Used-cell counters for every block (limit theta*n^2) and line (limit epsilon*n)."""

    def __init__(self, cube: StructuredCube, params: SolverParams):
        n = cube.n
        self.cube = cube
        self.block_limit = params.theta * n * n
        self.line_limit = params.epsilon * n
        self.blocks: Counter = Counter()
        self.lines: Counter = Counter()
        self.used: set[Cell] = set()

    def add(self, cell: Cell) -> None:
        if cell in self.used:
            raise ValueError(f"cell {cell} used twice")
        self.used.add(cell)
        for b in blocks_of(self.cube, cell):
            self.blocks[b] += 1
        for ln in lines_of(self.cube, cell):
            self.lines[ln] += 1

    def block_overloaded(self, block: BlockId) -> bool:
        return self.blocks[block] >= self.block_limit

    def line_overloaded(self, line: LineId) -> bool:
        return self.lines[line] >= self.line_limit

    @property
    def total_used(self) -> int:
        return len(self.used)


def recount_ledger(cube: StructuredCube, used: set[Cell]) -> tuple[Counter, Counter]:
    """Counters rebuilt from the member sets of every block and line."""
    n = cube.n
    blocks: Counter = Counter()
    lines: Counter = Counter()
    for family in BlockFamily:
        for c in range(n):
            hit = len(block_members(cube, BlockId(family, c)) & used)
            if hit:
                blocks[BlockId(family, c)] = hit
    for family in LineFamily:
        for a in range(n):
            for b in range(n):
                hit = len(line_members(cube, LineId(family, a, b)) & used)
                if hit:
                    lines[LineId(family, a, b)] = hit
    return blocks, lines


@dataclass
class SwapPlan:
    three_cubes: list[ThreeCube] = field(default_factory=list)
    covered_conflicts: dict[Cell, int] = field(default_factory=dict)
    ledger: OverloadLedger | None = None

    def __len__(self):
        return len(self.three_cubes)


class StuckConflict(Exception):
    """No candidate 3-cube survived for ``cell``; ``reasons`` maps j2 to the eliminating condition."""

    def __init__(self, cell: Cell, reasons: dict[int, str], plan: SwapPlan):
        shown = ", ".join(f"j2={j + 1}:{r}" for j, r in sorted(reasons.items()))
        super().__init__(f"stuck at conflict {_fmt(cell)} ({shown})")
        self.cell = cell
        self.reasons = reasons
        self.plan = plan


def _fmt(cell: Cell) -> str:
    return "(" + ",".join(str(x + 1) for x in cell) + ")"


def _candidate_blocks(L: StructuredCube, i1, j1, k1, i2, j2, k2) -> list[BlockId]:
    F = BlockFamily
    return [
        BlockId(F.ROW_LAYER, i2),
        BlockId(F.COLUMN_LAYER, j2),
        BlockId(F.FILE_LAYER, k2),
        block_of(L, F.ROW_BLOCK, (i2, j1, k1)),
        block_of(L, F.COLUMN_BLOCK, (i1, j2, k1)),
        block_of(L, F.FILE_BLOCK, (i1, j2, k1)),
        block_of(L, F.SYMBOL_ROW_BLOCK, (i1, j2, k1)),
        block_of(L, F.SYMBOL_COLUMN_BLOCK, (i2, j1, k1)),
        block_of(L, F.SYMBOL_FILE_BLOCK, (i1, j2, k1)),
        block_of(L, F.SYMBOL_BLOCK, (i1, j2, k1)),
    ]


def _candidate_lines(L: StructuredCube, i1, j1, k1, i2, j2, k2) -> list[LineId]:
    F = LineFamily
    return [
        # columns, rows, files
        line_of(L, F.COLUMN, (i1, j2, k1)),
        line_of(L, F.COLUMN, (i1, j1, k2)),
        line_of(L, F.COLUMN, (i1, j2, k2)),
        line_of(L, F.ROW, (i2, j1, k1)),
        line_of(L, F.ROW, (i1, j1, k2)),
        line_of(L, F.ROW, (i2, j1, k2)),
        line_of(L, F.FILE, (i1, j2, k1)),
        line_of(L, F.FILE, (i2, j1, k1)),
        line_of(L, F.FILE, (i2, j2, k1)),
        # transversal-sets not through the anchor
        line_of(L, F.TRANSVERSAL, (i2, j1, k1)),
        line_of(L, F.TRANSVERSAL, (i1, j2, k1)),
        line_of(L, F.TRANSVERSAL, (i2, j2, k1)),
        # symbol-sets holding the anchor's symbol
        line_of(L, F.SYMBOL_SET_FILE, (i2, j1, k2)),
        line_of(L, F.SYMBOL_SET_COLUMN, (i2, j2, k1)),
        line_of(L, F.SYMBOL_SET_ROW, (i2, j2, k1)),
        # symbol-sets holding the other symbol
        line_of(L, F.SYMBOL_SET_FILE, (i1, j2, k1)),
        line_of(L, F.SYMBOL_SET_COLUMN, (i1, j2, k1)),
        line_of(L, F.SYMBOL_SET_ROW, (i1, j1, k2)),
        line_of(L, F.SYMBOL_SET_FILE, (i1, j1, k2)),
        line_of(L, F.SYMBOL_SET_COLUMN, (i2, j1, k1)),
        line_of(L, F.SYMBOL_SET_ROW, (i2, j1, k1)),
    ]


def build_swap_plan(L: StructuredCube, A: ForbiddenCube, params: SolverParams, seed=None) -> SwapPlan:
    """Greedy disjoint cover of all conflicts by allowed 3-cubes.

    Conflicts are taken in lexicographic order; for each, candidate column
    layers j2 are tried in seeded random order and the first 3-cube that
    passes the overload, cell and allowedness conditions is accepted.
    """
    params.check_order(L.n)
    rng = np.random.default_rng(params.seed if seed is None else seed)
    conflict_set = conflicts(L, A)
    ledger = OverloadLedger(L, params)
    plan = SwapPlan(ledger=ledger)
    n = L.n
    for anchor in sorted(conflict_set):
        i1, j1, k1 = anchor
        reasons: dict[int, str] = {}
        for j2 in rng.permutation(n).tolist():
            if j2 == j1:
                continue
            tc = three_cube_from_pair(L, anchor, j2)
            i2 = tc.i2 if tc.i1 == i1 else tc.i1
            k2 = tc.k2 if tc.k1 == k1 else tc.k1
            if any(ledger.block_overloaded(b) for b in _candidate_blocks(L, i1, j1, k1, i2, j2, k2)):
                reasons[j2] = "overloaded-block"
                continue
            if any(ledger.line_overloaded(ln) for ln in _candidate_lines(L, i1, j1, k1, i2, j2, k2)):
                reasons[j2] = "overloaded-line"
                continue
            others = [c for c in tc.cells() if c != anchor]
            if any(c in conflict_set or c in ledger.used for c in others):
                reasons[j2] = "cell-conflict-or-used"
                continue
            if not allowed(L, A, tc):
                reasons[j2] = "not-allowed"
                continue
            for c in tc.cells():
                ledger.add(c)
            plan.covered_conflicts[anchor] = len(plan.three_cubes)
            plan.three_cubes.append(tc)
            break
        else:
            raise StuckConflict(anchor, reasons, plan)
    return plan


def verify_plan(L: LatinCube, A: ForbiddenCube, plan: SwapPlan) -> list[str]:
    """Independent check of the plan invariants; returns a list of problems."""
    problems = []
    seen: dict[Cell, int] = {}
    for idx, tc in enumerate(plan.three_cubes):
        if pattern_symbols(L.entries, tc) is None:
            problems.append(f"3-cube {idx} lacks the pattern")
            continue
        if not allowed(L, A, tc):
            problems.append(f"3-cube {idx} is not allowed")
        for c in tc.cells():
            if c in seen:
                problems.append(f"3-cubes {seen[c]} and {idx} share cell {_fmt(c)}")
            seen[c] = idx
    for c in conflicts(L, A):
        holders = [idx for idx, tc in enumerate(plan.three_cubes) if c in tc]
        if len(holders) != 1:
            problems.append(f"conflict {_fmt(c)} lies in {len(holders)} plan 3-cubes")
        elif plan.covered_conflicts.get(c) != holders[0]:
            problems.append(f"conflict {_fmt(c)} mapped to the wrong 3-cube")
    return problems


def ledger_mismatches(L: StructuredCube, plan: SwapPlan) -> list[str]:
    ledger = plan.ledger
    used = {c for tc in plan.three_cubes for c in tc.cells()}
    out = []
    if used != ledger.used:
        out.append("used-cell set differs from plan cells")
    blocks, lines = recount_ledger(L, used)
    if +ledger.blocks != blocks:
        out.append("block counters differ from recount")
    if +ledger.lines != lines:
        out.append("line counters differ from recount")
    return out


def line_usage_bound(params: SolverParams, n: int) -> float:
    return 2 * params.kappa * n + params.epsilon * n + 1


def apply_plan(L: LatinCube, plan: SwapPlan) -> LatinCube:
    entries = L.entries.copy()
    seen: set[Cell] = set()
    for tc in plan.three_cubes:
        cells = set(tc.cells())
        if cells & seen:
            raise ValueError("plan 3-cubes overlap")
        seen |= cells
        # disjointness makes each swap see the original symbols
        swap(entries, tc)
    return LatinCube(entries)


# ---------------------------------------------------------------------------
# restart loop


@dataclass(frozen=True)
class AttemptRecord:
    restart: int
    seed: int
    score: float
    plan: str
    time_ms: int

    def __str__(self):
        return f"restart={self.restart} seed={self.seed} score={self.score:g} plan={self.plan} time_ms={self.time_ms}"


@dataclass
class SolveResult:
    cube: LatinCube
    structured: StructuredCube
    plan: SwapPlan
    log: list[AttemptRecord]

    @property
    def restarts(self) -> int:
        return len(self.log) - 1

    def log_text(self) -> str:
        return "".join(f"{rec}\n" for rec in self.log)


class SolveFailed(Exception):
    def __init__(self, log: list[AttemptRecord]):
        super().__init__(f"no avoiding cube after {len(log)} attempts")
        self.log = log

    def log_text(self) -> str:
        return "".join(f"{rec}\n" for rec in self.log)


def restart_seed(seed: int, restart: int) -> int:
    return int(np.random.SeedSequence([seed, restart]).generate_state(1)[0])


def _attempt(t: int, A: ForbiddenCube, params: SolverParams, r: int):
    started = time.perf_counter()
    s = restart_seed(params.seed, r)
    rng = np.random.default_rng(s)

    def record(score, status):
        return AttemptRecord(r, s, score, status, int((time.perf_counter() - started) * 1000))

    try:
        L, report = find_permutation(t, A, params, seed=rng)
    except PermutationNotFound as exc:
        return record(exc.score, "no-permutation"), None
    score = violation_score(report, params, L.n)
    try:
        plan = build_swap_plan(L, A, params, seed=rng)
    except StuckConflict as exc:
        return record(score, f"stuck:{_fmt(exc.cell)}"), None
    result = apply_plan(L, plan)
    if not validate_latin(result).ok or conflicts(result, A) or verify_plan(L, A, plan):
        raise RuntimeError(f"attempt {r} produced an invalid cube; this is a bug")
    return record(score, "ok"), (result, L, plan)


def solve(A: ForbiddenCube, params: SolverParams = SolverParams(), workers: int = 1) -> SolveResult:
    """Restart loop over permutation search and swap planning.

    Attempt r uses a seed derived from ``params.seed`` and r, so the answer and
    log do not depend on ``workers``: parallel batches keep the lowest
    successful attempt and discard later ones.
    """
    t = exponent_of(A.n)
    if t is None or not 1 <= t <= MAX_T:
        raise ValueError(f"order {A.n} is not 2^t with 1 <= t <= {MAX_T}")
    params.check_order(A.n)
    attempts = params.max_restarts + 1
    log: list[AttemptRecord] = []
    if workers <= 1:
        for r in range(attempts):
            rec, found = _attempt(t, A, params, r)
            log.append(rec)
            if found:
                return SolveResult(found[0], found[1], found[2], log)
        raise SolveFailed(log)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for start in range(0, attempts, workers):
            batch = range(start, min(start + workers, attempts))
            outcomes = list(pool.map(_attempt, *zip(*[(t, A, params, r) for r in batch])))
            for rec, found in outcomes:
                log.append(rec)
                if found:
                    return SolveResult(found[0], found[1], found[2], log)
    raise SolveFailed(log)
