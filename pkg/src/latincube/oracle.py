"""Exact avoidability by depth-first search, for small orders."""

from __future__ import annotations

from dataclasses import dataclass

from .cube import LatinCube
from .forbidden import ForbiddenCube

DEFAULT_BUDGET = 10**8
ENUMERATION_MAX_N = 4


@dataclass(frozen=True)
class Avoidable:
    witness: LatinCube
    nodes: int


@dataclass(frozen=True)
class Unavoidable:
    nodes: int


@dataclass(frozen=True)
class BudgetExceeded:
    nodes: int


class _Search:
    """Cells filled in lexicographic order; line masks are bitsets of used symbols."""

    def __init__(self, A: ForbiddenCube, budget: int):
        n = self.n = A.n
        self.full = (1 << n) - 1
        self.budget = budget
        self.nodes = 0
        self.cells = [(i, j, k) for i in range(n) for j in range(n) for k in range(n)]
        self.banned = [sum(1 << s for s in A[c]) for c in self.cells]
        self.row = [0] * (n * n)  # R_{i,k}
        self.col = [0] * (n * n)  # C_{j,k}
        self.fil = [0] * (n * n)  # F_{i,j}
        self.value = [-1] * len(self.cells)

    def candidates(self, idx: int) -> int:
        i, j, k = self.cells[idx]
        n = self.n
        used = self.row[i * n + k] | self.col[j * n + k] | self.fil[i * n + j]
        return self.full & ~used & ~self.banned[idx]

    def place(self, idx: int, s: int) -> None:
        i, j, k = self.cells[idx]
        n, bit = self.n, 1 << s
        self.row[i * n + k] |= bit
        self.col[j * n + k] |= bit
        self.fil[i * n + j] |= bit
        self.value[idx] = s

    def unplace(self, idx: int, s: int) -> None:
        i, j, k = self.cells[idx]
        n, mask = self.n, ~(1 << s)
        self.row[i * n + k] &= mask
        self.col[j * n + k] &= mask
        self.fil[i * n + j] &= mask
        self.value[idx] = -1

    def touched_ok(self, idx: int) -> bool:
        """Every unfilled cell on the three lines through ``idx`` still has a candidate."""
        i, j, k = self.cells[idx]
        n = self.n
        for j2 in range(j + 1, n):
            if not self.candidates((i * n + j2) * n + k):
                return False
        for i2 in range(i + 1, n):
            if not self.candidates((i2 * n + j) * n + k):
                return False
        for k2 in range(k + 1, n):
            if not self.candidates((i * n + j) * n + k2):
                return False
        return True

    def solutions(self, idx: int = 0):
        """Yield each completed assignment; raises _OutOfBudget when the budget is spent."""
        if idx == len(self.cells):
            yield list(self.value)
            return
        cand = self.candidates(idx)
        while cand:
            low = cand & -cand
            s = low.bit_length() - 1
            cand ^= low
            self.nodes += 1
            if self.nodes > self.budget:
                raise _OutOfBudget
            self.place(idx, s)
            if self.touched_ok(idx):
                yield from self.solutions(idx + 1)
            self.unplace(idx, s)

    def to_cube(self, values) -> LatinCube:
        n = self.n
        return LatinCube([[[values[(i * n + j) * n + k] for k in range(n)] for j in range(n)] for i in range(n)])


class _OutOfBudget(Exception):
    pass


def _check_first_cell(search: _Search) -> bool:
    # a cell with no candidate at all, anywhere, settles the question up front
    return all(search.candidates(idx) for idx in range(len(search.cells)))


def decide_avoidable(A: ForbiddenCube, node_budget: int = DEFAULT_BUDGET):
    """Return Avoidable(witness), Unavoidable or BudgetExceeded."""
    search = _Search(A, node_budget)
    if not _check_first_cell(search):
        return Unavoidable(0)
    try:
        for values in search.solutions():
            return Avoidable(search.to_cube(values), search.nodes)
    except _OutOfBudget:
        return BudgetExceeded(search.nodes)
    return Unavoidable(search.nodes)


def enumerate_avoiders(A: ForbiddenCube, limit: int, node_budget: int = DEFAULT_BUDGET) -> list[LatinCube]:
    """All avoiding cubes in lexicographic order of flattened entries, up to ``limit``."""
    if A.n > ENUMERATION_MAX_N:
        raise ValueError(f"enumeration limited to n <= {ENUMERATION_MAX_N}")
    search = _Search(A, node_budget)
    out: list[LatinCube] = []
    if limit <= 0 or not _check_first_cell(search):
        return out
    try:
        for values in search.solutions():
            out.append(search.to_cube(values))
            if len(out) >= limit:
                break
    except _OutOfBudget:
        raise RuntimeError(f"node budget {node_budget} exhausted during enumeration") from None
    return out
