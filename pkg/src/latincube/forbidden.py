"""Forbidden-symbol cubes: the (m,m,m,m) model, generators, conflicts and text I/O."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .cube import Cell, LatinCube, StructuredCube
from .structure import ThreeCube, pattern_symbols, PatternError


class ForbiddenFormatError(ValueError):
    def __init__(self, lineno: int, cause: str):
        super().__init__(f"line {lineno}: {cause}")
        self.lineno = lineno
        self.cause = cause


@dataclass(frozen=True)
class ForbiddenCube:
    """Per-cell forbidden symbol sets. Cells not in ``sets`` forbid nothing."""

    n: int
    m: int
    sets: Mapping[Cell, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("order must be positive")
        if self.m < 0:
            raise ValueError("declared m must be nonnegative")
        clean = {}
        for cell, symbols in self.sets.items():
            cell = tuple(int(x) for x in cell)
            if len(cell) != 3 or not all(0 <= x < self.n for x in cell):
                raise ValueError(f"cell {cell} out of range for n={self.n}")
            symbols = frozenset(int(s) for s in symbols)
            if any(not 0 <= s < self.n for s in symbols):
                raise ValueError(f"symbol out of range at cell {cell}")
            if symbols:
                clean[cell] = symbols
        object.__setattr__(self, "sets", dict(sorted(clean.items())))

    def __getitem__(self, cell: Cell) -> frozenset[int]:
        return self.sets.get(tuple(cell), frozenset())

    def __hash__(self):
        return hash((self.n, self.m, tuple(self.sets.items())))

    def __len__(self):
        """Number of (cell, symbol) pairs."""
        return sum(len(s) for s in self.sets.values())

    @cached_property
    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat arrays (i, j, k, symbol), one entry per forbidden pair."""
        rows = [(i, j, k, s) for (i, j, k), syms in self.sets.items() for s in sorted(syms)]
        arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
        return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


@dataclass(frozen=True)
class ForbiddenValidation:
    min_m: int
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _line_counts(A: ForbiddenCube):
    ci, cj, ck, cs = A.coo
    rows = Counter(zip(ci.tolist(), ck.tolist(), cs.tolist()))
    cols = Counter(zip(cj.tolist(), ck.tolist(), cs.tolist()))
    files = Counter(zip(ci.tolist(), cj.tolist(), cs.tolist()))
    return rows, cols, files


def validate_forbidden(A: ForbiddenCube) -> ForbiddenValidation:
    """Smallest m' making A an (m',m',m',m')-cube, plus breaches of the declared m."""
    rows, cols, files = _line_counts(A)
    sizes = {c: len(s) for c, s in A.sets.items()}
    min_m = max([0, *sizes.values(), *rows.values(), *cols.values(), *files.values()])
    out = []
    for c, size in sizes.items():
        if size > A.m:
            out.append(f"cell {_one(c)} has {size} symbols")
    for what, counts, names in (("row", rows, "ik"), ("column", cols, "jk"), ("file", files, "ij")):
        for (a, b, s), cnt in sorted(counts.items()):
            if cnt > A.m:
                out.append(f"symbol {s + 1} occurs {cnt} times in {what} {names[0]}={a + 1} {names[1]}={b + 1}")
    return ForbiddenValidation(min_m, tuple(out))


def _one(cell: Cell) -> str:
    return "(" + ",".join(str(x + 1) for x in cell) + ")"


def random_forbidden(n: int, m: int, density: float, seed=None) -> ForbiddenCube:
    """Greedy random (m,m,m,m)-cube.

    Candidate (cell, symbol) pairs are visited in seeded random order and kept
    unless they would breach a cap, until floor(density * m * n^3) pairs are
    kept or the candidates run out.
    """
    if not 0 <= density <= 1:
        raise ValueError("density must lie in [0, 1]")
    if m < 1:
        raise ValueError("m must be at least 1")
    target = int(density * m * n**3)
    rng = np.random.default_rng(seed)
    sets: dict[Cell, set[int]] = {}
    if target == 0:
        return ForbiddenCube(n, m, {})
    order = rng.permutation(n**4)
    ii, rest = np.divmod(order, n**3)
    jj, rest = np.divmod(rest, n**2)
    kk, ss = np.divmod(rest, n)
    cell_cnt: Counter = Counter()
    row_cnt: Counter = Counter()
    col_cnt: Counter = Counter()
    file_cnt: Counter = Counter()
    kept = 0
    for i, j, k, s in zip(ii.tolist(), jj.tolist(), kk.tolist(), ss.tolist()):
        rk, ck, fk = (i, k, s), (j, k, s), (i, j, s)
        if cell_cnt[i, j, k] >= m or row_cnt[rk] >= m or col_cnt[ck] >= m or file_cnt[fk] >= m:
            continue
        cell_cnt[i, j, k] += 1
        row_cnt[rk] += 1
        col_cnt[ck] += 1
        file_cnt[fk] += 1
        sets.setdefault((i, j, k), set()).add(s)
        kept += 1
        if kept >= target:
            break
    return ForbiddenCube(n, m, sets)


def unavoidable_half(n: int) -> ForbiddenCube:
    """Symbols 0..n/2-1 forbidden in the all-low and all-high n/2 subcubes."""
    if n < 2 or n % 2:
        raise ValueError("n must be even and positive")
    h = n // 2
    low = frozenset(range(h))
    sets = {}
    for i in range(h):
        for j in range(h):
            for k in range(h):
                sets[i, j, k] = low
                sets[i + h, j + h, k + h] = low
    return ForbiddenCube(n, h, sets)


def _check_order(L: LatinCube, A: ForbiddenCube):
    if L.n != A.n:
        raise ValueError(f"order mismatch: cube n={L.n}, forbidden n={A.n}")


def conflict_mask(L: LatinCube, A: ForbiddenCube) -> np.ndarray:
    """Boolean (n, n, n) array marking cells whose symbol is forbidden."""
    _check_order(L, A)
    ci, cj, ck, cs = A.coo
    hit = L.entries[ci, cj, ck] == cs
    mask = np.zeros((A.n,) * 3, dtype=bool)
    mask[ci[hit], cj[hit], ck[hit]] = True
    return mask


def conflicts(L: LatinCube, A: ForbiddenCube) -> frozenset[Cell]:
    mask = conflict_mask(L, A)
    return frozenset((int(i), int(j), int(k)) for i, j, k in zip(*np.nonzero(mask)))


def allowed(cube, A: ForbiddenCube, tc: ThreeCube) -> bool:
    """True iff swapping on ``tc`` leaves none of its eight cells in conflict.

    ``cube`` may be a LatinCube or a raw entries array; nothing is mutated.
    """
    entries = cube.entries if isinstance(cube, LatinCube) else cube
    symbols = pattern_symbols(entries, tc)
    if symbols is None:
        raise PatternError(f"{tc} does not carry the 3-cube pattern")
    x1, x2 = symbols
    sets = A.sets
    for c in tc.even_cells():
        if x2 in sets.get(c, ()):
            return False
    for c in tc.odd_cells():
        if x1 in sets.get(c, ()):
            return False
    return True


@dataclass(frozen=True)
class ConflictReport:
    conflict_cells: frozenset[Cell]
    max_row: int
    max_column: int
    max_file: int
    max_symbol_set: int
    max_transversal_set: int
    min_allowed: int

    @property
    def line_maxima(self) -> tuple[int, int, int, int, int]:
        return (self.max_row, self.max_column, self.max_file, self.max_symbol_set, self.max_transversal_set)

    def summary(self) -> str:
        return (
            f"rows={self.max_row} cols={self.max_column} files={self.max_file} "
            f"symbol_sets={self.max_symbol_set} transversal_sets={self.max_transversal_set} "
            f"min_allowed={self.min_allowed}"
        )


def _max_count(*keys: np.ndarray) -> int:
    if keys[0].size == 0:
        return 0
    stacked = np.stack(keys, axis=1)
    _, counts = np.unique(stacked, axis=0, return_counts=True)
    return int(counts.max())


def allowed_counts(cube: StructuredCube, A: ForbiddenCube) -> np.ndarray:
    """Number of allowed 3-cubes through each cell, as an (n, n, n) array.

    A forbidden pair (c, s) blocks exactly the 3-cube through c that would
    move s into c: in pulled coordinates its difference is X_c ^ pull(s).
    """
    _check_order(cube, A)
    n = cube.n
    ci, cj, ck, cs = A.coo
    I, J, K = cube.pull_i[ci], cube.pull_j[cj], cube.pull_k[ck]
    D = I ^ J ^ K ^ cube.pull_symbol[cs]
    keep = D != 0
    I, J, K, D = I[keep], J[keep], K[keep], D[keep]
    # canonical key of the blocked 3-cube in pulled coordinates
    key = ((D * n + np.minimum(I, I ^ D)) * n + np.minimum(J, J ^ D)) * n + np.minimum(K, K ^ D)
    key = np.unique(key)
    rest, k0 = np.divmod(key, n)
    rest, j0 = np.divmod(rest, n)
    d, i0 = np.divmod(rest, n)
    blocked = np.zeros((n, n, n), dtype=np.int64)
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                pi = i0 ^ (d * a)
                pj = j0 ^ (d * b)
                pk = k0 ^ (d * c)
                np.add.at(blocked, (cube.push_i[pi], cube.push_j[pj], cube.push_k[pk]), 1)
    return (n - 1) - blocked


def conflict_stats(cube: StructuredCube, A: ForbiddenCube) -> ConflictReport:
    mask = conflict_mask(cube, A)
    i, j, k = np.nonzero(mask)
    I, J, K = cube.pull_i[i], cube.pull_j[j], cube.pull_k[k]
    # symbol-set keys carry a family tag so the three families never merge
    fam = np.repeat(np.arange(3), i.size)
    ss_layer = np.concatenate([i, j, k])
    ss_block = np.concatenate([J ^ K, I ^ K, I ^ J])
    return ConflictReport(
        conflict_cells=frozenset(zip(i.tolist(), j.tolist(), k.tolist())),
        max_row=_max_count(i, k),
        max_column=_max_count(j, k),
        max_file=_max_count(i, j),
        max_symbol_set=_max_count(fam, ss_layer, ss_block),
        max_transversal_set=_max_count(I ^ K, J ^ K),
        min_allowed=int(allowed_counts(cube, A).min()),
    )


FORBIDDEN_HEADER = "latin-forbidden v1"


def serialize_forbidden(A: ForbiddenCube) -> str:
    lines = [FORBIDDEN_HEADER, f"n={A.n} m={A.m}"]
    for (i, j, k), syms in A.sets.items():
        lines.append(f"{i + 1} {j + 1} {k + 1}: " + ",".join(str(s + 1) for s in sorted(syms)))
    return "\n".join(lines) + "\n"


def _int_field(text: str, lineno: int, what: str) -> int:
    if not text.isdigit() or text.startswith("0"):
        raise ForbiddenFormatError(lineno, f"malformed {what} {text!r}")
    return int(text)


def parse_forbidden(text: str) -> ForbiddenCube:
    if not text.endswith("\n"):
        raise ForbiddenFormatError(text.count("\n") + 1, "missing trailing newline")
    lines = text[:-1].split("\n")
    if lines[0] != FORBIDDEN_HEADER:
        raise ForbiddenFormatError(1, "bad header")
    head = lines[1].split(" ") if len(lines) > 1 else []
    if len(head) != 2 or not head[0].startswith("n=") or not head[1].startswith("m="):
        raise ForbiddenFormatError(2, "bad header: expected n=<N> m=<M>")
    n = _int_field(head[0][2:], 2, "order")
    m = int(head[1][2:]) if head[1][2:].isdigit() else _int_field(head[1][2:], 2, "m")
    sets: dict[Cell, frozenset[int]] = {}
    prev = None
    for lineno, line in enumerate(lines[2:], start=3):
        coords, sep, syms = line.partition(": ")
        parts = coords.split(" ")
        if not sep or len(parts) != 3 or not syms:
            raise ForbiddenFormatError(lineno, "malformed line")
        cell = tuple(_int_field(p, lineno, "index") - 1 for p in parts)
        if any(x >= n for x in cell):
            raise ForbiddenFormatError(lineno, f"cell index out of range for n={n}")
        if cell in sets:
            raise ForbiddenFormatError(lineno, f"duplicate cell {_one(cell)}")
        if prev is not None and cell < prev:
            raise ForbiddenFormatError(lineno, "cells not in increasing order")
        values = [_int_field(s, lineno, "symbol") for s in syms.split(",")]
        if any(s > n for s in values):
            raise ForbiddenFormatError(lineno, f"symbol out of range for n={n}")
        if values != sorted(set(values)):
            raise ForbiddenFormatError(lineno, "symbols not strictly ascending")
        sets[cell] = frozenset(s - 1 for s in values)
        prev = cell
    A = ForbiddenCube(n, m, sets)
    check = validate_forbidden(A)
    if not check.ok:
        raise ForbiddenFormatError(2, f"cap m={m} violated: {check.violations[0]}")
    return A
