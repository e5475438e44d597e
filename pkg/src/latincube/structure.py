"""3-cubes, swaps, and the block structure of cubes isomorphic to the Boolean cube.

In pulled coordinates (I, J, K) of a :class:`StructuredCube` every 3-cube is
``{I, I^D} x {J, J^D} x {K, K^D}`` for some nonzero D, and each block or
line family is a level set of an XOR of pulled coordinates:

=====================  =================  ===========
family                 key                kind
=====================  =================  ===========
row block              I ^ K              block
column block           J ^ K              block
file block             I ^ J              block
symbol block           I ^ J ^ K          block
symbol-row block       J ^ K              block
symbol-column block    I ^ K              block
symbol-file block      I ^ J              block
transversal-set        (I ^ K, J ^ K)     line
symbol-set (row)       (i, J ^ K)         line
symbol-set (column)    (j, I ^ K)         line
symbol-set (file)      (k, I ^ J)         line
=====================  =================  ===========

The tests check these formulas against the defining conditions directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from .cube import Cell, LatinCube, StructuredCube, permute_cube, random_quadruple, recover_structure


class PatternError(ValueError):
    """The eight cells do not carry the alternating two-symbol pattern."""


@dataclass(frozen=True, order=True)
class ThreeCube:
    """Eight cells {i1, i2} x {j1, j2} x {k1, k2}, stored canonically (i1 < i2 etc.)."""

    i1: int
    i2: int
    j1: int
    j2: int
    k1: int
    k2: int

    def __post_init__(self):
        if not (self.i1 < self.i2 and self.j1 < self.j2 and self.k1 < self.k2):
            raise ValueError(f"non-canonical 3-cube {self!r}")

    @classmethod
    def from_corners(cls, a: Cell, b: Cell) -> "ThreeCube":
        (i1, j1, k1), (i2, j2, k2) = a, b
        if i1 == i2 or j1 == j2 or k1 == k2:
            raise ValueError("corners must differ in every coordinate")
        return cls(min(i1, i2), max(i1, i2), min(j1, j2), max(j1, j2), min(k1, k2), max(k1, k2))

    def cells(self) -> list[Cell]:
        return [(i, j, k) for i in (self.i1, self.i2) for j in (self.j1, self.j2) for k in (self.k1, self.k2)]

    def even_cells(self) -> list[Cell]:
        """Cells holding the symbol of (i1, j1, k1)."""
        return [c for c, p in zip(self.cells(), _PARITY) if not p]

    def odd_cells(self) -> list[Cell]:
        return [c for c, p in zip(self.cells(), _PARITY) if p]

    def __contains__(self, cell) -> bool:
        i, j, k = cell
        return i in (self.i1, self.i2) and j in (self.j1, self.j2) and k in (self.k1, self.k2)


_PARITY = [(a + b + c) % 2 for a in (0, 1) for b in (0, 1) for c in (0, 1)]


def pattern_symbols(entries: np.ndarray, tc: ThreeCube) -> tuple[int, int] | None:
    """Return (x1, x2) if tc carries the 3-cube pattern in ``entries``, else None."""
    even = {int(entries[c]) for c in tc.even_cells()}
    odd = {int(entries[c]) for c in tc.odd_cells()}
    if len(even) != 1 or len(odd) != 1 or even == odd:
        return None
    return even.pop(), odd.pop()


def is_three_cube(cube: LatinCube, tc: ThreeCube) -> bool:
    return pattern_symbols(cube.entries, tc) is not None


def three_cube_from_pair(cube: LatinCube, cell: Cell, j2: int) -> ThreeCube:
    """The unique 3-cube of ``cube`` containing ``cell`` and (i1, j2, k1)."""
    i1, j1, k1 = cell
    if j2 == j1:
        raise ValueError("j2 must differ from the cell's column index")
    L = cube.entries
    x1 = L[i1, j1, k1]
    x2 = L[i1, j2, k1]
    # column C_{j2,k1} holds x1 in row layer i2; file F_{i1,j1} holds x2 in file layer k2
    i2 = int(cube.row_index_of[j2, k1, x1])
    k2 = int(cube.file_index_of[i1, j1, x2])
    tc = ThreeCube.from_corners((i1, j1, k1), (i2, j2, k2))
    if pattern_symbols(L, tc) is None:
        raise PatternError(f"no 3-cube through {cell} and column layer {j2}")
    return tc


def three_cubes_through(cube: LatinCube, cell: Cell) -> list[ThreeCube]:
    return [three_cube_from_pair(cube, cell, j2) for j2 in range(cube.n) if j2 != cell[1]]


def all_three_cubes(cube: StructuredCube) -> list[ThreeCube]:
    """Every 3-cube of sigma(B); there are n^3 (n - 1) / 8 of them."""
    found = set()
    n = cube.n
    for i, j, k in itertools.product(range(n), repeat=3):
        found.update(three_cubes_through(cube, (i, j, k)))
    return sorted(found)


def swap(entries: np.ndarray, tc: ThreeCube) -> None:
    """Exchange the two symbols of ``tc`` in place."""
    symbols = pattern_symbols(entries, tc)
    if symbols is None:
        raise PatternError(f"{tc} does not carry the 3-cube pattern")
    x1, x2 = symbols
    for c in tc.even_cells():
        entries[c] = x2
    for c in tc.odd_cells():
        entries[c] = x1


def swapped(cube: LatinCube, tc: ThreeCube) -> LatinCube:
    entries = cube.entries.copy()
    swap(entries, tc)
    return LatinCube(entries)


def intersect(a: ThreeCube, b: ThreeCube) -> int:
    return len(set(a.cells()) & set(b.cells()))


# ---------------------------------------------------------------------------
# blocks and lines


class BlockFamily(str, Enum):
    ROW_LAYER = "row-layer"
    COLUMN_LAYER = "column-layer"
    FILE_LAYER = "file-layer"
    ROW_BLOCK = "row-block"
    COLUMN_BLOCK = "column-block"
    FILE_BLOCK = "file-block"
    SYMBOL_BLOCK = "symbol-block"
    SYMBOL_ROW_BLOCK = "symbol-row-block"
    SYMBOL_COLUMN_BLOCK = "symbol-column-block"
    SYMBOL_FILE_BLOCK = "symbol-file-block"


class LineFamily(str, Enum):
    ROW = "row"
    COLUMN = "column"
    FILE = "file"
    TRANSVERSAL = "transversal-set"
    SYMBOL_SET_ROW = "symbol-set-row"
    SYMBOL_SET_COLUMN = "symbol-set-column"
    SYMBOL_SET_FILE = "symbol-set-file"


class BlockId(NamedTuple):
    family: BlockFamily
    index: int


class LineId(NamedTuple):
    family: LineFamily
    a: int
    b: int


def block_of(cube: StructuredCube, family: BlockFamily, cell: Cell) -> BlockId:
    i, j, k = cell
    I, J, K = cube.pulled(cell)
    F = BlockFamily
    index = {
        F.ROW_LAYER: i,
        F.COLUMN_LAYER: j,
        F.FILE_LAYER: k,
        F.ROW_BLOCK: I ^ K,
        F.COLUMN_BLOCK: J ^ K,
        F.FILE_BLOCK: I ^ J,
        F.SYMBOL_BLOCK: I ^ J ^ K,
        F.SYMBOL_ROW_BLOCK: J ^ K,
        F.SYMBOL_COLUMN_BLOCK: I ^ K,
        F.SYMBOL_FILE_BLOCK: I ^ J,
    }[family]
    return BlockId(family, index)


def line_of(cube: StructuredCube, family: LineFamily, cell: Cell) -> LineId:
    i, j, k = cell
    I, J, K = cube.pulled(cell)
    F = LineFamily
    a, b = {
        F.ROW: (i, k),
        F.COLUMN: (j, k),
        F.FILE: (i, j),
        F.TRANSVERSAL: (I ^ K, J ^ K),
        F.SYMBOL_SET_ROW: (i, J ^ K),
        F.SYMBOL_SET_COLUMN: (j, I ^ K),
        F.SYMBOL_SET_FILE: (k, I ^ J),
    }[family]
    return LineId(family, a, b)


def blocks_of(cube: StructuredCube, cell: Cell) -> list[BlockId]:
    return [block_of(cube, f, cell) for f in BlockFamily]


def lines_of(cube: StructuredCube, cell: Cell) -> list[LineId]:
    return [line_of(cube, f, cell) for f in LineFamily]


def _level_set(mask: np.ndarray) -> frozenset[Cell]:
    return frozenset((int(i), int(j), int(k)) for i, j, k in zip(*np.nonzero(mask)))


def _pulled_grids(cube: StructuredCube):
    I = cube.pull_i[:, None, None]
    J = cube.pull_j[None, :, None]
    K = cube.pull_k[None, None, :]
    return I, J, K


def block_members(cube: StructuredCube, block: BlockId) -> frozenset[Cell]:
    family, c = BlockFamily(block.family), block.index
    n = cube.n
    if not 0 <= c < n:
        raise ValueError(f"block index {c} out of range")
    I, J, K = _pulled_grids(cube)
    ar = np.arange(n)
    F = BlockFamily
    key = {
        F.ROW_LAYER: ar[:, None, None] + 0 * ar[None, :, None] + 0 * ar[None, None, :],
        F.COLUMN_LAYER: 0 * ar[:, None, None] + ar[None, :, None] + 0 * ar[None, None, :],
        F.FILE_LAYER: 0 * ar[:, None, None] + 0 * ar[None, :, None] + ar[None, None, :],
        F.ROW_BLOCK: I ^ K ^ 0 * J,
        F.COLUMN_BLOCK: J ^ K ^ 0 * I,
        F.FILE_BLOCK: I ^ J ^ 0 * K,
        F.SYMBOL_BLOCK: I ^ J ^ K,
        F.SYMBOL_ROW_BLOCK: J ^ K ^ 0 * I,
        F.SYMBOL_COLUMN_BLOCK: I ^ K ^ 0 * J,
        F.SYMBOL_FILE_BLOCK: I ^ J ^ 0 * K,
    }[family]
    return _level_set(key == c)


def transversal_set(cube: StructuredCube, c: int, d: int) -> frozenset[Cell]:
    """Cells in row block ``c`` and symbol-row block ``d``."""
    n = cube.n
    if not (0 <= c < n and 0 <= d < n):
        raise ValueError("transversal-set index out of range")
    I, J, K = _pulled_grids(cube)
    return _level_set(((I ^ K) == c) & ((J ^ K) == d))


def symbol_set(cube: StructuredCube, family: str, layer: int, block: int) -> frozenset[Cell]:
    """Intersection of a symbol-{row,column,file} block with a layer of the same kind."""
    n = cube.n
    if not (0 <= layer < n and 0 <= block < n):
        raise ValueError("symbol-set index out of range")
    BF = BlockFamily
    layer_family, block_family = {
        "row": (BF.ROW_LAYER, BF.SYMBOL_ROW_BLOCK),
        "column": (BF.COLUMN_LAYER, BF.SYMBOL_COLUMN_BLOCK),
        "file": (BF.FILE_LAYER, BF.SYMBOL_FILE_BLOCK),
    }[family]
    return block_members(cube, BlockId(layer_family, layer)) & block_members(cube, BlockId(block_family, block))


def line_members(cube: StructuredCube, line: LineId) -> frozenset[Cell]:
    family, a, b = LineFamily(line.family), line.a, line.b
    n = cube.n
    F = LineFamily
    if family is F.ROW:
        return frozenset((a, j, b) for j in range(n))
    if family is F.COLUMN:
        return frozenset((i, a, b) for i in range(n))
    if family is F.FILE:
        return frozenset((a, b, k) for k in range(n))
    if family is F.TRANSVERSAL:
        return transversal_set(cube, a, b)
    return symbol_set(cube, family.value.rsplit("-", 1)[1], a, b)


# ---------------------------------------------------------------------------
# property checks


@dataclass(frozen=True)
class PropertyReport:
    prop: int
    passed: bool
    counterexample: str | None = None

    def __str__(self):
        line = f"P{self.prop} {'pass' if self.passed else 'fail'}"
        return line if self.counterexample is None else f"{line} {self.counterexample}"


class OrderTooLarge(ValueError):
    """The requested exhaustive check is too expensive at this order."""


# exhaustive-mode order limits per property
EXHAUSTIVE_LIMIT = {1: 8, 2: 8, 3: 8, 4: 16, 5: 8, 6: 8, 7: 32, 8: 32, 9: 128, 10: 32}


def _layer_squares(entries: np.ndarray):
    n = entries.shape[0]
    for axis, name in ((0, "row layer"), (1, "column layer"), (2, "file layer")):
        for x in range(n):
            yield f"{name} {x + 1}", np.take(entries, x, axis=axis)


def _four_cycles_at(sq: np.ndarray, r: int, c: int) -> int:
    """Number of 4-cycles of the square through cell (r, c), by brute force."""
    count = 0
    n = sq.shape[0]
    for r2 in range(n):
        if r2 == r:
            continue
        for c2 in range(n):
            if c2 != c and sq[r, c] == sq[r2, c2] and sq[r, c2] == sq[r2, c]:
                count += 1
    return count


def _four_cycles(sq: np.ndarray) -> list[frozenset]:
    n = sq.shape[0]
    out = []
    for r1, r2 in itertools.combinations(range(n), 2):
        for c1, c2 in itertools.combinations(range(n), 2):
            if sq[r1, c1] == sq[r2, c2] and sq[r1, c2] == sq[r2, c1]:
                out.append(frozenset({(r1, c1), (r1, c2), (r2, c1), (r2, c2)}))
    return out


def _is_box_pattern(L: np.ndarray, a: Cell, b: Cell) -> bool:
    return pattern_symbols(L, ThreeCube.from_corners(a, b)) is not None


def _opposite_corners(L: np.ndarray, cell: Cell) -> list[Cell]:
    """Corners (i2, j2, k2) whose box with ``cell`` carries the 3-cube pattern."""
    n = L.shape[0]
    i, j, k = cell
    a = np.array([x for x in range(n) if x != i])[:, None, None]
    b = np.array([x for x in range(n) if x != j])[None, :, None]
    c = np.array([x for x in range(n) if x != k])[None, None, :]
    x1 = L[i, j, k]
    x2 = L[i, b, k]
    ok = (L[a, b, k] == x1) & (L[i, b, c] == x1) & (L[a, j, c] == x1)
    ok &= (L[a, j, k] == x2) & (L[i, j, c] == x2) & (L[a, b, c] == x2) & (x1 != x2)
    ia, ib, ic = np.nonzero(ok)
    return [(int(a[x, 0, 0]), int(b[0, y, 0]), int(c[0, 0, z])) for x, y, z in zip(ia, ib, ic)]


def _brute_three_cubes(L: np.ndarray) -> list[ThreeCube]:
    n = L.shape[0]
    out = []
    for i1, i2 in itertools.combinations(range(n), 2):
        for j1, j2 in itertools.combinations(range(n), 2):
            for k1, k2 in itertools.combinations(range(n), 2):
                tc = ThreeCube(i1, i2, j1, j2, k1, k2)
                if pattern_symbols(L, tc) is not None:
                    out.append(tc)
    return out


def _fail(prop: int, msg: str) -> PropertyReport:
    return PropertyReport(prop, False, msg)


def _check_p1(L):
    n = L.shape[0]
    for name, sq in _layer_squares(L):
        for r in range(n):
            for c in range(n):
                got = _four_cycles_at(sq, r, c)
                if got != n - 1:
                    return _fail(1, f"{name} cell ({r + 1},{c + 1}) in {got} 4-cycles")
    return PropertyReport(1, True)


def _check_p2(L):
    n = L.shape[0]
    for name, sq in _layer_squares(L):
        for r in range(n):
            for c1, c2 in itertools.permutations(range(n), 2):
                partners = [r2 for r2 in range(n) if r2 != r and sq[r, c1] == sq[r2, c2] and sq[r, c2] == sq[r2, c1]]
                if len(partners) != 1:
                    return _fail(2, f"{name} cells ({r + 1},{c1 + 1}),({r + 1},{c2 + 1}) complete to {len(partners)} 4-cycles")
    return PropertyReport(2, True)


def _check_p3(L):
    for name, sq in _layer_squares(L):
        cycles = _four_cycles(sq)
        for a, b in itertools.combinations(cycles, 2):
            size = len(a & b)
            if size not in (0, 1, 4):
                return _fail(3, f"{name} two 4-cycles meet in {size} cells")
    return PropertyReport(3, True)


def _check_p4(L, cells=None):
    n = L.shape[0]
    cells = cells if cells is not None else itertools.product(range(n), repeat=3)
    for cell in cells:
        got = len(_opposite_corners(L, cell))
        if got != n - 1:
            return _fail(4, f"cell {tuple(x + 1 for x in cell)} in {got} 3-cubes")
    return PropertyReport(4, True)


def _check_p5(L, cells=None):
    n = L.shape[0]
    cells = cells if cells is not None else itertools.product(range(n), repeat=3)
    for c1 in cells:
        partners = _opposite_corners(L, c1)
        for c2, c3 in itertools.combinations(partners, 2):
            if all(x != y for x, y in zip(c2, c3)) and not _is_box_pattern(L, c2, c3):
                return _fail(5, f"cells {c2} and {c3} share no 3-cube")
    return PropertyReport(5, True)


def _check_p6(L):
    cubes = _brute_three_cubes(L)
    for a, b in itertools.combinations(cubes, 2):
        size = intersect(a, b)
        if size not in (0, 1, 8):
            return _fail(6, f"{a} and {b} meet in {size} cells")
    return PropertyReport(6, True)


def _check_p7(L):
    n = L.shape[0]
    # lines along axis 0 (columns), 1 (rows), 2 (files); the other two axes index the line
    for axis in range(3):
        lines = np.moveaxis(L, axis, -1)  # lines[a, b] is the line at (a, b)
        same = np.all(lines[:, :, None, None, :] == lines[None, None, :, :, :], axis=-1)
        for a, b in itertools.product(range(n), repeat=2):
            rel = same[a, b]
            if not np.all(rel.sum(axis=0) == 1) or not np.all(rel.sum(axis=1) == 1):
                return _fail(7, f"line {a + 1},{b + 1} along axis {axis} has no unique partner")
    return PropertyReport(7, True)


def _check_p8(L):
    n = L.shape[0]
    for axis in range(3):
        layers = np.moveaxis(L, axis, 0)
        for s in range(n):
            where = layers[0] == s
            for x in range(n):
                if len(set(layers[x][where].tolist())) != 1:
                    return _fail(8, f"symbol {s + 1} positions of layer 1 are not monochromatic in layer {x + 1} (axis {axis})")
    return PropertyReport(8, True)


def _check_p9(L, samples, rng):
    from .cube import validate_latin

    if not validate_latin(LatinCube(L)).ok:
        return _fail(9, "precondition: input is not a Latin cube")
    for _ in range(samples):
        sigma = random_quadruple(L.shape[0], rng)
        if not validate_latin(permute_cube(LatinCube(L), sigma)).ok:
            return _fail(9, f"permuted cube not Latin under {sigma}")
    return PropertyReport(9, True)


def _check_p10(L, samples, rng):
    n = L.shape[0]
    for _ in range(samples):
        sigma = random_quadruple(n, rng)
        M = permute_cube(LatinCube(L), sigma).entries
        cells = [tuple(int(x) for x in rng.integers(0, n, 3)) for _ in range(8)]
        for sub in (_check_p4(M, cells), _check_p5(M, cells), _check_p7(M), _check_p8(M)):
            if not sub.passed:
                return _fail(10, f"after {sigma}: {sub}")
    return PropertyReport(10, True)


def check_property(cube: LatinCube, prop: int, *, sampled: bool = False, samples: int = 20, seed=0) -> PropertyReport:
    """Check one of the ten structural properties on ``cube``.

    P1-P3 are checked on every layer-square, P4-P8 on the cube itself and
    P9-P10 by random permutation closure. Properties 1-8 and 10 presuppose a
    cube isomorphic to the Boolean cube; other inputs fail with a
    ``precondition`` note. Exhaustive checks refuse orders above
    ``EXHAUSTIVE_LIMIT`` unless ``sampled`` is set, in which case P4 looks at
    ``samples`` random cells and the other properties run unchanged.
    """
    if prop not in range(1, 11):
        raise ValueError(f"unknown property P{prop}")
    L = cube.entries
    n = cube.n
    rng = np.random.default_rng(seed)
    if n > EXHAUSTIVE_LIMIT[prop] and not (sampled and prop == 4):
        raise OrderTooLarge(f"P{prop} exhaustive check limited to n <= {EXHAUSTIVE_LIMIT[prop]}")
    if prop == 9:
        return _check_p9(L, samples, rng)
    if recover_structure(cube) is None:
        return _fail(prop, "precondition: cube is not isomorphic to the Boolean cube")
    if prop == 4 and sampled:
        cells = [tuple(int(x) for x in rng.integers(0, n, 3)) for _ in range(samples)]
        return _check_p4(L, cells)
    if prop == 10:
        return _check_p10(L, samples, rng)
    return {1: _check_p1, 2: _check_p2, 3: _check_p3, 4: _check_p4, 5: _check_p5, 6: _check_p6, 7: _check_p7, 8: _check_p8}[prop](L)


def property_report(cube: LatinCube, props: Iterable[int] = range(1, 11), **kw) -> str:
    return "\n".join(str(check_property(cube, p, **kw)) for p in props) + "\n"
