"""Latin cubes: storage, the Boolean cube, permutation action, validation, text I/O.

Coordinates are 0-based internally. A cube is indexed ``entries[i, j, k]``
where ``i`` is the row-layer index, ``j`` the column-layer index and ``k``
the file-layer index. Following the usual convention for cubes, a *column*
varies ``i``, a *row* varies ``j`` and a *file* varies ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

MAX_T = 7

Cell = tuple[int, int, int]


class CubeFormatError(ValueError):
    """Malformed cube text. ``lineno`` is 1-based."""

    def __init__(self, lineno: int, cause: str):
        super().__init__(f"line {lineno}: {cause}")
        self.lineno = lineno
        self.cause = cause


def exponent_of(n: int) -> int | None:
    """Return t with n == 2**t, or None when n is not a power of two."""
    if n >= 1 and n & (n - 1) == 0:
        return n.bit_length() - 1
    return None


class LatinCube:
    """An n x n x n array of symbols in [0, n).

    The container does not enforce the Latin property; use
    :func:`validate_latin` for that. Entries are read-only.
    """

    def __init__(self, entries):
        arr = np.array(entries, dtype=np.int64)
        if arr.ndim != 3 or not (arr.shape[0] == arr.shape[1] == arr.shape[2]):
            raise ValueError(f"entries must have shape (n, n, n), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("order must be at least 1")
        n = arr.shape[0]
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError(f"symbols must lie in [0, {n})")
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    def __getitem__(self, cell: Cell) -> int:
        return int(self._entries[cell])

    def __eq__(self, other):
        if not isinstance(other, LatinCube):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash(self._entries.tobytes())

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"

    def with_entries(self, entries) -> "LatinCube":
        return LatinCube(entries)

    # Inverse lookups: which coordinate of a line holds a given symbol.
    @cached_property
    def row_index_of(self) -> np.ndarray:
        """``row_index_of[j, k, s]`` is the i with L(i, j, k) == s (column C_{j,k})."""
        return _line_inverse(self._entries, axis=0)

    @cached_property
    def column_index_of(self) -> np.ndarray:
        """``column_index_of[i, k, s]`` is the j with L(i, j, k) == s (row R_{i,k})."""
        return _line_inverse(self._entries, axis=1)

    @cached_property
    def file_index_of(self) -> np.ndarray:
        """``file_index_of[i, j, s]`` is the k with L(i, j, k) == s (file F_{i,j})."""
        return _line_inverse(self._entries, axis=2)


def _line_inverse(entries: np.ndarray, axis: int) -> np.ndarray:
    n = entries.shape[0]
    moved = np.moveaxis(entries, axis, -1)
    inv = np.full(moved.shape, -1, dtype=np.int64)
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for pos in range(n):
        inv[a, b, moved[:, :, pos]] = pos
    return inv


@dataclass(frozen=True)
class PermutationQuadruple:
    """Permutations of row layers, column layers, file layers and symbols."""

    tau1: tuple[int, ...]
    tau2: tuple[int, ...]
    tau3: tuple[int, ...]
    tau4: tuple[int, ...]

    def __post_init__(self):
        n = len(self.tau1)
        for name in ("tau1", "tau2", "tau3", "tau4"):
            perm = tuple(int(x) for x in getattr(self, name))
            object.__setattr__(self, name, perm)
            if len(perm) != n or sorted(perm) != list(range(n)):
                raise ValueError(f"{name} is not a permutation of range({n})")

    @classmethod
    def identity(cls, n: int) -> "PermutationQuadruple":
        ident = tuple(range(n))
        return cls(ident, ident, ident, ident)

    @property
    def n(self) -> int:
        return len(self.tau1)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.asarray(p, dtype=np.int64) for p in (self.tau1, self.tau2, self.tau3, self.tau4))

    def inverses(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.argsort(p) for p in self.arrays())


def random_quadruple(n: int, seed=None) -> PermutationQuadruple:
    """Four independent uniform permutations of range(n).

    ``seed`` may be an int, None, or a :class:`numpy.random.Generator`.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    return PermutationQuadruple(*(tuple(rng.permutation(n)) for _ in range(4)))


def boolean_cube(t: int) -> LatinCube:
    """The cube of order 2**t whose entry at (i, j, k) is i ^ j ^ k."""
    if not isinstance(t, (int, np.integer)) or not 1 <= t <= MAX_T:
        raise ValueError(f"t must be an integer in [1, {MAX_T}], got {t!r}")
    idx = np.arange(1 << t)
    return LatinCube(idx[:, None, None] ^ idx[None, :, None] ^ idx[None, None, :])


class StructuredCube(LatinCube):
    """sigma(B): the Boolean cube of order 2**t acted on by a quadruple.

    ``L(i, j, k) = tau4(B(tau1^-1(i), tau2^-1(j), tau3^-1(k)))``. The
    *pulled* coordinates ``tau^-1`` put every cell back in Boolean position,
    where all block structure is an XOR level set.
    """

    def __init__(self, t: int, quadruple: PermutationQuadruple):
        n = 1 << t
        if quadruple.n != n:
            raise ValueError(f"quadruple has size {quadruple.n}, expected {n}")
        self.t = t
        self.quadruple = quadruple
        p1, p2, p3, p4 = quadruple.inverses()
        self.pull_i, self.pull_j, self.pull_k = p1, p2, p3
        self.tau4 = np.asarray(quadruple.tau4, dtype=np.int64)
        self.pull_symbol = p4
        pulled = p1[:, None, None] ^ p2[None, :, None] ^ p3[None, None, :]
        super().__init__(self.tau4[pulled])
        # push arrays: pulled value -> real index
        self.push_i, self.push_j, self.push_k = (np.asarray(p, dtype=np.int64) for p in quadruple.arrays()[:3])

    def pulled(self, cell: Cell) -> tuple[int, int, int]:
        i, j, k = cell
        return int(self.pull_i[i]), int(self.pull_j[j]), int(self.pull_k[k])

    def with_entries(self, entries) -> LatinCube:
        # modified entries are no longer sigma(B)
        return LatinCube(entries)

    def __repr__(self):
        return f"StructuredCube(t={self.t})"


def apply_quadruple(t: int, sigma: PermutationQuadruple) -> StructuredCube:
    if not 1 <= t <= MAX_T:
        raise ValueError(f"t must be in [1, {MAX_T}]")
    return StructuredCube(t, sigma)


def permute_cube(cube: LatinCube, sigma: PermutationQuadruple) -> LatinCube:
    """Permute layers and symbols of an arbitrary cube (same action as on B)."""
    if sigma.n != cube.n:
        raise ValueError("size mismatch")
    p1, p2, p3, _ = sigma.inverses()
    tau4 = sigma.arrays()[3]
    return LatinCube(tau4[cube.entries[np.ix_(p1, p2, p3)]])


def recover_structure(cube: LatinCube) -> StructuredCube | None:
    """Return a StructuredCube equal to ``cube`` if it is isomorphic to B, else None.

    Works by reading a binary operation off the k=0 layer (rows and columns
    labelled by their first entries) and checking that it is an elementary
    abelian 2-group which reproduces every entry of the cube.
    """
    n = cube.n
    t = exponent_of(n)
    if t is None or t < 1 or t > MAX_T:
        return None
    L = cube.entries
    col0, row0, file0 = L[:, 0, 0], L[0, :, 0], L[0, 0, :]
    e = int(L[0, 0, 0])
    by_first_i = np.empty(n, dtype=np.int64)
    by_first_j = np.empty(n, dtype=np.int64)
    if len(set(col0.tolist())) != n or len(set(row0.tolist())) != n or len(set(file0.tolist())) != n:
        return None
    by_first_i[col0] = np.arange(n)
    by_first_j[row0] = np.arange(n)
    # op[u, v] = L(i, j, 0) with L(i, 0, 0) = u and L(0, j, 0) = v
    op = L[by_first_i[:, None], by_first_j[None, :], 0]
    if not np.array_equal(op, op.T):
        return None
    if not np.all(op[np.arange(n), np.arange(n)] == e):
        return None
    if not np.all(op[e] == np.arange(n)):
        return None
    if not np.array_equal(op[op[:, :, None], np.arange(n)[None, None, :]],
                          op[np.arange(n)[:, None, None], op[None, :, :]]):
        return None
    expected = op[op[col0[:, None, None], row0[None, :, None]], file0[None, None, :]]
    if not np.array_equal(expected, L):
        return None
    # coordinates of each symbol over a greedily chosen basis
    label = {e: 0}
    for bit in range(t):
        g = next(s for s in range(n) if s not in label)
        for s, v in list(label.items()):
            label[int(op[s, g])] = v | (1 << bit)
    phi_inv = np.array([label[s] for s in range(n)], dtype=np.int64)
    pull_i, pull_j, pull_k = phi_inv[col0], phi_inv[row0], phi_inv[file0]
    tau4 = np.argsort(phi_inv)
    sigma = PermutationQuadruple(
        tuple(np.argsort(pull_i)), tuple(np.argsort(pull_j)), tuple(np.argsort(pull_k)), tuple(tau4)
    )
    structured = StructuredCube(t, sigma)
    return structured if structured == cube else None


class LineViolation(NamedTuple):
    kind: str  # "row" | "column" | "file"
    a: int
    b: int

    def __str__(self):
        names = {"row": ("i", "k"), "column": ("j", "k"), "file": ("i", "j")}
        x, y = names[self.kind]
        return f"{self.kind} {x}={self.a + 1} {y}={self.b + 1}"


@dataclass(frozen=True)
class LatinReport:
    violations: tuple[LineViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _bad_lines(entries: np.ndarray, axis: int) -> np.ndarray:
    """Boolean (n, n) map of lines along ``axis`` that are not permutations."""
    n = entries.shape[0]
    srt = np.sort(entries, axis=axis)
    shape = [1, 1, 1]
    shape[axis] = n
    target = np.arange(n).reshape(shape)
    return ~np.all(srt == target, axis=axis)


def validate_latin(cube: LatinCube) -> LatinReport:
    """Check every row, column and file; report each non-permutation line."""
    L = cube.entries
    out: list[LineViolation] = []
    # column C_{j,k} varies i; row R_{i,k} varies j; file F_{i,j} varies k
    for j, k in zip(*np.nonzero(_bad_lines(L, 0))):
        out.append(LineViolation("column", int(j), int(k)))
    for i, k in zip(*np.nonzero(_bad_lines(L, 1))):
        out.append(LineViolation("row", int(i), int(k)))
    for i, j in zip(*np.nonzero(_bad_lines(L, 2))):
        out.append(LineViolation("file", int(i), int(j)))
    return LatinReport(tuple(out))


CUBE_HEADER = "latin-cube v1"


def serialize_cube(cube: LatinCube) -> str:
    n = cube.n
    L = cube.entries + 1
    lines = [CUBE_HEADER, f"n={n}"]
    for k in range(n):
        lines.append(f"layer k={k + 1}")
        for i in range(n):
            lines.append(" ".join(str(int(x)) for x in L[i, :, k]))
    return "\n".join(lines) + "\n"


def parse_cube(text: str) -> LatinCube:
    if not text.endswith("\n"):
        raise CubeFormatError(text.count("\n") + 1, "missing trailing newline")
    lines = text[:-1].split("\n")
    if lines[0] != CUBE_HEADER:
        raise CubeFormatError(1, "bad header")
    if len(lines) < 2 or not lines[1].startswith("n="):
        raise CubeFormatError(2, "bad header: expected n=<N>")
    n = _parse_positive(lines[1][2:], 2, "bad header: expected n=<N>")
    expected = 2 + n * (n + 1)
    if len(lines) != expected:
        raise CubeFormatError(min(len(lines), expected) + 1, f"wrong count: expected {expected} lines, got {len(lines)}")
    entries = np.empty((n, n, n), dtype=np.int64)
    pos = 2
    for k in range(n):
        if lines[pos] != f"layer k={k + 1}":
            raise CubeFormatError(pos + 1, f"expected 'layer k={k + 1}'")
        pos += 1
        for i in range(n):
            fields = lines[pos].split(" ")
            if len(fields) != n:
                raise CubeFormatError(pos + 1, "row length mismatch")
            for j, field in enumerate(fields):
                s = _parse_positive(field, pos + 1, f"bad symbol {field!r}")
                if s > n:
                    raise CubeFormatError(pos + 1, f"out-of-range symbol {s}")
                entries[i, j, k] = s - 1
            pos += 1
    return LatinCube(entries)


def _parse_positive(field: str, lineno: int, cause: str) -> int:
    if not field.isdigit() or field.startswith("0"):
        raise CubeFormatError(lineno, cause)
    return int(field)

