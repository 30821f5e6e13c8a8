"""Grids, cells, cubes and configurations.

Cells are tuples of 0-based coordinates. Axes are numbered from 0. Cell
indices are mixed-radix and row-major (axis 0 varies slowest), so a
configuration's bit set dumps identically across runs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Literal, Sequence

import numpy as np

Cell = tuple[int, ...]

MAX_CELLS = 2**34


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GridShape:
    """The grid [a_1] x ... x [a_d]."""

    sides: tuple[int, ...]

    def __post_init__(self):
        sides = tuple(int(a) for a in self.sides)
        object.__setattr__(self, "sides", sides)
        if len(sides) < 1:
            raise ValueError("a grid needs at least one axis")
        if any(a < 1 for a in sides):
            raise ValueError(f"side lengths must be >= 1, got {sides}")
        if math.prod(sides) > MAX_CELLS:
            raise ValueError(f"grid {sides} has more than 2^34 cells")

    @classmethod
    def uniform(cls, n: int, d: int) -> GridShape:
        return cls((n,) * d)

    @classmethod
    def hypercube(cls, d: int) -> GridShape:
        return cls((2,) * d)

    @property
    def d(self) -> int:
        return len(self.sides)

    @property
    def n_cells(self) -> int:
        return math.prod(self.sides)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out = []
        acc = 1
        for a in reversed(self.sides):
            out.append(acc)
            acc *= a
        return tuple(reversed(out))

    @property
    def is_hypercube(self) -> bool:
        return all(a == 2 for a in self.sides)

    def contains(self, cell: Sequence[int]) -> bool:
        return len(cell) == self.d and all(0 <= c < a for c, a in zip(cell, self.sides))

    def check_cell(self, cell: Sequence[int]) -> Cell:
        cell = tuple(int(c) for c in cell)
        if not self.contains(cell):
            raise ValueError(f"cell {cell} is outside grid {self.sides}")
        return cell

    def index(self, cell: Sequence[int]) -> int:
        return sum(c * s for c, s in zip(self.check_cell(cell), self.strides))

    def cell(self, index: int) -> Cell:
        if not 0 <= index < self.n_cells:
            raise ValueError(f"index {index} out of range")
        out = []
        for s in self.strides:
            q, index = divmod(index, s)
            out.append(q)
        return tuple(out)

    def full_cube(self) -> Cube:
        return Cube(self, (0,) * self.d, tuple(a - 1 for a in self.sides))

    def __str__(self) -> str:
        return "x".join(f"[{a}]" for a in self.sides)


@dataclass(frozen=True)
class Cube:
    """Axis-aligned box ``lo..hi`` (inclusive) inside a grid."""

    shape: GridShape
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(int(x) for x in self.lo)
        hi = tuple(int(x) for x in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not (self.shape.contains(lo) and self.shape.contains(hi)):
            raise ValueError(f"cube corners {lo}, {hi} outside {self.shape}")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"cube corners out of order: {lo} > {hi}")

    @classmethod
    def point(cls, shape: GridShape, cell: Sequence[int]) -> Cube:
        cell = shape.check_cell(cell)
        return cls(shape, cell, cell)

    @classmethod
    def from_pattern(cls, pattern: str) -> Cube:
        """Build a cube of [2]^d from a string over {0,1,*}."""
        shape = GridShape.hypercube(len(pattern))
        lo = tuple(0 if ch == "*" else int(ch) for ch in pattern)
        hi = tuple(1 if ch == "*" else int(ch) for ch in pattern)
        return cls(shape, lo, hi)

    @property
    def dim(self) -> int:
        return sum(b - a for a, b in zip(self.lo, self.hi))

    @property
    def free_axes(self) -> tuple[int, ...]:
        return tuple(i for i, (a, b) in enumerate(zip(self.lo, self.hi)) if a < b)

    @property
    def fixed_axes(self) -> tuple[int, ...]:
        return tuple(i for i, (a, b) in enumerate(zip(self.lo, self.hi)) if a == b)

    @property
    def is_hypercube(self) -> bool:
        """True when every side has length 1 or 2, i.e. the cube is a copy of [2]^k."""
        return all(b - a <= 1 for a, b in zip(self.lo, self.hi))

    @property
    def n_cells(self) -> int:
        return math.prod(b - a + 1 for a, b in zip(self.lo, self.hi))

    def contains(self, cell: Sequence[int]) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, cell, self.hi))

    def contains_cube(self, other: Cube) -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def cells(self) -> Iterator[Cell]:
        return itertools.product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    @property
    def mask(self) -> int:
        return _cube_mask(self)

    def pattern(self) -> str:
        """The {0,1,*} string of a cube in [2]^d."""
        if not self.shape.is_hypercube:
            raise ValueError("pattern notation only applies inside [2]^d")
        return "".join("*" if a < b else str(a) for a, b in zip(self.lo, self.hi))

    def __str__(self) -> str:
        parts = [str(a) if a == b else f"{a}..{b}" for a, b in zip(self.lo, self.hi)]
        return "(" + ",".join(parts) + ")"


@lru_cache(maxsize=65536)
def _cube_mask(q: Cube) -> int:
    if q.n_cells <= 64:
        strides = q.shape.strides
        m = 0
        for cell in q.cells():
            m |= 1 << sum(c * s for c, s in zip(cell, strides))
        return m
    arr = np.zeros(q.shape.sides, dtype=bool)
    arr[tuple(slice(a, b + 1) for a, b in zip(q.lo, q.hi))] = True
    return Configuration.from_array(q.shape, arr).bits


def _same_shape(b: Cube, c: Cube) -> None:
    if b.shape != c.shape:
        raise ShapeMismatchError(f"cubes live in different grids: {b.shape} vs {c.shape}")


def cube_dim(q: Cube) -> int:
    return q.dim


def cube_delta_and_distance(b: Cube, c: Cube) -> tuple[frozenset[int], int]:
    """Return Delta(b, c) and the graph distance between the two cubes.

    Delta is the set of axes on which the coordinate intervals are disjoint.
    The distance is the sum of the interval gaps.
    """
    _same_shape(b, c)
    axes = []
    dist = 0
    for i, (l1, h1, l2, h2) in enumerate(zip(b.lo, b.hi, c.lo, c.hi)):
        gap = max(0, l2 - h1, l1 - h2)
        if gap:
            axes.append(i)
            dist += gap
    return frozenset(axes), dist


def delta(b: Cube, c: Cube) -> frozenset[int]:
    return cube_delta_and_distance(b, c)[0]


def distance(b: Cube, c: Cube) -> int:
    return cube_delta_and_distance(b, c)[1]


def span_union(s: Cube, t: Cube) -> Cube:
    """Smallest cube containing both arguments."""
    _same_shape(s, t)
    lo = tuple(min(a, b) for a, b in zip(s.lo, t.lo))
    hi = tuple(max(a, b) for a, b in zip(s.hi, t.hi))
    return Cube(s.shape, lo, hi)


def subcube_family(
    q: Cube,
    axes: Iterable[int],
    mode: Literal["constant-on", "constant-off"] = "constant-on",
) -> list[Cube]:
    """Q<axes> (``constant-on``) or Q[axes] (``constant-off``).

    Q<axes> holds the maximal subcubes of q that are constant on every
    axis in ``axes``. Q[axes] holds those constant on every other free axis
    of q, so their free axes are exactly ``axes``.
    """
    axes = sorted(set(axes))
    free = q.free_axes
    for i in axes:
        if i not in free:
            raise ValueError(f"axis {i} is not free in cube {q}")
    if mode == "constant-on":
        fixed = axes
    elif mode == "constant-off":
        fixed = [i for i in free if i not in axes]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    for values in itertools.product(*(range(q.lo[i], q.hi[i] + 1) for i in fixed)):
        lo, hi = list(q.lo), list(q.hi)
        for i, v in zip(fixed, values):
            lo[i] = hi[i] = v
        out.append(Cube(q.shape, tuple(lo), tuple(hi)))
    return out


@dataclass(frozen=True)
class Configuration:
    """A set of cells of a grid, stored as an integer bit set."""

    shape: GridShape
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.shape.n_cells:
            raise ValueError("bit set does not fit the grid")

    @classmethod
    def from_cells(cls, shape: GridShape, cells: Iterable[Sequence[int]]) -> Configuration:
        bits = 0
        for c in cells:
            bits |= 1 << shape.index(c)
        return cls(shape, bits)

    @classmethod
    def from_indices(cls, shape: GridShape, indices: Iterable[int]) -> Configuration:
        bits = 0
        for i in indices:
            bits |= 1 << int(i)
        return cls(shape, bits)

    @classmethod
    def from_array(cls, shape: GridShape, arr: np.ndarray) -> Configuration:
        flat = np.asarray(arr, dtype=bool).reshape(-1)
        if flat.size != shape.n_cells:
            raise ValueError("array size does not match the grid")
        packed = np.packbits(flat, bitorder="little").tobytes()
        return cls(shape, int.from_bytes(packed, "little"))

    @classmethod
    def full(cls, shape: GridShape) -> Configuration:
        return cls(shape, (1 << shape.n_cells) - 1)

    def to_array(self) -> np.ndarray:
        n = self.shape.n_cells
        raw = np.frombuffer(self.bits.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[:n].astype(bool).reshape(self.shape.sides)

    def indices(self) -> Iterator[int]:
        b = self.bits
        while b:
            low = b & -b
            yield low.bit_length() - 1
            b ^= low

    def cells(self) -> Iterator[Cell]:
        return (self.shape.cell(i) for i in self.indices())

    def __contains__(self, cell: Sequence[int]) -> bool:
        return bool(self.bits >> self.shape.index(cell) & 1)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __or__(self, other: Configuration) -> Configuration:
        self._check(other)
        return Configuration(self.shape, self.bits | other.bits)

    def __and__(self, other: Configuration) -> Configuration:
        self._check(other)
        return Configuration(self.shape, self.bits & other.bits)

    def __sub__(self, other: Configuration) -> Configuration:
        self._check(other)
        return Configuration(self.shape, self.bits & ~other.bits)

    def issubset(self, other: Configuration) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def restrict(self, q: Cube) -> Configuration:
        if q.shape != self.shape:
            raise ShapeMismatchError("cube and configuration live in different grids")
        return Configuration(self.shape, self.bits & q.mask)

    def _check(self, other: Configuration) -> None:
        if other.shape != self.shape:
            raise ShapeMismatchError("configurations live in different grids")

    def __str__(self) -> str:
        return "{" + ", ".join(format_cell(c) for c in self.cells()) + "}"


def format_cell(cell: Sequence[int]) -> str:
    return "(" + ",".join(str(c) for c in cell) + ")"
