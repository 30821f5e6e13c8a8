"""Bootstrap percolation engine.

Closures, spanning tests, final pairs and endings, S/T decompositions, the
cubes process and minimal percolating sets.

Hypercube kernels
-----------------
Operations on a copy of [2]^k are done on small integers. A point is a
``k``-bit integer whose bit ``t`` is its coordinate on the cube's ``t``-th
free axis. A subcube is a pair ``(free, base)`` of bit masks with
``base & free == 0``. The ``hc_*`` functions work in this form and are what
the oracle enumerations call directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from bootperc.lattice import Cell, Configuration, Cube, GridShape

HCube = tuple[int, int]


# ----------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class ClosureResult:
    components: tuple
    infected: Configuration


@dataclass(frozen=True)
class SpanningSequence:
    order: tuple[Cell, ...]
    prefix_cubes: tuple[Cube, ...]


@dataclass(frozen=True)
class Decomposition:
    s: Cube
    t: Cube
    witness_s: Configuration
    witness_t: Configuration


# ----------------------------------------------------------------------
# hypercube kernels


def hc_dist(a: HCube, b: HCube) -> int:
    return ((a[1] ^ b[1]) & ~(a[0] | b[0])).bit_count()


def hc_union(a: HCube, b: HCube) -> HCube:
    free = a[0] | b[0] | (a[1] ^ b[1])
    return free, a[1] & ~free


def hc_closure(points: Iterable[int]) -> list[HCube]:
    """Cubes of the two-neighbour closure of ``points``."""
    cubes: list[HCube] = []
    for p in points:
        cur = (0, p)
        merged = True
        while merged:
            merged = False
            for i, c in enumerate(cubes):
                if ((cur[1] ^ c[1]) & ~(cur[0] | c[0])).bit_count() <= 2:
                    cur = hc_union(cur, c)
                    del cubes[i]
                    merged = True
                    break
        cubes.append(cur)
    return cubes


def hc_spans(points: Sequence[int], full: int) -> bool:
    """Whether ``points`` span the cube with free mask ``full``."""
    if not points:
        return False
    comps = hc_closure(points)
    return len(comps) == 1 and comps[0][0] == full


def hc_sequential(points: Sequence[int]) -> list[int] | None:
    """Greedy spanning sequence, trying every start point.

    Returns the points in sequence order, or None when no start works.
    The final cube is ``[points]`` and has dimension ``2*(len(points)-1)``.
    """
    n = len(points)
    for s in range(n):
        cur = (0, points[s])
        order = [points[s]]
        left = [p for i, p in enumerate(points) if i != s]
        while left:
            for i, p in enumerate(left):
                if ((cur[1] ^ p) & ~cur[0]).bit_count() == 2:
                    cur = hc_union(cur, (0, p))
                    order.append(p)
                    del left[i]
                    break
            else:
                break
        if not left:
            return order
    return None


def hc_sequential_backtrack(points: Sequence[int]) -> list[int] | None:
    """Exhaustive search for a spanning sequence (reference for the greedy one)."""

    def extend(cur: HCube, order: list[int], left: list[int]) -> list[int] | None:
        if not left:
            return order
        for i, p in enumerate(left):
            if hc_dist(cur, (0, p)) == 2:
                found = extend(hc_union(cur, (0, p)), order + [p], left[:i] + left[i + 1 :])
                if found is not None:
                    return found
        return None

    for s, p in enumerate(points):
        found = extend((0, p), [p], list(points[:s]) + list(points[s + 1 :]))
        if found is not None:
            return found
    return None


def _axes_of(mask: int) -> tuple[int, ...]:
    return tuple(t for t in range(mask.bit_length()) if mask >> t & 1)


def hc_final(points: Sequence[int], full: int) -> tuple[set[frozenset[int]], set[frozenset[int]]]:
    """Final pairs and final elements of ``points`` in the cube ``full``.

    Removing the one vertex outside C must leave a set whose closure is C,
    so it is enough to drop each point in turn and look at the closure of
    the rest.
    """
    pairs: set[frozenset[int]] = set()
    singles: set[frozenset[int]] = set()
    if not hc_spans(points, full):
        return pairs, singles
    for i, a in enumerate(points):
        rest = points[:i] + points[i + 1 :]
        if not rest:
            continue
        comps = hc_closure(rest)
        if len(comps) != 1:
            continue
        free, base = comps[0]
        if (a ^ base) & ~free == 0:
            continue
        fixed = full & ~free
        k = fixed.bit_count()
        if k == 2:
            pairs.add(frozenset(_axes_of(fixed)))
        elif k == 1:
            singles.add(frozenset(_axes_of(fixed)))
    return pairs, singles


def hc_endings(points: Sequence[int], full: int) -> set[frozenset[int]]:
    """Endings of a set of ``dim/2 + 1`` points that spans ``full``."""
    out: set[frozenset[int]] = set()
    if 2 * (len(points) - 1) != full.bit_count() or not hc_spans(points, full):
        return out
    for i, a in enumerate(points):
        rest = points[:i] + points[i + 1 :]
        if not rest or hc_sequential(rest) is None:
            continue
        free, base = hc_closure(rest)[0]
        if (a ^ base) & ~free == 0:
            continue
        out.add(frozenset(_axes_of(full & ~free)))
    return out


def hc_spans_big_subcube(points: Sequence[int], full: int) -> bool:
    """Whether some subcube of codimension 1 or 2 is internally spanned."""
    dim = full.bit_count()
    n = len(points)
    for r in range(1, n + 1):
        for idx in combinations(range(n), r):
            sub = [points[i] for i in idx]
            comps = hc_closure(sub)
            if len(comps) != 1:
                continue
            free, base = comps[0]
            if dim - free.bit_count() not in (1, 2):
                continue
            inside = sum(1 for p in points if (p ^ base) & ~free == 0)
            if inside == r:
                return True
    return False


# ----------------------------------------------------------------------
# local coordinates of a hypercube inside a grid


def _require_hypercube(q: Cube) -> None:
    if not q.is_hypercube:
        raise ValueError(f"{q} is not a copy of [2]^k")


def local_points(q: Cube, a: Configuration) -> list[int]:
    """Points of ``a`` inside the hypercube ``q`` in local bit form."""
    free = q.free_axes
    out = []
    for cell in a.restrict(q).cells():
        v = 0
        for t, ax in enumerate(free):
            v |= (cell[ax] - q.lo[ax]) << t
        out.append(v)
    return out


def _to_cell(q: Cube, v: int) -> Cell:
    c = list(q.lo)
    for t, ax in enumerate(q.free_axes):
        c[ax] += v >> t & 1
    return tuple(c)


def _to_cube(q: Cube, hc: HCube) -> Cube:
    free, base = hc
    lo, hi = list(q.lo), list(q.lo)
    for t, ax in enumerate(q.free_axes):
        lo[ax] += base >> t & 1
        hi[ax] = lo[ax] + (free >> t & 1)
    return Cube(q.shape, tuple(lo), tuple(hi))


def _full_mask(q: Cube) -> int:
    return (1 << q.dim) - 1


def _global_axes(q: Cube, local: Iterable[frozenset[int]]) -> list[frozenset[int]]:
    free = q.free_axes
    return sorted((frozenset(free[t] for t in s) for s in local), key=sorted)


# ----------------------------------------------------------------------
# general cube algebra on raw corner tuples


def _gap(lo1, hi1, lo2, hi2) -> int:
    return sum(max(0, b1 - a2, b2 - a1) for b1, a1, b2, a2 in zip(lo1, hi1, lo2, hi2))


def _merge_all(boxes: list[tuple[tuple, tuple]]) -> list[tuple[tuple, tuple]]:
    out: list[tuple[tuple, tuple]] = []
    for lo, hi in boxes:
        changed = True
        while changed:
            changed = False
            for i, (l2, h2) in enumerate(out):
                if _gap(lo, hi, l2, h2) <= 2:
                    lo = tuple(map(min, lo, l2))
                    hi = tuple(map(max, hi, h2))
                    del out[i]
                    changed = True
                    break
        out.append((lo, hi))
    return out


# ----------------------------------------------------------------------
# closures


@lru_cache(maxsize=32)
def neighbour_table(shape: GridShape) -> np.ndarray:
    """(cells, 2d) array of neighbour indices, padded with ``cells``."""
    n = shape.n_cells
    idx = np.arange(n)
    coords = np.stack(np.unravel_index(idx, shape.sides), axis=1)
    cols = []
    for ax, (side, stride) in enumerate(zip(shape.sides, shape.strides)):
        up = np.where(coords[:, ax] + 1 < side, idx + stride, n)
        down = np.where(coords[:, ax] > 0, idx - stride, n)
        cols += [up, down]
    return np.stack(cols, axis=1)


@lru_cache(maxsize=32)
def _neighbour_lists(shape: GridShape) -> list[list[int]]:
    n = shape.n_cells
    return [[int(u) for u in row if u != n] for row in neighbour_table(shape)]


def _cells_to_bits(flags: bytearray | np.ndarray) -> int:
    packed = np.packbits(np.frombuffer(bytes(flags), dtype=np.uint8).astype(bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def closure(shape: GridShape, a: Configuration, r: int = 2) -> ClosureResult:
    """Least fixpoint of r-neighbour bootstrap percolation started from ``a``.

    For r = 2 the components are the maximal cubes of the closure. For other
    thresholds they are the connected components, as configurations.
    """
    if r < 1:
        raise ValueError("threshold r must be >= 1")
    if a.shape != shape:
        raise ValueError("configuration does not belong to this grid")
    nbrs = _neighbour_lists(shape)
    infected = bytearray(shape.n_cells)
    counts = [0] * shape.n_cells
    queue = list(a.indices())
    for v in queue:
        infected[v] = 1
    while queue:
        v = queue.pop()
        for u in nbrs[v]:
            if not infected[u]:
                counts[u] += 1
                if counts[u] >= r:
                    infected[u] = 1
                    queue.append(u)
    result = Configuration(shape, _cells_to_bits(infected))
    arr = np.frombuffer(bytes(infected), dtype=np.uint8).reshape(shape.sides)
    labels, k = ndimage.label(arr, structure=ndimage.generate_binary_structure(shape.d, 1))
    comps = []
    for sl, lab in zip(ndimage.find_objects(labels), range(1, k + 1)):
        lo = tuple(s.start for s in sl)
        hi = tuple(s.stop - 1 for s in sl)
        if r == 2:
            comps.append(Cube(shape, lo, hi))
        else:
            comps.append(Configuration.from_array(shape, labels == lab))
    if r == 2:
        comps.sort(key=lambda c: (c.lo, c.hi))
    return ClosureResult(tuple(comps), result)


def closure_cubes(shape: GridShape, a: Configuration) -> ClosureResult:
    """Two-neighbour closure by the cubes process."""
    if a.shape != shape:
        raise ValueError("configuration does not belong to this grid")
    if shape.is_hypercube:
        q = shape.full_cube()
        boxes = [_to_cube(q, h) for h in hc_closure(local_points(q, a))]
    else:
        boxes = [Cube(shape, lo, hi) for lo, hi in _merge_all([(c, c) for c in a.cells()])]
    boxes.sort(key=lambda c: (c.lo, c.hi))
    bits = 0
    for c in boxes:
        bits |= c.mask
    return ClosureResult(tuple(boxes), Configuration(shape, bits))


def closure_batch(shape: GridShape, x: np.ndarray, r: int = 2, chunk: int = 4096) -> np.ndarray:
    """Closures of many configurations at once.

    ``x`` has shape (samples, cells) with cells in row-major order. Rounds
    are synchronous, which reaches the same fixpoint as the work queue.
    """
    x = np.asarray(x, dtype=bool)
    nb = neighbour_table(shape)
    out = np.empty_like(x)
    for s in range(0, x.shape[0], chunk):
        cur = np.concatenate([x[s : s + chunk], np.zeros((min(chunk, x.shape[0] - s), 1), bool)], axis=1)
        active = np.arange(cur.shape[0])
        while active.size:
            sub = cur[active]
            cnt = np.zeros((sub.shape[0], shape.n_cells), np.int8)
            for j in range(nb.shape[1]):
                cnt += sub[:, nb[:, j]]
            new = sub[:, :-1] | (cnt >= r)
            grew = (new != sub[:, :-1]).any(axis=1)
            cur[active, :-1] = new
            active = active[grew]
        out[s : s + chunk] = cur[:, :-1]
    return out


# ----------------------------------------------------------------------
# spanning


def spans(q: Cube, a: Configuration) -> bool:
    """Whether ``a`` internally spans ``q``, i.e. ``[a ∩ q] = q``."""
    if q.is_hypercube:
        return hc_spans(local_points(q, a), _full_mask(q))
    boxes = _merge_all([(c, c) for c in a.restrict(q).cells()])
    return len(boxes) == 1 and boxes[0] == (q.lo, q.hi)


def sequential_spanning(q: Cube, a: Configuration, backtrack: bool = False) -> SpanningSequence | None:
    """A spanning sequence for ``q`` drawn from ``a ∩ q``, or None."""
    _require_hypercube(q)
    if q.dim % 2:
        raise ValueError("sequential spanning needs an even-dimensional cube")
    pts = local_points(q, a)
    if len(pts) != q.dim // 2 + 1:
        return None
    order = (hc_sequential_backtrack if backtrack else hc_sequential)(pts)
    if order is None:
        return None
    prefixes = []
    cur = (0, order[0])
    prefixes.append(_to_cube(q, cur))
    for p in order[1:]:
        cur = hc_union(cur, (0, p))
        prefixes.append(_to_cube(q, cur))
    return SpanningSequence(tuple(_to_cell(q, v) for v in order), tuple(prefixes))


def final_pairs_and_elements(q: Cube, a: Configuration) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
    """Final pairs {j, k} and final elements {i} of ``a`` in ``q`` (grid axes)."""
    _require_hypercube(q)
    pairs, singles = hc_final(local_points(q, a), _full_mask(q))
    return _global_axes(q, pairs), _global_axes(q, singles)


def endings(q: Cube, a: Configuration) -> list[frozenset[int]]:
    """Endings of ``a`` in ``q``; empty unless ``a ∩ q`` spans with dim/2 + 1 points."""
    _require_hypercube(q)
    return _global_axes(q, hc_endings(local_points(q, a), _full_mask(q)))


# ----------------------------------------------------------------------
# cubes process with a fixed merge order


def _ordered_process(cells: list[Cell]):
    """Merge the lexicographically first pair at distance <= 2 until none is left.

    Yields ``(x, y, merged)`` per merge, where ``x`` and ``y`` are
    ``(lo, hi, witness)`` triples with ``x`` before ``y``.
    """
    items = sorted(((c, c, frozenset([c])) for c in cells), key=lambda t: (t[0], t[1]))
    while True:
        hit = None
        for i in range(len(items)):
            lo1, hi1, _ = items[i]
            for j in range(i + 1, len(items)):
                lo2, hi2, _ = items[j]
                if _gap(lo1, hi1, lo2, hi2) <= 2:
                    hit = (i, j)
                    break
            if hit:
                break
        if hit is None:
            return
        i, j = hit
        x, y = items[i], items[j]
        merged = (tuple(map(min, x[0], y[0])), tuple(map(max, x[1], y[1])), x[2] | y[2])
        del items[j], items[i]
        items.append(merged)
        items.sort(key=lambda t: (t[0], t[1]))
        yield x, y, merged


def _decomposition(shape: GridShape, x, y) -> Decomposition:
    cx, cy = Cube(shape, x[0], x[1]), Cube(shape, y[0], y[1])
    if (cy.dim, tuple(-v for v in cy.lo)) > (cx.dim, tuple(-v for v in cx.lo)):
        x, y, cx, cy = y, x, cy, cx
    return Decomposition(
        cx,
        cy,
        Configuration.from_cells(shape, x[2]),
        Configuration.from_cells(shape, y[2]),
    )


def span_decompose(q: Cube, a: Configuration) -> Decomposition:
    """Cubes S, T disjointly spanned by ``a`` with ``[S ∪ T] = q``.

    They are the pair whose merge first produces ``q`` in the ordered cubes
    process; S is the larger one, ties going to the smaller lower corner.
    """
    if not spans(q, a):
        raise ValueError("configuration does not span the cube")
    for x, y, m in _ordered_process(list(a.restrict(q).cells())):
        if (m[0], m[1]) == (q.lo, q.hi):
            return _decomposition(q.shape, x, y)
    raise ValueError("a single vertex has no decomposition")


def find_crossing_pair(shape: GridShape, a: Configuration, ell: int) -> Decomposition | None:
    """The first merge of the ordered cubes process reaching dimension >= ell."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    for x, y, m in _ordered_process(list(a.cells())):
        if sum(h - l for l, h in zip(m[0], m[1])) >= ell:
            return _decomposition(shape, x, y)
    return None


# ----------------------------------------------------------------------
# minimal percolating sets


def min_percolating_size(n: int, d: int) -> int:
    return math.ceil(d * (n - 1) / 2) + 1


def min_percolating_set(shape: GridShape, r: int = 2) -> Configuration:
    """A percolating set of size ceil(d(n-1)/2) + 1 built as a staircase.

    Starting from the origin, each new point sits at distance exactly two
    from the current cube, stretching it by two units in total (one unit on
    two axes, or two on one). The last point stretches by one unit when
    d(n-1) is odd.
    """
    if r != 2:
        raise ValueError("only the two-neighbour rule is supported")
    n = shape.sides[0]
    if any(a != n for a in shape.sides):
        raise ValueError("min_percolating_set needs a uniform grid [n]^d")
    hi = [0] * shape.d
    steps = [ax for ax in range(shape.d) for _ in range(n - 1)]
    points = [tuple(hi)]
    for k in range(0, len(steps), 2):
        for ax in steps[k : k + 2]:
            hi[ax] += 1
        points.append(tuple(hi))
    return Configuration.from_cells(shape, points)
