import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bootperc import bootstrap as bs
from bootperc import oracle
from bootperc.lattice import Configuration, Cube, GridShape, distance, span_union

from conftest import random_config


def naive_closure(shape: GridShape, cells, r=2) -> set:
    """Synchronous rounds over explicit neighbour lists."""
    cur = set(map(tuple, cells))
    while True:
        new = set(cur)
        for i in range(shape.n_cells):
            c = shape.cell(i)
            if c in cur:
                continue
            k = 0
            for ax in range(shape.d):
                for step in (-1, 1):
                    nb = list(c)
                    nb[ax] += step
                    if 0 <= nb[ax] < shape.sides[ax] and tuple(nb) in cur:
                        k += 1
            if k >= r:
                new.add(c)
        if new == cur:
            return cur
        cur = new


def cfg(shape, *cells):
    return Configuration.from_cells(shape, cells)


# --- closure ----------------------------------------------------------------


def test_closure_examples():
    sq = GridShape.hypercube(2)
    res = bs.closure(sq, cfg(sq, (0, 0), (1, 1)))
    assert len(res.infected) == 4 and res.components == (sq.full_cube(),)
    g = GridShape.uniform(5, 2)
    res = bs.closure(g, cfg(g, (0, 0), (0, 2)))
    assert sorted(res.infected.cells()) == [(0, 0), (0, 1), (0, 2)]
    assert res.components == (Cube(g, (0, 0), (0, 2)),)
    empty = bs.closure(g, Configuration(g, 0))
    assert len(empty.infected) == 0 and empty.components == ()


def test_closure_cubes_examples():
    sq = GridShape.hypercube(2)
    assert bs.closure_cubes(sq, cfg(sq, (0, 0), (1, 1))).components == (sq.full_cube(),)
    line = GridShape((9,))
    res = bs.closure_cubes(line, cfg(line, (0,), (4,)))
    assert len(res.components) == 2
    assert distance(*res.components) == 4


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6, 7])
def test_closure_cubes_agrees_with_cellwise(d, rng):
    g = GridShape.hypercube(d)
    trials = 10_000 // 6
    for _ in range(trials):
        a = random_config(rng, g, rng.choice([0.05, 0.1, 0.2, 0.3]))
        assert bs.closure_cubes(g, a).infected == bs.closure(g, a).infected


@pytest.mark.parametrize("sides", [(5, 5), (4, 3, 3), (6, 2, 2, 2), (3, 3, 3, 3)])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_closure_matches_naive_rounds(sides, r, rng):
    g = GridShape(sides)
    for _ in range(25):
        a = random_config(rng, g, 0.15 * r)
        assert set(bs.closure(g, a, r).infected.cells()) == naive_closure(g, a.cells(), r)


def test_closure_components_are_far_apart(rng):
    g = GridShape((7, 6, 5))
    for _ in range(100):
        a = random_config(rng, g, 0.04)
        res = bs.closure(g, a)
        assert res.components == bs.closure_cubes(g, a).components
        for s, t in itertools.combinations(res.components, 2):
            assert distance(s, t) >= 3
        bits = 0
        for c in res.components:
            bits |= c.mask
        assert bits == res.infected.bits


def test_closure_batch_matches_queue(rng):
    g = GridShape((4, 4, 3))
    x = np.array([[rng.random() < 0.15 for _ in range(g.n_cells)] for _ in range(200)])
    batch = bs.closure_batch(g, x, chunk=64)
    for row, out in zip(x, batch):
        a = Configuration.from_array(g, row.reshape(g.sides))
        assert Configuration.from_array(g, out.reshape(g.sides)) == bs.closure(g, a).infected


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**36 - 1), st.integers(0, 2**36 - 1))
def test_monotone_and_idempotent(x, y):
    g = GridShape((6, 6))
    a, b = Configuration(g, x & (2**36 - 1) & 0x1111_2222_4), Configuration(g, y & 0x0841_0208_1)
    ca = bs.closure(g, a).infected
    assert ca.issubset(bs.closure(g, a | b).infected)
    assert bs.closure(g, ca).infected == ca


# --- spanning ---------------------------------------------------------------


def test_spans_examples():
    sq = GridShape.hypercube(2)
    assert bs.spans(sq.full_cube(), cfg(sq, (0, 0), (1, 1)))
    h4 = GridShape.hypercube(4)
    assert bs.spans(h4.full_cube(), cfg(h4, (0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1)))


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_too_few_points_never_span(ell):
    q = GridShape.hypercube(2 * ell).full_cube()
    for k in range(1, ell + 1):
        for combo in itertools.combinations(range(q.shape.n_cells), k):
            assert not bs.spans(q, Configuration.from_indices(q.shape, combo))


def test_spans_on_a_general_box():
    g = GridShape((4, 3))
    good = cfg(g, (0, 0), (1, 1), (3, 1), (0, 2))
    assert bs.spans(g.full_cube(), good)
    assert len(naive_closure(g, good.cells())) == 12
    # (3,2) sits at distance 3 from the square spanned by the first two
    assert not bs.spans(g.full_cube(), cfg(g, (0, 0), (1, 1), (3, 2)))


def test_sequential_examples():
    sq = GridShape.hypercube(2)
    seq = bs.sequential_spanning(sq.full_cube(), cfg(sq, (0, 0), (1, 1)))
    assert set(seq.order) == {(0, 0), (1, 1)}
    assert [c.dim for c in seq.prefix_cubes] == [0, 2]


def test_every_spanning_triple_of_the_4_cube_is_sequential():
    q = GridShape.hypercube(4).full_cube()
    n = 0
    for combo in itertools.combinations(range(16), 3):
        a = Configuration.from_indices(q.shape, combo)
        if bs.spans(q, a):
            n += 1
            seq = bs.sequential_spanning(q, a)
            assert seq is not None
            for j, (pt, cube) in enumerate(zip(seq.order[1:], seq.prefix_cubes)):
                assert cube.dim == 2 * j
                assert distance(Cube.point(q.shape, pt), cube) == 2
    assert n == 144


def test_greedy_agrees_with_backtracking_on_all_4_sets_of_6_cube():
    table = oracle.local_table(6)
    found = 0
    for combo in itertools.combinations(range(64), 4):
        pts = [table[i] for i in combo]
        greedy = bs.hc_sequential(pts)
        assert (greedy is None) == (bs.hc_sequential_backtrack(pts) is None)
        found += greedy is not None
    assert found == 116160


def test_final_pairs_example():
    h4 = GridShape.hypercube(4)
    a = cfg(h4, (0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1))
    pairs, singles = bs.final_pairs_and_elements(h4.full_cube(), a)
    assert pairs == [frozenset({0, 1}), frozenset({2, 3})] and singles == []
    assert bs.final_pairs_and_elements(h4.full_cube(), cfg(h4, (0, 0, 0, 0))) == ([], [])


def test_endings_examples():
    sq = GridShape.hypercube(2)
    assert bs.endings(sq.full_cube(), cfg(sq, (0, 0), (1, 1))) == [frozenset({0, 1})]


def _final_pairs_by_definition(points, dim):
    """Pairs {j,k} such that the points span a cube of Q<j,k> with exactly one point left over."""
    full = (1 << dim) - 1
    out = set()
    if not bs.hc_spans(points, full):
        return out
    for j, k in itertools.combinations(range(dim), 2):
        free = full & ~(1 << j) & ~(1 << k)
        for vj, vk in itertools.product((0, 1), repeat=2):
            base = (vj << j) | (vk << k)
            inside = [p for p in points if (p ^ base) & ~free == 0]
            if len(inside) == len(points) - 1 and bs.hc_spans([p ^ base for p in inside], free):
                out.add(frozenset({j, k}))
    return out


@pytest.mark.parametrize("dim,size", [(3, 3), (4, 3), (5, 4), (6, 4)])
def test_final_pair_structure(dim, size):
    """Final pairs are disjoint from each other and from final elements; one point off C leaves C spanned."""
    table = oracle.local_table(dim)
    full = (1 << dim) - 1
    combos = list(itertools.combinations(range(2**dim), size))
    if len(combos) > 40_000:
        combos = random.Random(dim).sample(combos, 40_000)
    for combo in combos:
        pts = [table[i] for i in combo]
        pairs, singles = bs.hc_final(pts, full)
        if not pairs and not singles:
            continue
        for p, q in itertools.combinations(pairs, 2):
            assert not p & q
        for s in singles:
            assert all(not s & p for p in pairs)
        if dim <= 5:
            assert pairs == _final_pairs_by_definition(pts, dim)
        seq = 2 * (size - 1) == dim and bs.hc_sequential(pts) is not None
        for pair in pairs:
            fixed = sum(1 << t for t in pair)
            for i, a in enumerate(pts):
                rest = pts[:i] + pts[i + 1 :]
                comps = bs.hc_closure(rest)
                if len(comps) == 1 and comps[0][0] == full & ~fixed and (a ^ comps[0][1]) & fixed:
                    if seq:
                        assert bs.hc_sequential(rest) is not None
                    break
            else:
                raise AssertionError(f"no witness for final pair {pair} of {pts}")


@pytest.mark.parametrize("ell", [2, 3])
def test_endings_strip_to_sequential_subcube(ell):
    dim = 2 * ell
    full = (1 << dim) - 1
    for pts, ends in oracle.sequential_sets(ell):
        pairs, _ = bs.hc_final(list(pts), full)
        assert ends <= pairs
        ends = sorted(ends, key=sorted)
        for p, q in itertools.combinations(ends, 2):
            assert not p & q
        m = len(ends)
        fixed = sum(1 << t for pair in ends for t in pair)
        ok = False
        for strip in itertools.permutations(range(len(pts)), m):
            rest = [v for i, v in enumerate(pts) if i not in strip]
            comps = bs.hc_closure(rest)
            if len(comps) != 1 or comps[0][0] & fixed or comps[0][0].bit_count() != dim - 2 * m:
                continue
            if len(rest) > 1 and bs.hc_sequential(rest) is None:
                continue
            base = comps[0][1]
            if all((pts[i] ^ base) & ~comps[0][0] == sum(1 << t for t in pair) for i, pair in zip(strip, ends)):
                ok = True
                break
        assert ok, (pts, ends)


# --- decompositions ---------------------------------------------------------


def test_decompose_examples():
    sq = GridShape.hypercube(2)
    d = bs.span_decompose(sq.full_cube(), cfg(sq, (0, 0), (1, 1)))
    assert (d.s, d.t) == (Cube.point(sq, (0, 0)), Cube.point(sq, (1, 1)))
    h4 = GridShape.hypercube(4)
    d = bs.span_decompose(h4.full_cube(), cfg(h4, (0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1)))
    assert d.s.dim == 2 and d.t.dim == 0
    with pytest.raises(ValueError):
        bs.span_decompose(h4.full_cube(), cfg(h4, (0, 0, 0, 0)))


def _check_decomposition(q, d):
    assert d.witness_s.bits & d.witness_t.bits == 0
    assert bs.closure_cubes(q.shape, d.witness_s).components == (d.s,)
    assert bs.closure_cubes(q.shape, d.witness_t).components == (d.t,)
    assert d.s.dim >= d.t.dim


def test_decompose_invariants(rng):
    for dim in (4, 5, 6):
        q = GridShape.hypercube(dim).full_cube()
        seen = 0
        while seen < 60:
            a = random_config(rng, q.shape, 0.12)
            if len(a) < 2 or not bs.spans(q, a):
                continue
            seen += 1
            d = bs.span_decompose(q, a)
            _check_decomposition(q, d)
            assert span_union(d.s, d.t) == q
            assert d.s.dim + d.t.dim >= q.dim - 2


def test_crossing_pair(rng):
    g = GridShape.hypercube(6)
    assert bs.find_crossing_pair(g, cfg(g, (0,) * 6), 1) is None
    seen = 0
    while seen < 40:
        a = random_config(rng, g, 0.1)
        if not bs.spans(g.full_cube(), a):
            continue
        seen += 1
        d = bs.find_crossing_pair(g, a, 3)
        assert d is not None
        _check_decomposition(g.full_cube(), d)
        assert d.t.dim <= d.s.dim < 3 <= span_union(d.s, d.t).dim
        assert distance(d.s, d.t) <= 2


# --- minimal percolating sets -----------------------------------------------


def test_min_set_examples():
    for n, d, size in [(2, 4, 3), (3, 2, 3), (2, 1, 2)]:
        g = GridShape.uniform(n, d)
        a = bs.min_percolating_set(g)
        assert len(a) == size
        assert bs.closure(g, a).infected.bits == (1 << g.n_cells) - 1
    with pytest.raises(ValueError):
        bs.min_percolating_set(GridShape.uniform(3, 2), r=3)


@pytest.mark.parametrize("n", range(2, 7))
def test_min_set_sizes_and_percolation(n):
    for d in range(1, 11):
        g = GridShape.uniform(n, d)
        a = bs.min_percolating_set(g)
        assert len(a) == bs.min_percolating_size(n, d) == math.ceil(d * (n - 1) / 2) + 1
        assert bs.spans(g.full_cube(), a)
        if g.n_cells <= 5000:
            assert bs.closure(g, a).infected.bits == (1 << g.n_cells) - 1


@pytest.mark.parametrize("dim", [4, 6])
def test_no_smaller_set_spans(dim):
    table = oracle.local_table(dim)
    full = (1 << dim) - 1
    for k in range(1, dim // 2 + 1):
        for combo in itertools.combinations(range(2**dim), k):
            assert not bs.hc_spans([table[i] for i in combo], full)
