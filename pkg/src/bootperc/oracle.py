"""Brute-force ground truth on small hypercubes.

Every subset of the requested size is enumerated in colexicographic order
of cell indices and classified with the bootstrap kernels. No symmetry
reduction is used.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import mpmath

from bootperc import bootstrap as bs
from bootperc.exact import s_value
from bootperc.lattice import GridShape

ENUMERATION_GUARD = 10**9
OPT_IN_THRESHOLD = 10**8
CHECKPOINT_VERSION = "bootperc-enum/1"
COUNT_KEYS = (
    "spanning",
    "sequential",
    "final-pair-events",
    "final-element-events",
    "ending-events",
    "r-star",
    "y-star-style",
)


class GuardError(ValueError):
    pass


@dataclass
class EnumerationReport:
    dim: int
    set_size: int
    counts: dict[str, int]
    runtime: float
    enumerated_total: int

    @property
    def pstar(self) -> int:
        return self.counts["spanning"]

    @property
    def rstar(self) -> int:
        return self.counts["r-star"]

    @property
    def ystar(self) -> int:
        return self.counts["y-star-style"]

    def checksum(self) -> str:
        payload = json.dumps(
            {"dim": self.dim, "size": self.set_size, "counts": {k: str(v) for k, v in sorted(self.counts.items())}},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "size": self.set_size,
            "counts": {k: str(v) for k, v in self.counts.items()},
            "enumerated_total": str(self.enumerated_total),
            "checksum": self.checksum(),
        }


# ----------------------------------------------------------------------
# colex order


def colex_rank(combo: Sequence[int]) -> int:
    return sum(math.comb(c, i + 1) for i, c in enumerate(combo))


def colex_unrank(rank: int, k: int) -> list[int]:
    out = [0] * k
    for i in range(k - 1, -1, -1):
        c = i
        while math.comb(c + 1, i + 1) <= rank:
            c += 1
        out[i] = c
        rank -= math.comb(c, i + 1)
    return out


def colex_range(n: int, k: int, start: int, stop: int) -> Iterator[tuple[int, ...]]:
    """k-subsets of range(n) with colex rank in [start, stop)."""
    if k == 0:
        if start == 0 < stop:
            yield ()
        return
    c = colex_unrank(start, k)
    for _ in range(start, stop):
        yield tuple(c)
        i = 0
        while i < k - 1 and c[i] + 1 == c[i + 1]:
            i += 1
        c[i] += 1
        for j in range(i):
            c[j] = j
        if c[-1] >= n:
            return


# ----------------------------------------------------------------------
# classification


@lru_cache(maxsize=16)
def local_table(dim: int) -> tuple[int, ...]:
    """Row-major cell index of [2]^dim -> local point (bit t = coordinate on axis t)."""
    g = GridShape.hypercube(dim) if dim else None
    if g is None:
        return (0,)
    return tuple(sum(c << t for t, c in enumerate(g.cell(i))) for i in range(g.n_cells))


def classify(points: list[int], dim: int) -> dict[str, int]:
    """Indicator of each counted event for one subset of [2]^dim."""
    full = (1 << dim) - 1
    out = dict.fromkeys(COUNT_KEYS, 0)
    if not bs.hc_spans(points, full):
        return out
    out["spanning"] = 1
    minimal = 2 * (len(points) - 1) == dim
    if minimal and bs.hc_sequential(points) is not None:
        out["sequential"] = 1
    pairs, singles = bs.hc_final(points, full)
    out["final-pair-events"] = int(bool(pairs))
    out["final-element-events"] = int(bool(singles))
    out["r-star"] = int(bool(pairs) or (dim % 2 == 1 and bool(singles)))
    if minimal and bs.hc_endings(points, full):
        out["ending-events"] = 1
    if not bs.hc_spans_big_subcube(points, full):
        out["y-star-style"] = 1
    return out


def _count_range(dim: int, k: int, start: int, stop: int) -> dict[str, int]:
    table = local_table(dim)
    counts = dict.fromkeys(COUNT_KEYS, 0)
    for combo in colex_range(len(table), k, start, stop):
        ev = classify([table[i] for i in combo], dim)
        if ev["spanning"]:
            for key, v in ev.items():
                counts[key] += v
    return counts


def _run_shard(dim: int, k: int, start: int, stop: int, shard: int, checkpoint_dir: str | None, every: int) -> dict[str, int]:
    ckpt = Path(checkpoint_dir) / f"shard-{dim}-{k}-{shard}.json" if checkpoint_dir else None
    counts = dict.fromkeys(COUNT_KEYS, 0)
    pos = start
    if ckpt is not None and ckpt.exists():
        state = json.loads(ckpt.read_text())
        if state.get("version") != CHECKPOINT_VERSION or (state["dim"], state["size"], state["start"], state["stop"]) != (dim, k, start, stop):
            raise ValueError(f"checkpoint {ckpt} does not match this enumeration")
        pos = int(state["last_rank"])
        counts = {key: int(v) for key, v in state["counts"].items()}
    while pos < stop:
        hi = min(stop, pos + every)
        for key, v in _count_range(dim, k, pos, hi).items():
            counts[key] += v
        pos = hi
        if ckpt is not None:
            state = {
                "version": CHECKPOINT_VERSION,
                "dim": dim,
                "size": k,
                "shard": shard,
                "start": start,
                "stop": stop,
                "last_rank": pos,
                "counts": {key: str(v) for key, v in counts.items()},
            }
            tmp = ckpt.with_suffix(".tmp")
            tmp.write_text(json.dumps(state))
            os.replace(tmp, ckpt)
    return counts


def enumerate_counts(
    dim: int,
    set_size: int,
    shards: int = 1,
    workers: int = 1,
    checkpoint_dir: str | os.PathLike | None = None,
    checkpoint_every: int = 10**8,
    allow_large: bool = False,
) -> EnumerationReport:
    """Count spanning, sequential, final-pair, R*-type and Y*-type subsets of [2]^dim."""
    if not 0 <= dim <= 7:
        raise GuardError("enumeration supports dim <= 7")
    total = math.comb(2**dim, set_size)
    if total > ENUMERATION_GUARD:
        raise GuardError(f"C(2^{dim}, {set_size}) = {total} subsets exceeds the guard {ENUMERATION_GUARD}")
    if total > OPT_IN_THRESHOLD and not allow_large:
        raise GuardError(f"C(2^{dim}, {set_size}) = {total} subsets; pass allow_large to run it")
    t0 = time.perf_counter()
    shards = max(1, min(shards, total or 1))
    bounds = [total * i // shards for i in range(shards + 1)]
    ck = str(checkpoint_dir) if checkpoint_dir is not None else None
    if ck:
        Path(ck).mkdir(parents=True, exist_ok=True)
    jobs = [(dim, set_size, bounds[i], bounds[i + 1], i, ck, checkpoint_every) for i in range(shards)]
    if workers > 1 and shards > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_shard, *zip(*jobs)))
    else:
        parts = [_run_shard(*job) for job in jobs]
    counts = dict.fromkeys(COUNT_KEYS, 0)
    for part in parts:
        for key, v in part.items():
            counts[key] += v
    return EnumerationReport(dim, set_size, counts, time.perf_counter() - t0, total)


# ----------------------------------------------------------------------
# endings and their intersections


@lru_cache(maxsize=4)
def sequential_sets(ell: int) -> tuple[tuple[tuple[int, ...], frozenset[frozenset[int]]], ...]:
    """Every (l+1)-set that sequentially spans [2]^(2l), with its endings (local axes)."""
    dim = 2 * ell
    full = (1 << dim) - 1
    out = []
    table = local_table(dim)
    for combo in colex_range(len(table), ell + 1, 0, math.comb(len(table), ell + 1)):
        pts = [table[i] for i in combo]
        if bs.hc_spans(pts, full) and bs.hc_sequential(pts) is not None:
            out.append((tuple(pts), frozenset(bs.hc_endings(pts, full))))
    return tuple(out)


def njk_intersection(ell: int, pairs: Iterable[Iterable[int]]) -> int:
    """Number of sets in S(l) for which every given axis pair is an ending."""
    if ell < 1:
        raise ValueError("l must be >= 1")
    want = [frozenset(p) for p in pairs]
    if any(len(p) != 2 or not all(0 <= a < 2 * ell for a in p) for p in want):
        raise ValueError("pairs must be 2-sets of axes in [0, 2l)")
    return sum(1 for _, ends in sequential_sets(ell) if all(p in ends for p in want))


def njk_formula(ell: int, m: int) -> int:
    """2^(2m) (2^(2l-2m))^m |S(l-m)| for m disjoint pairs."""
    return 2 ** (2 * m) * (2 ** (2 * ell - 2 * m)) ** m * s_value(ell - m)


# ----------------------------------------------------------------------
# exact polynomials


@dataclass(frozen=True)
class SpanPolynomial:
    """sum_k c_k p^k (1-p)^(N-k) over the N = 2^dim cells of [2]^dim."""

    dim: int
    coefficients: tuple[int, ...]
    kind: str = "P"

    @property
    def n_cells(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, p):
        """Exact for Fraction or int ``p``; mpmath otherwise."""
        n = self.n_cells
        if isinstance(p, (Fraction, int)):
            p = Fraction(p)
            return sum(c * p**k * (1 - p) ** (n - k) for k, c in enumerate(self.coefficients) if c)
        p = mpmath.mpf(p)
        return mpmath.fsum(c * p**k * (1 - p) ** (n - k) for k, c in enumerate(self.coefficients) if c)

    def leading(self) -> tuple[int, int]:
        """(k, c_k) for the smallest k with c_k != 0."""
        for k, c in enumerate(self.coefficients):
            if c:
                return k, c
        return len(self.coefficients), 0


def _subset_polynomial(dim: int, event) -> tuple[int, ...]:
    if not 0 <= dim <= 4:
        raise GuardError("exact polynomials need dim <= 4")
    n = 2**dim
    table = local_table(dim)
    coeff = [0] * (n + 1)
    for mask in range(1, 1 << n):
        pts = [table[i] for i in range(n) if mask >> i & 1]
        if event(pts):
            coeff[len(pts)] += 1
    return tuple(coeff)


@lru_cache(maxsize=8)
def span_polynomial(dim: int) -> SpanPolynomial:
    full = (1 << dim) - 1
    return SpanPolynomial(dim, _subset_polynomial(dim, lambda pts: bs.hc_spans(pts, full)), "P")


@lru_cache(maxsize=8)
def r_event_polynomial(dim: int) -> SpanPolynomial:
    """Coefficients of the union of final-pair events (and final-element events in odd dims)."""
    full = (1 << dim) - 1

    def event(pts):
        pairs, singles = bs.hc_final(pts, full)
        return bool(pairs) or (dim % 2 == 1 and bool(singles))

    return SpanPolynomial(dim, _subset_polynomial(dim, event), "R")
