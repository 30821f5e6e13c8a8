"""Seeded Monte Carlo estimates.

Sample ``s`` of replica ``r`` always uses the same uniforms (see
:mod:`bootperc.rng`), so results do not depend on chunking or on how
replicas are scheduled. A cell is infected when its uniform is below p;
thresholding one set of uniforms at several values of p gives the
monotone coupling.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import sparse
from statsmodels.stats.proportion import proportion_confint

from bootperc import bootstrap as bs
from bootperc.lattice import Configuration, Cube, GridShape
from bootperc.rng import Stream, uniforms

CHUNK = 1 << 15
SUBCUBE_GUARD = 10**6
CI_ALPHA = 0.01
SPARSE_LIMIT = 256


@dataclass(frozen=True)
class McConfig:
    shape: GridShape
    p: float
    samples: int
    base_seed: int = 0
    replicas: int = 1
    r: int = 2

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.replicas < 1:
            raise ValueError("need at least one replica")

    def replica_sizes(self) -> list[int]:
        q, rem = divmod(self.samples, self.replicas)
        return [q + (i < rem) for i in range(self.replicas)]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n: int
    successes: int | None = None
    seed: int = 0
    replicas: int = 1
    ci: tuple[float, float] | None = None

    def z_score(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.std_error


def bernoulli_estimate(successes: int, n: int, seed: int = 0, replicas: int = 1) -> McEstimate:
    mean = successes / n
    lo, hi = proportion_confint(successes, n, alpha=CI_ALPHA, method="wilson")
    return McEstimate(mean, math.sqrt(mean * (1 - mean) / n), n, successes, seed, replicas, (float(lo), float(hi)))


@dataclass(frozen=True)
class Target:
    """``full-grid``, ``cube`` (internal spanning of [2]^dim) or ``sequential-cube`` ([2]^(2l))."""

    kind: Literal["full-grid", "cube", "sequential-cube"]
    ell: int = 0

    @property
    def cube_dim(self) -> int:
        return 2 * self.ell if self.kind == "sequential-cube" else self.ell


def sample_configuration(shape: GridShape, p: float, stream: Stream) -> Configuration:
    """One sample of A ~ Bin(cells, p) from the next draw of ``stream``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    u = stream.next(1, shape.n_cells)[0]
    return Configuration.from_array(shape, u < p)


def _map_replicas(fn, sizes: list[int], threads: int):
    args = list(enumerate(sizes))
    if threads > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(lambda a: fn(*a), args))
    return [fn(*a) for a in args]


# ----------------------------------------------------------------------
# spanning probabilities


def _sample_grid(cfg: McConfig, target: Target) -> GridShape:
    if target.kind == "full-grid":
        return cfg.shape
    k = target.cube_dim
    if k > cfg.shape.d or any(a < 2 for a in cfg.shape.sides[:k]):
        raise ValueError(f"a [2]^{k} cube does not fit {cfg.shape}")
    return GridShape.hypercube(k) if k else GridShape((1,))


@lru_cache(maxsize=16)
def _local_of_index(grid: GridShape) -> np.ndarray:
    if grid.sides == (1,):
        return np.zeros(1, dtype=np.int64)
    return np.array([sum(c << t for t, c in enumerate(grid.cell(i))) for i in range(grid.n_cells)], dtype=np.int64)


def _indicators(x: np.ndarray, grid: GridShape, target: Target, r: int) -> np.ndarray:
    if target.kind in ("full-grid", "cube"):
        if x.shape[1] == 1:
            return x[:, 0].copy()
        if r == 2 and grid.is_hypercube and x.mean() * x.shape[1] <= SPARSE_LIMIT:
            # few points per sample: the cubes process beats the cellwise rounds
            loc = _local_of_index(grid)
            full = (1 << grid.d) - 1
            return np.array([bs.hc_spans([int(v) for v in loc[row]], full) for row in x], dtype=bool)
        return bs.closure_batch(grid, x, r).all(axis=1)
    ell = target.ell
    loc = _local_of_index(grid)
    hit = np.zeros(x.shape[0], dtype=bool)
    for s in np.flatnonzero(x.sum(axis=1) == ell + 1):
        pts = [int(v) for v in loc[x[s]]]
        hit[s] = bs.hc_spans(pts, (1 << 2 * ell) - 1) and bs.hc_sequential(pts) is not None
    return hit


def estimate_spanning(cfg: McConfig, target: Target, threads: int = 1) -> McEstimate:
    """Fraction of samples in which the target event occurs."""
    grid = _sample_grid(cfg, target)
    if target.kind != "full-grid" and cfg.r != 2:
        raise ValueError("cube targets use the two-neighbour rule")

    def replica(idx: int, n: int) -> int:
        hits = 0
        for start in range(0, n, CHUNK):
            u = uniforms(cfg.base_seed, idx, start, min(CHUNK, n - start), grid.n_cells)
            hits += int(_indicators(u < cfg.p, grid, target, cfg.r).sum())
        return hits

    hits = sum(_map_replicas(replica, cfg.replica_sizes(), threads))
    return bernoulli_estimate(hits, cfg.samples, cfg.base_seed, cfg.replicas)


def coupled_indicators(shape: GridShape, ps, samples: int, seed: int, r: int = 2) -> np.ndarray:
    """Full-grid percolation indicators, shape (samples, len(ps)), all from the same uniforms."""
    out = np.zeros((samples, len(ps)), dtype=bool)
    for start in range(0, samples, CHUNK):
        n = min(CHUNK, samples - start)
        u = uniforms(seed, 0, start, n, shape.n_cells)
        for j, p in enumerate(ps):
            out[start : start + n, j] = bs.closure_batch(shape, u < p, r).all(axis=1)
    return out


# ----------------------------------------------------------------------
# droplets


@dataclass(frozen=True)
class DropletStats:
    mean: McEstimate
    variance: McEstimate
    subcubes: int


def hypercube_subcubes(shape: GridShape, k: int) -> list[np.ndarray]:
    """Every copy of [2]^k in the grid, as arrays of cell indices ordered by local point."""
    count = sum(
        math.prod(shape.sides[a] - 1 for a in axes) * math.prod(shape.sides[a] for a in range(shape.d) if a not in axes)
        for axes in itertools.combinations(range(shape.d), k)
    )
    if count > SUBCUBE_GUARD:
        raise ValueError(f"{count} subcubes exceeds the guard {SUBCUBE_GUARD}")
    strides = np.array(shape.strides)
    out = []
    for axes in itertools.combinations(range(shape.d), k):
        offs = np.array([sum(((t >> j) & 1) * strides[a] for j, a in enumerate(axes)) for t in range(2**k)])
        ranges = [range(shape.sides[a] - 1) if a in axes else range(shape.sides[a]) for a in range(shape.d)]
        for lo in itertools.product(*ranges):
            out.append(int(np.dot(lo, strides)) + offs)
    return out


def droplet_stats(cfg: McConfig, ell: int, threads: int = 1) -> DropletStats:
    """Mean and variance of X(2l, p), the number of sequentially spanned [2]^(2l) subcubes."""
    shape = cfg.shape
    if 2 * ell > shape.d:
        raise ValueError("need 2l <= d")
    subs = hypercube_subcubes(shape, 2 * ell)
    rows = np.concatenate(subs)
    cols = np.repeat(np.arange(len(subs)), 2 ** (2 * ell))
    member = sparse.csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(shape.n_cells, len(subs)))
    full = (1 << 2 * ell) - 1

    def replica(idx: int, n: int) -> np.ndarray:
        counts = np.zeros(n, dtype=np.int64)
        for start in range(0, n, CHUNK):
            m = min(CHUNK, n - start)
            x = uniforms(cfg.base_seed, idx, start, m, shape.n_cells) < cfg.p
            per = np.asarray((sparse.csr_matrix(x.astype(np.int32)) @ member).todense())
            for s, c in zip(*np.nonzero(per == ell + 1)):
                pts = [t for t, cell in enumerate(subs[c]) if x[s, cell]]
                if bs.hc_spans(pts, full) and bs.hc_sequential(pts) is not None:
                    counts[start + s] += 1
        return counts

    values = np.concatenate(_map_replicas(replica, cfg.replica_sizes(), threads)).astype(np.float64)
    n = values.size
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if n > 1 else 0.0
    centred = values - mean
    m4 = float(np.mean(centred**4))
    var_se = math.sqrt(max(m4 - var**2, 0.0) / n)
    return DropletStats(
        McEstimate(mean, math.sqrt(var / n), n, None, cfg.base_seed, cfg.replicas),
        McEstimate(var, var_se, n, None, cfg.base_seed, cfg.replicas),
        len(subs),
    )


# ----------------------------------------------------------------------
# critical probability


@dataclass
class PcEstimate:
    p_hat: float
    bracket: tuple[float, float]
    theta: McEstimate
    probes: list[tuple[float, McEstimate]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _probe_seed(seed: int, probe: int) -> int:
    return int(np.random.SeedSequence([int(seed), 0x9C, probe]).generate_state(1, np.uint64)[0])


def pc_bisect(
    shape: GridShape,
    r: int = 2,
    target: float = 0.5,
    samples: int = 10_000,
    seed: int = 0,
    tol: float = 1e-3,
    max_probes: int = 40,
    threads: int = 1,
) -> PcEstimate:
    """Bisect on p for theta(p) = target, with a fresh seed per probe.

    The bracket shrinks while the 99% Wilson interval of a probe excludes the
    target. It stops once an interval covers the target (the noise floor at
    this sample size) or the bracket is narrower than ``tol``.
    """
    lo, hi = 0.0, 1.0
    probes: list[tuple[float, McEstimate]] = []
    for i in range(max_probes):
        p = (lo + hi) / 2
        est = estimate_spanning(McConfig(shape, p, samples, _probe_seed(seed, i), 1, r), Target("full-grid"), threads)
        probes.append((p, est))
        ci_lo, ci_hi = est.ci
        if ci_hi < target:
            lo = p
        elif ci_lo > target:
            hi = p
        else:
            break
        if hi - lo < tol:
            break
    found = []
    ordered = sorted(probes, key=lambda t: t[0])
    for (p1, e1), (p2, e2) in zip(ordered, ordered[1:]):
        if e1.mean - e2.mean > 3 * math.hypot(e1.std_error, e2.std_error):
            found.append(f"theta({p1:.6g}) = {e1.mean:.4f} exceeds theta({p2:.6g}) = {e2.mean:.4f}")
    for msg in found:
        warnings.warn(msg)
    p_hat, theta = min(probes, key=lambda t: abs(t[1].mean - target))
    return PcEstimate(p_hat, (lo, hi), theta, probes, found)


# ----------------------------------------------------------------------
# cube comparison


@dataclass(frozen=True)
class CubeComparison:
    a: McEstimate
    b: McEstimate
    ok: bool


def _as_grid(q: Cube | GridShape) -> GridShape:
    if isinstance(q, GridShape):
        return q
    return GridShape(tuple(h - l + 1 for l, h in zip(q.lo, q.hi)))


def coupled_cube_compare(qa: Cube | GridShape, qb: Cube | GridShape, p: float, samples: int, seed: int = 0) -> CubeComparison:
    """Internal-spanning probability of two cubes of equal dimension, estimated independently."""
    ga, gb = _as_grid(qa), _as_grid(qb)
    if sum(a - 1 for a in ga.sides) != sum(b - 1 for b in gb.sides):
        raise ValueError("cubes must have the same dimension")
    ea = estimate_spanning(McConfig(ga, p, samples, seed), Target("full-grid"))
    eb = estimate_spanning(McConfig(gb, p, samples, seed + 1), Target("full-grid"))
    ok = ea.mean <= eb.mean + 3 * math.hypot(ea.std_error, eb.std_error)
    return CubeComparison(ea, eb, ok)
