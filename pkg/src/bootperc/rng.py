"""Counter-based random streams keyed by (seed, replica, sample, block).

Each replica gets its own Philox key. Sample ``s`` of a replica always reads
the counter blocks ``[s*B, (s+1)*B)`` where ``B = ceil(cells / 4)``, so any
sample can be regenerated on its own and chunking never changes the draws.
"""

from __future__ import annotations

import numpy as np

_WORDS_PER_BLOCK = 4


def replica_key(base_seed: int, replica: int) -> np.ndarray:
    return np.random.SeedSequence([int(base_seed), int(replica)]).generate_state(2, np.uint64)


def blocks_per_sample(n_cells: int) -> int:
    return -(-n_cells // _WORDS_PER_BLOCK)


def uniforms(base_seed: int, replica: int, start: int, count: int, n_cells: int) -> np.ndarray:
    """Uniform doubles in [0, 1) for samples ``start .. start+count-1``, shape (count, n_cells)."""
    per = blocks_per_sample(n_cells)
    bg = np.random.Philox(key=replica_key(base_seed, replica))
    if start:
        bg.advance(start * per)
    raw = bg.random_raw(count * per * _WORDS_PER_BLOCK).reshape(count, per * _WORDS_PER_BLOCK)
    return (raw[:, :n_cells] >> np.uint64(11)).astype(np.float64) * 2.0**-53


class Stream:
    """Sequential reader over one replica's samples."""

    def __init__(self, base_seed: int, replica: int = 0, start: int = 0):
        self.base_seed = int(base_seed)
        self.replica = int(replica)
        self.cursor = int(start)

    def next(self, count: int, n_cells: int) -> np.ndarray:
        out = uniforms(self.base_seed, self.replica, self.cursor, count, n_cells)
        self.cursor += count
        return out
