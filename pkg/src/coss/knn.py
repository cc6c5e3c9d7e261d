"""Offline neighbour pre-processing over teacher embeddings.

The index stores, for every sample, the ``pool`` most similar other
samples under teacher cosine similarity.  Training later subsamples
``k <= pool`` of them per anchor, so the index is built once, up front,
from un-augmented data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import l2_normalize


@dataclass(eq=False)
class NeighborIndex:
    """Per-sample candidate neighbours ranked by descending similarity."""

    n: int
    pool: int
    neighbors: np.ndarray = field(repr=False)  # (n, pool) int64

    def __post_init__(self):
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        if self.neighbors.shape != (self.n, self.pool):
            raise ValueError("neighbors shape does not match (n, pool)")
        if self.pool > self.n - 1:
            raise ValueError("pool too large")
        if self.neighbors.size:
            if self.neighbors.min() < 0 or self.neighbors.max() >= self.n:
                raise ValueError("neighbor index out of range")
        rows = np.arange(self.n)[:, None]
        if np.any(self.neighbors == rows):
            raise ValueError("row contains its own sample index")
        for i in range(self.n):
            if len(np.unique(self.neighbors[i])) != self.pool:
                raise ValueError("duplicate neighbor index in row")

    def __eq__(self, other):
        if not isinstance(other, NeighborIndex):
            return NotImplemented
        return (
            self.n == other.n
            and self.pool == other.pool
            and np.array_equal(self.neighbors, other.neighbors)
        )


def build_index(teacher_emb, pool: int, block_size: int = 256) -> NeighborIndex:
    """Rank every sample's ``pool`` nearest others by teacher cosine similarity.

    Ties are broken by lower sample index; a sample never appears in its
    own row.  Similarities are computed blockwise so the full N x N
    matrix is never materialised, but the result is identical to the
    dense definition.
    """
    E = l2_normalize(teacher_emb, axis="rows")
    n = E.shape[0]
    if pool < 1:
        raise ValueError("pool ≥ 1")
    if pool >= n:
        raise ValueError("pool too large")
    out = np.empty((n, pool), dtype=np.int64)
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        # einsum (not BLAS matmul) so identical candidate vectors produce
        # bit-identical similarities and the index tie-break is honoured
        sims = np.einsum("id,jd->ij", E[start:stop], E)
        sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        # stable sort on -sim keeps lower indices first among ties
        order = np.argsort(-sims, axis=1, kind="stable")
        out[start:stop] = order[:, :pool]
    return NeighborIndex(n=n, pool=pool, neighbors=out)


def sample_neighbors(index: NeighborIndex, i: int, k: int, rng: np.random.Generator) -> list[int]:
    """Draw ``k`` distinct neighbours of sample ``i``, uniformly without replacement."""
    if k < 0:
        raise ValueError("k ≥ 0")
    if k > index.pool:
        raise ValueError("k exceeds pool")
    if k == 0:
        return []
    row = index.neighbors[i]
    pick = rng.permutation(index.pool)[:k]
    return [int(row[j]) for j in pick]


def save_index(index: NeighborIndex, path) -> None:
    from . import io

    io.write_index(path, index)


def load_index(path) -> NeighborIndex:
    from . import io

    return io.read_index(path)
