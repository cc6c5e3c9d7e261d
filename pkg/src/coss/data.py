"""Dataset container, neighbour-enhanced batch composition, augmentation.

Labels ride along for evaluation only; the training path strips them by
construction and never looks at them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .knn import NeighborIndex, sample_neighbors
from .linalg import as_matrix


@dataclass(eq=False)
class Dataset:
    inputs: np.ndarray                    # (n, dim) float64
    labels: np.ndarray | None = None      # (n,) int64, evaluation only

    def __post_init__(self):
        self.inputs = as_matrix(self.inputs, "inputs")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.inputs.shape[0],):
                raise ValueError("labels length must equal the sample count")
            if self.labels.size and self.labels.min() < 0:
                raise ValueError("labels must be nonnegative")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def without_labels(self) -> "Dataset":
        """Label-stripped view handed to the distillation loop."""
        return Dataset(self.inputs, None)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if not np.array_equal(self.inputs, other.inputs):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


@dataclass
class BatchPlan:
    """Anchors plus their sampled neighbours, in a fixed layout.

    ``enhanced_indices`` holds the anchors first, then the k neighbours of
    each anchor in anchor order, so every batch is reproducible from the
    rng stream alone.
    """

    anchor_indices: np.ndarray = field(repr=False)
    enhanced_indices: np.ndarray = field(repr=False)


def epoch_batches(n: int, b: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Chunk a seeded permutation of [0, n) into ceil(n/b) batches.

    The final batch may be short; every sample anchors exactly one batch
    per epoch.
    """
    if b < 1:
        raise ValueError("batch_size ≥ 1")
    if b > n:
        raise ValueError("batch_size ≤ sample count")
    perm = rng.permutation(n)
    return [perm[start : start + b] for start in range(0, n, b)]


def compose_batch(anchors, index: NeighborIndex, k: int, rng: np.random.Generator) -> BatchPlan:
    """Append k sampled neighbours per anchor; k=0 reproduces the plain batch."""
    anchors = np.asarray(anchors, dtype=np.int64)
    if k > index.pool:
        raise ValueError("k exceeds pool")
    if k == 0:
        return BatchPlan(anchors, anchors.copy())
    picks = np.array(
        [sample_neighbors(index, int(a), k, rng) for a in anchors], dtype=np.int64
    )
    return BatchPlan(anchors, np.concatenate([anchors, picks.ravel()]))


def augment(X, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Additive Gaussian noise, entrywise: X + sigma * G."""
    if sigma < 0:
        raise ValueError("aug_sigma ≥ 0")
    A = as_matrix(X)
    if sigma == 0.0:
        return A.copy()
    return A + sigma * rng.standard_normal(A.shape)
