"""Bundled desk-scale benchmark: Gaussian clusters plus a frozen random teacher.

Everything here is generated from fixed seeds so the benchmark is the
same bytes on every machine: 1000 samples in 10 clusters of 32-D, a
frozen 2-layer teacher embedding to 16-D, and a 2-layer student to 8-D
that needs a projection head to reach the teacher's width.
"""

from __future__ import annotations

import numpy as np

from .config import DistillConfig
from .data import Dataset
from .evaluate import knn_classify
from .models import MlpModel, MlpSpec, forward, init_model

N_SAMPLES = 1000
N_CLUSTERS = 10
INPUT_DIM = 32
TEACHER_DIM = 16
STUDENT_DIM = 8
N_TEST = 200
K_EVAL = 5

_DATA_SEED = 61804
_TEACHER_SEED = 2077
_SPLIT_SEED = 415


def make_benchmark_dataset() -> Dataset:
    """10 moderately separated Gaussian clusters, 100 samples each."""
    rng = np.random.default_rng(_DATA_SEED)
    centers = rng.normal(0.0, 1.0, size=(N_CLUSTERS, INPUT_DIM))
    per_cluster = N_SAMPLES // N_CLUSTERS
    inputs = np.concatenate(
        [
            centers[c] + rng.normal(0.0, 0.55, size=(per_cluster, INPUT_DIM))
            for c in range(N_CLUSTERS)
        ]
    )
    labels = np.repeat(np.arange(N_CLUSTERS), per_cluster)
    shuffle = np.random.default_rng(_DATA_SEED + 1).permutation(N_SAMPLES)
    return Dataset(inputs[shuffle], labels[shuffle])


def make_benchmark_teacher() -> MlpModel:
    return init_model(
        MlpSpec((INPUT_DIM, 48, TEACHER_DIM), hidden_activation="relu"),
        seed=_TEACHER_SEED,
    )


def benchmark_split(n: int = N_SAMPLES) -> tuple[np.ndarray, np.ndarray]:
    """Fixed train/test split used by every benchmark evaluation."""
    perm = np.random.default_rng(_SPLIT_SEED).permutation(n)
    return perm[N_TEST:], perm[:N_TEST]


def benchmark_config(**overrides) -> DistillConfig:
    base = dict(
        lam=1.0,
        beta=1.0,
        k=4,
        pool=16,
        batch_size=64,
        epochs=50,
        lr=0.5,
        momentum=0.9,
        weight_decay=0.0,
        aug_sigma=0.05,
        seed=0,
        loss_variant="coss",
        student_hidden=(48,),
        student_dim=STUDENT_DIM,
        student_activation="relu",
    )
    base.update(overrides)
    return DistillConfig(**base)


def embedding_accuracy(emb, labels, k_eval: int = K_EVAL) -> float:
    """k-NN accuracy of an embedding of the benchmark under the fixed split."""
    labels = np.asarray(labels)
    train_idx, test_idx = benchmark_split(len(labels))
    return knn_classify(
        emb[train_idx], labels[train_idx], emb[test_idx], labels[test_idx], k_eval
    )


def model_accuracy(model: MlpModel, dataset: Dataset, k_eval: int = K_EVAL) -> float:
    emb, _ = forward(model, dataset.inputs)
    return embedding_accuracy(emb, dataset.labels, k_eval)
